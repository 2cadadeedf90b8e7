#pragma once

#include <map>
#include <string>
#include <vector>

#include "jema/text/document.hpp"
#include "jema/text/lexicon.hpp"
#include "jema/text/tokenize.hpp"

namespace jema {

namespace detail {

// Greedy leftmost scan; at each position the longest bank entry wins.
// Returns matches as (token offset, token length, joined entry).
struct BankMatch {
    std::size_t pos;
    std::size_t len;
    std::string joined;
};

inline std::vector<BankMatch> longest_match_scan(const std::vector<std::string>& tokens,
                                                 const LexiconBank& bank) {
    std::vector<BankMatch> out;
    if (bank.empty()) return out;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t hit_len = 0;
        std::string hit;
        const std::size_t cap = std::min(bank.max_tokens, tokens.size() - i);
        for (std::size_t len = cap; len >= 1; --len) {
            std::string joined = tokens[i];
            for (std::size_t k = 1; k < len; ++k) {
                joined.push_back(' ');
                joined += tokens[i + k];
            }
            if (bank.contains_joined(joined)) {
                hit_len = len;
                hit = std::move(joined);
                break;
            }
        }
        if (hit_len > 0) {
            out.push_back({i, hit_len, std::move(hit)});
            i += hit_len;
        } else {
            ++i;
        }
    }
    return out;
}

// Accumulates occurrence counts while keeping first-seen order.
class TermCollector {
public:
    void bump(const std::string& term, TermKind kind, double by = 1.0) {
        auto it = index_.find(term);
        if (it == index_.end()) {
            index_[term] = records_.size();
            records_.push_back({term, kind, by});
        } else {
            records_[it->second].weight += by;
        }
    }

    std::vector<TermRecord> take() { return std::move(records_); }

private:
    std::map<std::string, std::size_t> index_;
    std::vector<TermRecord> records_;
};

inline std::string underscored(const std::string& space_joined) {
    std::string out = space_joined;
    for (char& c : out)
        if (c == ' ') c = '_';
    return out;
}

} // namespace detail

// Ingredient entity extraction over the document's ingredient lines. The
// candidate pass is a greedy leftmost-longest scan against the lexicon; any
// entry occurrence the emitted spans do not fully cover is then emitted too,
// so an overlapping entity is never shadowed while short entries inside a
// longer match ("pepper" in "black pepper") stay excluded. A line yielding
// nothing at token level gets a recovery pass that pulls out every lexicon
// entry contained anywhere in the line (substring containment on the
// space-joined tokens), which recovers entities hiding in unparseable lines.
// Weights are occurrence counts.
inline std::vector<TermRecord> extract_ingredient_entities(const RecipeDocument& doc,
                                                           const EntityLexicon& lexicon) {
    doc.validate();
    if (lexicon.ingredients.empty())
        fail("extract_ingredient_entities: ingredient lexicon is empty");
    const LexiconBank& bank = lexicon.ingredients;
    detail::TermCollector collect;
    for (const std::string& line : doc.ingredient_lines) {
        const std::vector<std::string> tokens = tokenize(line);
        if (tokens.empty()) continue;
        const auto matches = detail::longest_match_scan(tokens, bank);
        if (matches.empty()) {
            // recovery pass
            const std::string joined = join_tokens(tokens, ' ');
            for (const std::string& entry : bank.entries)
                if (joined.find(entry) != std::string::npos)
                    collect.bump(detail::underscored(entry), TermKind::Ingredient);
            continue;
        }
        for (const auto& m : matches)
            collect.bump(detail::underscored(m.joined), TermKind::Ingredient);
        // uncovered-occurrence sweep; emitted spans cover their sub-spans,
        // and position-ascending, length-descending order emits a container
        // before anything it contains
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (const auto& m : matches) spans.push_back({m.pos, m.len});
        auto covered = [&](std::size_t pos, std::size_t len) {
            for (const auto& [sp, sl] : spans)
                if (sp <= pos && pos + len <= sp + sl) return true;
            return false;
        };
        for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
            const std::size_t cap = std::min(bank.max_tokens, tokens.size() - pos);
            for (std::size_t len = cap; len >= 1; --len) {
                if (covered(pos, len)) continue;
                std::string joined = tokens[pos];
                for (std::size_t k = 1; k < len; ++k) {
                    joined.push_back(' ');
                    joined += tokens[pos + k];
                }
                if (bank.contains_joined(joined)) {
                    collect.bump(detail::underscored(joined), TermKind::Ingredient);
                    spans.push_back({pos, len});
                }
            }
        }
    }
    return collect.take();
}

// Utensil and action terms from the instruction sentences. Ingredient
// entities are removed from the token stream first; matching is token-level,
// so "pan" never fires inside "pancetta". Utensil records precede action
// records, each in first-occurrence order, with occurrence counts retained.
inline std::vector<TermRecord> extract_utensils_actions(const RecipeDocument& doc,
                                                        const EntityLexicon& lexicon) {
    detail::TermCollector utensils, actions;
    for (const std::string& sentence : doc.instructions) {
        std::vector<std::string> tokens = tokenize(sentence);
        if (tokens.empty()) continue;
        if (!lexicon.ingredients.empty()) {
            const auto hits = detail::longest_match_scan(tokens, lexicon.ingredients);
            std::vector<char> drop(tokens.size(), 0);
            for (const auto& h : hits)
                for (std::size_t k = 0; k < h.len; ++k) drop[h.pos + k] = 1;
            std::vector<std::string> kept;
            for (std::size_t i = 0; i < tokens.size(); ++i)
                if (!drop[i]) kept.push_back(std::move(tokens[i]));
            tokens = std::move(kept);
        }
        for (const auto& m : detail::longest_match_scan(tokens, lexicon.utensils))
            utensils.bump(detail::underscored(m.joined), TermKind::Utensil);
        for (const auto& m : detail::longest_match_scan(tokens, lexicon.actions))
            actions.bump(detail::underscored(m.joined), TermKind::Action);
    }
    std::vector<TermRecord> out = utensils.take();
    for (TermRecord& r : actions.take()) out.push_back(std::move(r));
    return out;
}

// All key terms of a document: ingredients, then utensils, then actions.
inline std::vector<TermRecord> extract_terms(const RecipeDocument& doc,
                                             const EntityLexicon& lexicon) {
    std::vector<TermRecord> out = extract_ingredient_entities(doc, lexicon);
    for (TermRecord& r : extract_utensils_actions(doc, lexicon)) out.push_back(std::move(r));
    return out;
}

// The document's full token stream (title, ingredient lines, instructions)
// with every multi-word key term collapsed to its underscore form. Shared by
// the co-occurrence ranker and the word-embedding vocabulary so both see the
// same surface forms.
inline std::vector<std::string> doc_token_stream(const RecipeDocument& doc,
                                                 const std::vector<TermRecord>& terms) {
    LexiconBank joinable;
    for (const TermRecord& t : terms)
        if (t.term.find('_') != std::string::npos) {
            std::string spaced = t.term;
            for (char& c : spaced)
                if (c == '_') c = ' ';
            joinable.add(spaced);
        }

    std::vector<std::string> stream;
    auto feed = [&](const std::string& text) {
        std::vector<std::string> tokens = tokenize(text);
        if (tokens.empty()) return;
        if (joinable.empty()) {
            for (std::string& t : tokens) stream.push_back(std::move(t));
            return;
        }
        const auto hits = detail::longest_match_scan(tokens, joinable);
        std::size_t h = 0;
        for (std::size_t i = 0; i < tokens.size();) {
            if (h < hits.size() && hits[h].pos == i) {
                stream.push_back(detail::underscored(hits[h].joined));
                i += hits[h].len;
                ++h;
            } else {
                stream.push_back(std::move(tokens[i]));
                ++i;
            }
        }
    };
    feed(doc.title);
    for (const std::string& line : doc.ingredient_lines) feed(line);
    for (const std::string& sentence : doc.instructions) feed(sentence);
    return stream;
}

} // namespace jema
