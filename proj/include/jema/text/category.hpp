#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "jema/error.hpp"
#include "jema/text/document.hpp"
#include "jema/text/tokenize.hpp"

namespace jema {

// Corpus-level category assignment state: the label space plus the title
// n-gram statistics that assign_category consults. Built once per corpus; a
// document is assigned the most frequent corpus-wide title bigram that is a
// space member (then unigram). Documents matching nothing get their most
// TFIDF-salient title token promoted into the space during the build, so
// every document lands on a real label and no background class exists.
struct CategoryModel {
    CategorySpace space;
    std::map<std::string, long> bigram_docs;   // corpus-wide doc frequency of title bigrams
    std::map<std::string, long> unigram_docs;  // same for title unigrams
};

namespace detail {

inline std::vector<std::string> title_bigrams(const std::vector<std::string>& toks) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 1 < toks.size(); ++i)
        out.push_back(toks[i] + "_" + toks[i + 1]);
    return out;
}

// Highest corpus count wins; ties go to the earliest position in the title.
inline const std::string* best_member(const std::vector<std::string>& grams,
                                      const CategorySpace& space,
                                      const std::map<std::string, long>& counts) {
    const std::string* best = nullptr;
    long best_count = -1;
    for (const std::string& g : grams) {
        if (!space.contains(g)) continue;
        const auto it = counts.find(g);
        const long c = it == counts.end() ? 0 : it->second;
        if (c > best_count) {
            best_count = c;
            best = &g;
        }
    }
    return best;
}

} // namespace detail

// Assigns a document to a label of the model's space; errors on an empty
// title or when the title matches no member (the latter means the model was
// built from a different corpus).
inline int assign_category(const RecipeDocument& doc, const CategoryModel& model) {
    const std::vector<std::string> toks = tokenize(doc.title);
    if (toks.empty()) fail("assign_category: document '", doc.id, "' has an empty title");
    const std::vector<std::string> bigrams = detail::title_bigrams(toks);
    if (const std::string* bg = detail::best_member(bigrams, model.space, model.bigram_docs))
        return model.space.index(*bg);
    if (const std::string* ug = detail::best_member(toks, model.space, model.unigram_docs))
        return model.space.index(*ug);
    fail("assign_category: title of document '", doc.id,
         "' matches no label; build the category space over the corpus containing it");
}

// Builds the label space over a corpus. Seed labels are the title bigrams
// seen in at least `min_bigram_docs` documents (most frequent first). Any
// document still uncovered promotes its most TFIDF-salient title token into
// the space, in corpus order, so assignment is total by construction.
inline CategoryModel build_category_model(const std::vector<RecipeDocument>& docs,
                                          long min_bigram_docs = 2) {
    if (docs.empty()) fail("build_category_model: empty corpus");
    CategoryModel model;

    std::vector<std::vector<std::string>> title_toks(docs.size());
    std::map<std::string, long> tok_df;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        title_toks[d] = tokenize(docs[d].title);
        if (title_toks[d].empty())
            fail("build_category_model: document '", docs[d].id, "' has an empty title");
        std::map<std::string, bool> seen_tok, seen_bi, seen_un;
        for (const std::string& b : detail::title_bigrams(title_toks[d]))
            if (!seen_bi[b]) {
                seen_bi[b] = true;
                model.bigram_docs[b] += 1;
            }
        for (const std::string& t : title_toks[d]) {
            if (!seen_un[t]) {
                seen_un[t] = true;
                model.unigram_docs[t] += 1;
            }
            if (!seen_tok[t]) {
                seen_tok[t] = true;
                tok_df[t] += 1;
            }
        }
    }

    // seed: frequent bigrams, most frequent first, ties lexicographic
    std::vector<std::pair<long, std::string>> ranked;
    for (const auto& [bigram, count] : model.bigram_docs)
        if (count >= min_bigram_docs) ranked.push_back({-count, bigram});
    std::sort(ranked.begin(), ranked.end());
    for (const auto& [neg, bigram] : ranked) model.space.add(bigram);

    // promote a salient title token for every document the seed misses
    const double n = static_cast<double>(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const std::vector<std::string>& toks = title_toks[d];
        const std::vector<std::string> bigrams = detail::title_bigrams(toks);
        if (detail::best_member(bigrams, model.space, model.bigram_docs)) continue;
        if (detail::best_member(toks, model.space, model.unigram_docs)) continue;
        std::map<std::string, double> tf;
        for (const std::string& t : toks) tf[t] += 1.0;
        const std::string* best = nullptr;
        double best_sal = -1.0;
        for (const std::string& t : toks) {  // earliest position wins ties
            const double sal = (tf[t] / static_cast<double>(toks.size())) *
                               std::log(n / static_cast<double>(tok_df[t]));
            if (sal > best_sal) {
                best_sal = sal;
                best = &t;
            }
        }
        model.space.add(*best);
    }
    return model;
}

} // namespace jema
