#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "jema/error.hpp"
#include "jema/text/extract.hpp"

namespace jema {

// Token vocabulary over the corpus token streams. Multi-word key terms are
// collapsed to single underscore-joined tokens before counting, so an entity
// like "pork loin" lives in the vocabulary as "pork_loin". Tokens are ordered
// most frequent first (ties lexicographic) to keep builds deterministic.
struct Vocabulary {
    std::map<std::string, int> index_of;
    std::vector<std::string> tokens;
    std::vector<long> counts;  // corpus occurrence count per token
    long min_count = 1;

    int size() const { return static_cast<int>(tokens.size()); }

    bool contains(const std::string& tok) const { return index_of.count(tok) > 0; }

    // -1 when the token is out of vocabulary
    int find(const std::string& tok) const {
        auto it = index_of.find(tok);
        return it == index_of.end() ? -1 : it->second;
    }

    int index(const std::string& tok) const {
        const int i = find(tok);
        if (i < 0) fail("vocabulary: unknown token '", tok, "'");
        return i;
    }
};

// Collapsed token stream per document, multi-word terms joined.
inline std::vector<std::vector<std::string>> corpus_token_streams(
    const std::vector<RecipeDocument>& docs,
    const std::vector<std::vector<TermRecord>>& per_doc_terms) {
    if (docs.size() != per_doc_terms.size())
        fail("corpus_token_streams: ", docs.size(), " documents but ",
             per_doc_terms.size(), " term lists");
    std::vector<std::vector<std::string>> streams(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d)
        streams[d] = doc_token_stream(docs[d], per_doc_terms[d]);
    return streams;
}

inline Vocabulary build_vocab(const std::vector<std::vector<std::string>>& streams,
                              long min_count = 1) {
    if (min_count < 1) fail("build_vocab: min_count must be >= 1, got ", min_count);
    std::map<std::string, long> freq;
    for (const auto& stream : streams)
        for (const std::string& tok : stream) freq[tok] += 1;
    if (freq.empty()) fail("build_vocab: empty corpus");

    std::vector<std::pair<long, std::string>> ranked;
    for (const auto& [tok, count] : freq)
        if (count >= min_count) ranked.push_back({-count, tok});
    std::sort(ranked.begin(), ranked.end());

    Vocabulary vocab;
    vocab.min_count = min_count;
    for (const auto& [neg, tok] : ranked) {
        vocab.index_of[tok] = static_cast<int>(vocab.tokens.size());
        vocab.tokens.push_back(tok);
        vocab.counts.push_back(-neg);
    }
    return vocab;
}

inline Vocabulary build_vocab(const std::vector<RecipeDocument>& docs,
                              const std::vector<std::vector<TermRecord>>& per_doc_terms,
                              long min_count = 1) {
    return build_vocab(corpus_token_streams(docs, per_doc_terms), min_count);
}

} // namespace jema
