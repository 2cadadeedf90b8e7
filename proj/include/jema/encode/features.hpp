#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "jema/embed/cbow.hpp"
#include "jema/error.hpp"
#include "jema/matrix.hpp"
#include "jema/text/document.hpp"
#include "jema/text/tokenize.hpp"

namespace jema {

// Recipe-side fused inputs: hashed instruction n-grams plus the rank-weighted
// key-term vector.
struct RecipeFeatures {
    DenseMatrix sequence;  // bins x 1
    DenseMatrix key_term;  // embedding dim x 1
};

// Image-side inputs: an externally supplied (or synthetic) visual vector and
// the document's category label.
struct ImageFeatures {
    DenseMatrix visual;  // visual dim x 1
    int category_label = 0;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace detail

// Instruction sequence pattern feature: counts of hashed 1- and 2-grams over
// each instruction sentence (2-grams never cross sentences), l2-normalized.
// No instructions (or none with tokens) gives the zero vector.
inline DenseMatrix sequence_feature(const std::vector<std::string>& instructions,
                                    int bins = 512) {
    if (bins < 1) fail("sequence_feature: bins must be >= 1, got ", bins);
    DenseMatrix feat(bins, 1);
    for (const std::string& line : instructions) {
        const std::vector<std::string> toks = tokenize(line);
        for (std::size_t i = 0; i < toks.size(); ++i) {
            feat.data[detail::fnv1a64(toks[i]) % bins] += 1.0;
            if (i + 1 < toks.size())
                feat.data[detail::fnv1a64(toks[i] + " " + toks[i + 1]) % bins] += 1.0;
        }
    }
    double norm = 0.0;
    for (double x : feat.data) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : feat.data) x /= norm;
    }
    return feat;
}

inline RecipeFeatures recipe_features(const RecipeDocument& doc,
                                      const std::vector<TermRecord>& ranked_terms,
                                      const WordVectors& vectors, int bins = 512,
                                      std::vector<std::string>* dropped = nullptr) {
    RecipeFeatures f;
    f.sequence = sequence_feature(doc.instructions, bins);
    f.key_term = key_term_feature(ranked_terms, vectors, dropped);
    return f;
}

} // namespace jema
