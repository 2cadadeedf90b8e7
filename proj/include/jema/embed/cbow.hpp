#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "jema/embed/vocab.hpp"
#include "jema/error.hpp"
#include "jema/io/binio.hpp"
#include "jema/matrix.hpp"
#include "jema/rng.hpp"
#include "jema/text/document.hpp"

namespace jema {

struct CbowOptions {
    int dimension = 300;
    int window = 5;
    int epochs = 10;
    int negatives = 5;
    double learning_rate = 0.025;

    void validate() const {
        if (window < 1) fail("cbow: window must be >= 1, got ", window);
        if (dimension < 1) fail("cbow: dimension must be >= 1, got ", dimension);
        if (epochs < 0) fail("cbow: epochs must be >= 0, got ", epochs);
        if (negatives < 1) fail("cbow: negatives must be >= 1, got ", negatives);
        if (!(learning_rate > 0.0)) fail("cbow: learning rate must be positive");
    }
};

// Trained token embeddings: one row per vocabulary token.
struct WordVectors {
    Vocabulary vocab;
    DenseMatrix matrix;  // |V| x dimension
    int dimension = 300;

    const double* row(int i) const { return matrix.row(i); }
};

namespace detail {

inline double cbow_sigmoid(double x) {
    if (x > 40.0) return 1.0;
    if (x < -40.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-x));
}

// unigram^0.75 negative-sampling table, deterministic given the vocabulary
inline std::vector<int> negative_table(const Vocabulary& vocab, std::size_t table_size) {
    double total = 0.0;
    for (long c : vocab.counts) total += std::pow(static_cast<double>(c), 0.75);
    if (!(total > 0.0)) fail("negative_table: vocabulary has no counted tokens");
    std::vector<int> table(table_size);
    int tok = 0;
    double cum = std::pow(static_cast<double>(vocab.counts[0]), 0.75) / total;
    for (std::size_t i = 0; i < table_size; ++i) {
        table[i] = tok;
        if (static_cast<double>(i + 1) / static_cast<double>(table_size) > cum &&
            tok + 1 < vocab.size()) {
            ++tok;
            cum += std::pow(static_cast<double>(vocab.counts[tok]), 0.75) / total;
        }
    }
    return table;
}

} // namespace detail

// Negative-sampling CBOW: the mean of the context input vectors predicts the
// center token against sampled negatives. Input vectors start uniform at
// +/- 0.5/dimension, output vectors at zero, and the learning rate decays
// linearly over the total number of center positions. Single-threaded and
// fully determined by the seed.
inline WordVectors train_cbow(const std::vector<std::vector<std::string>>& streams,
                              const Vocabulary& vocab, const CbowOptions& opt,
                              std::uint64_t seed) {
    opt.validate();
    if (vocab.size() == 0) fail("train_cbow: empty vocabulary");
    const int nv = vocab.size();
    const int dim = opt.dimension;

    SplitMix64 rng(seed);
    WordVectors wv;
    wv.vocab = vocab;
    wv.dimension = dim;
    wv.matrix = DenseMatrix(nv, dim);
    for (double& x : wv.matrix.data) x = (rng.uniform() - 0.5) / static_cast<double>(dim);
    DenseMatrix out(nv, dim);  // output (context-prediction) vectors, start at zero

    // map streams to vocabulary indices once; OOV positions drop out
    std::vector<std::vector<int>> indexed(streams.size());
    long total_centers = 0;
    for (std::size_t s = 0; s < streams.size(); ++s) {
        for (const std::string& tok : streams[s]) {
            const int idx = vocab.find(tok);
            if (idx >= 0) indexed[s].push_back(idx);
        }
        total_centers += static_cast<long>(indexed[s].size());
    }
    if (total_centers == 0 || opt.epochs == 0) return wv;

    const std::vector<int> table = detail::negative_table(vocab, 1u << 20);
    const double budget = static_cast<double>(total_centers) * opt.epochs;
    long processed = 0;
    std::vector<double> hidden(dim), err(dim);

    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        for (const std::vector<int>& sent : indexed) {
            const int n = static_cast<int>(sent.size());
            for (int t = 0; t < n; ++t) {
                const double alpha =
                    opt.learning_rate *
                    std::max(1e-4, 1.0 - static_cast<double>(processed) / budget);
                ++processed;

                // dynamic window shrink, the usual distance weighting
                const int shrink = static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.window)));
                const int reach = opt.window - shrink;
                int cw = 0;
                std::fill(hidden.begin(), hidden.end(), 0.0);
                for (int j = t - reach; j <= t + reach; ++j) {
                    if (j == t || j < 0 || j >= n) continue;
                    const double* v = wv.matrix.row(sent[j]);
                    for (int k = 0; k < dim; ++k) hidden[k] += v[k];
                    ++cw;
                }
                if (cw == 0) continue;
                for (int k = 0; k < dim; ++k) hidden[k] /= cw;

                const int center = sent[t];
                std::fill(err.begin(), err.end(), 0.0);
                for (int s = 0; s < opt.negatives + 1; ++s) {
                    int target;
                    double label;
                    if (s == 0) {
                        target = center;
                        label = 1.0;
                    } else {
                        target = table[rng.below(table.size())];
                        if (target == center) continue;
                        label = 0.0;
                    }
                    double* o = out.row(target);
                    double f = 0.0;
                    for (int k = 0; k < dim; ++k) f += hidden[k] * o[k];
                    const double g = (label - detail::cbow_sigmoid(f)) * alpha;
                    for (int k = 0; k < dim; ++k) {
                        err[k] += g * o[k];
                        o[k] += g * hidden[k];
                    }
                }
                for (int j = t - reach; j <= t + reach; ++j) {
                    if (j == t || j < 0 || j >= n) continue;
                    double* v = wv.matrix.row(sent[j]);
                    for (int k = 0; k < dim; ++k) v[k] += err[k] / cw;
                }
            }
        }
    }
    if (!wv.matrix.all_finite()) fail("train_cbow: non-finite embedding produced");
    return wv;
}

// Rank-weighted combination of the term vectors: sum of weight(t) * vector(t)
// over terms present in the vocabulary. Out-of-vocabulary terms contribute
// nothing; pass `dropped` to collect them for logging. All terms missing (or
// an empty list) yields the zero vector.
inline DenseMatrix key_term_feature(const std::vector<TermRecord>& terms,
                                    const WordVectors& wv,
                                    std::vector<std::string>* dropped = nullptr) {
    DenseMatrix feat(wv.dimension, 1);
    for (const TermRecord& t : terms) {
        const int idx = wv.vocab.find(t.term);
        if (idx < 0) {
            if (dropped) dropped->push_back(t.term);
            continue;
        }
        const double* v = wv.row(idx);
        for (int k = 0; k < wv.dimension; ++k) feat.data[k] += t.weight * v[k];
    }
    return feat;
}

// ---------------------------------------------------------------------------
// Persistence: magic, vocabulary table, row-major 64-bit reals, little-endian
// ---------------------------------------------------------------------------

inline constexpr char kWordVectorsMagic[] = "JEMAWV1";

inline void save_word_vectors(const WordVectors& wv, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail("save_word_vectors: cannot open '", path, "' for writing");
    io::write_bytes(os, kWordVectorsMagic, 7);
    io::write_u64le(os, static_cast<std::uint64_t>(wv.vocab.size()));
    io::write_u64le(os, static_cast<std::uint64_t>(wv.dimension));
    io::write_u64le(os, static_cast<std::uint64_t>(wv.vocab.min_count));
    for (int i = 0; i < wv.vocab.size(); ++i) {
        io::write_string(os, wv.vocab.tokens[i]);
        io::write_u64le(os, static_cast<std::uint64_t>(wv.vocab.counts[i]));
    }
    for (double x : wv.matrix.data) io::write_f64le(os, x);
    if (!os) fail("save_word_vectors: write to '", path, "' failed");
}

inline WordVectors load_word_vectors(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("load_word_vectors: cannot open '", path, "'");
    char magic[7];
    io::read_exact(is, magic, 7, "magic");
    if (std::string(magic, 7) != kWordVectorsMagic)
        fail("load_word_vectors: '", path, "' is not a word-vector file");
    const auto nv = io::read_u64le(is, "vocabulary size");
    const auto dim = io::read_u64le(is, "dimension");
    if (nv == 0 || dim == 0 || nv > (1u << 24) || dim > (1u << 20))
        fail("load_word_vectors: implausible header (", nv, " tokens, dim ", dim, ")");

    WordVectors wv;
    wv.dimension = static_cast<int>(dim);
    wv.vocab.min_count = static_cast<long>(io::read_u64le(is, "min count"));
    for (std::uint64_t i = 0; i < nv; ++i) {
        std::string tok = io::read_string(is, "token");
        wv.vocab.index_of[tok] = static_cast<int>(i);
        wv.vocab.tokens.push_back(std::move(tok));
        wv.vocab.counts.push_back(static_cast<long>(io::read_u64le(is, "token count")));
    }
    wv.matrix = DenseMatrix(static_cast<int>(nv), static_cast<int>(dim));
    for (double& x : wv.matrix.data) x = io::read_f64le(is, "embedding value");
    return wv;
}

} // namespace jema
