#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "jema/error.hpp"
#include "jema/matrix.hpp"
#include "jema/text/document.hpp"
#include "jema/text/extract.hpp"

namespace jema {

// ---------------------------------------------------------------------------
// TFIDF
// ---------------------------------------------------------------------------

// weight(t, d) = (count(t in d) / total terms in d) * ln(N / df(t)), then
// l1-normalized per document. Input weights are the occurrence counts the
// extractors produce. A term present in every document keeps weight zero; if
// a whole document degenerates to zeros its list stays all-zero rather than
// being renormalized.
inline std::vector<std::vector<TermRecord>> rank_terms_tfidf(
    const std::vector<std::vector<TermRecord>>& per_doc) {
    const double n_docs = static_cast<double>(per_doc.size());
    std::map<std::string, double> df;
    for (const auto& terms : per_doc) {
        std::map<std::string, bool> seen;
        for (const TermRecord& t : terms)
            if (!seen[t.term]) {
                seen[t.term] = true;
                df[t.term] += 1.0;
            }
    }

    std::vector<std::vector<TermRecord>> out = per_doc;
    for (auto& terms : out) {
        double total = 0.0;
        for (const TermRecord& t : terms) {
            if (t.weight < 0.0) fail("rank_terms_tfidf: negative count for term '", t.term, "'");
            total += t.weight;
        }
        if (total <= 0.0) continue;
        double sum = 0.0;
        for (TermRecord& t : terms) {
            t.weight = (t.weight / total) * std::log(n_docs / df[t.term]);
            sum += t.weight;
        }
        if (sum > 0.0)
            for (TermRecord& t : terms) t.weight /= sum;
    }
    return out;
}

// ---------------------------------------------------------------------------
// TextRank
// ---------------------------------------------------------------------------

struct TextRankOptions {
    int window = 4;          // tokens i, j co-occur when j - i < window
    double damping = 0.85;
    double tol = 1e-8;
    int max_iterations = 200;
};

// Damped weighted PageRank over an undirected graph given as a symmetric
// adjacency matrix: WS(v) = (1-d) + d * sum_u (w_uv / deg(u)) * WS(u).
// Isolated vertices settle at (1-d). Raw scores, no normalization.
inline std::vector<double> textrank_scores(const DenseMatrix& adjacency,
                                           const TextRankOptions& opt = {}) {
    const int n = adjacency.rows;
    if (adjacency.cols != n) fail("textrank_scores: adjacency must be square");
    std::vector<double> degree(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double w = adjacency.at(i, j);
            if (w < 0.0) fail("textrank_scores: negative edge weight at (", i, ",", j, ")");
            degree[i] += w;
        }
    std::vector<double> score(n, 1.0), next(n);
    for (int it = 0; it < opt.max_iterations; ++it) {
        double delta = 0.0;
        for (int v = 0; v < n; ++v) {
            double acc = 0.0;
            for (int u = 0; u < n; ++u) {
                const double w = adjacency.at(u, v);
                if (w > 0.0) acc += w / degree[u] * score[u];
            }
            next[v] = (1.0 - opt.damping) + opt.damping * acc;
            delta = std::max(delta, std::fabs(next[v] - score[v]));
        }
        score.swap(next);
        if (delta < opt.tol) break;
    }
    return score;
}

// Ranks a document's terms by co-occurrence centrality. The graph is built
// over the document token stream (multi-word terms collapsed); two term
// occurrences within `window` tokens of each other add an edge. Scores are
// l1-normalized into the weight field; terms never seen in the stream are
// isolated vertices and get the base score.
inline std::vector<TermRecord> rank_terms_textrank(const RecipeDocument& doc,
                                                   const std::vector<TermRecord>& terms,
                                                   const TextRankOptions& opt = {}) {
    if (opt.window < 1) fail("rank_terms_textrank: window must be >= 1");
    std::vector<TermRecord> out = terms;
    if (out.empty()) return out;

    std::map<std::string, int> node_of;
    for (std::size_t i = 0; i < out.size(); ++i)
        if (!node_of.count(out[i].term)) node_of[out[i].term] = static_cast<int>(node_of.size());
    const int n = static_cast<int>(node_of.size());

    const std::vector<std::string> stream = doc_token_stream(doc, terms);
    std::vector<int> stream_nodes(stream.size(), -1);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        auto it = node_of.find(stream[i]);
        if (it != node_of.end()) stream_nodes[i] = it->second;
    }

    DenseMatrix adj(n, n);
    for (std::size_t i = 0; i < stream.size(); ++i) {
        if (stream_nodes[i] < 0) continue;
        for (std::size_t j = i + 1; j < stream.size() && j - i < static_cast<std::size_t>(opt.window); ++j) {
            if (stream_nodes[j] < 0 || stream_nodes[i] == stream_nodes[j]) continue;
            adj.at(stream_nodes[i], stream_nodes[j]) += 1.0;
            adj.at(stream_nodes[j], stream_nodes[i]) += 1.0;
        }
    }

    const std::vector<double> score = textrank_scores(adj, opt);
    double sum = 0.0;
    for (double s : score) sum += s;
    for (TermRecord& t : out) t.weight = score[node_of[t.term]] / sum;
    return out;
}

// ---------------------------------------------------------------------------
// Threshold filter
// ---------------------------------------------------------------------------

// Drops terms with weight < threshold. Zero keeps everything; the engine's
// default is no filtering, which is also where retrieval quality peaked.
inline std::vector<TermRecord> filter_terms(const std::vector<TermRecord>& terms,
                                            double threshold) {
    if (threshold < 0.0) fail("filter_terms: negative threshold ", threshold);
    std::vector<TermRecord> out;
    for (const TermRecord& t : terms)
        if (t.weight >= threshold) out.push_back(t);
    return out;
}

} // namespace jema
