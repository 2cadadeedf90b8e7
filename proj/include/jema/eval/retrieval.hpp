#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jema/data/batching.hpp"
#include "jema/data/pair_example.hpp"
#include "jema/encode/encoders.hpp"
#include "jema/error.hpp"
#include "jema/matrix.hpp"
#include "jema/rng.hpp"
#include "jema/train/trainer.hpp"

namespace jema {

// Retrieval protocol: rank the other modality by Euclidean distance, score
// with the median matched rank (MedR) and recall at K, and report means over
// seeded subset draws in both query directions.

enum class Direction { ImageToRecipe, RecipeToImage };

inline const char* direction_name(Direction d) {
    return d == Direction::ImageToRecipe ? "image-to-recipe" : "recipe-to-image";
}

inline Direction direction_from_name(const std::string& name) {
    if (name == "image-to-recipe") return Direction::ImageToRecipe;
    if (name == "recipe-to-image") return Direction::RecipeToImage;
    fail("unknown retrieval direction '", name,
         "', expected image-to-recipe or recipe-to-image");
}

// Rank of every candidate column by distance to the query, 1-based, ascending,
// distance ties broken toward the lower column index. Matrices hold one
// embedding per column. Squared distance decides the order; it is monotone in
// the true distance and avoids a sqrt that could merge distinct values.
inline std::vector<int> rank_candidates(const DenseMatrix& query,
                                        const DenseMatrix& candidates) {
    if (query.cols != 1)
        fail("rank_candidates: query must be a single column, got ", query.cols);
    if (candidates.cols < 1) fail("rank_candidates: candidate set is empty");
    if (query.rows != candidates.rows)
        fail("rank_candidates: query dimension ", query.rows,
             " does not match candidate dimension ", candidates.rows);

    const int m = candidates.cols;
    std::vector<double> dist(static_cast<std::size_t>(m), 0.0);
    for (int i = 0; i < query.rows; ++i) {
        const double q = query.data[static_cast<std::size_t>(i)];
        const double* crow = candidates.row(i);
        for (int j = 0; j < m; ++j) {
            const double diff = crow[j] - q;
            dist[static_cast<std::size_t>(j)] += diff * diff;
        }
    }

    std::vector<int> order(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) order[static_cast<std::size_t>(j)] = j;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = dist[static_cast<std::size_t>(a)];
        const double db = dist[static_cast<std::size_t>(b)];
        if (da != db) return da < db;
        return a < b;
    });
    std::vector<int> ranks(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r + 1;
    return ranks;
}

// Median with the even-count convention: mean of the two middle values.
inline double median_rank(std::vector<int> ranks) {
    if (ranks.empty()) fail("median_rank: no ranks");
    std::sort(ranks.begin(), ranks.end());
    const std::size_t n = ranks.size();
    if (n % 2 == 1) return static_cast<double>(ranks[n / 2]);
    return 0.5 * static_cast<double>(ranks[n / 2 - 1] + ranks[n / 2]);
}

// Scores for one query/candidate set: the rank each query assigns to its own
// match, their median, and the percentage retrieved within each cutoff.
struct SubsetMetrics {
    std::vector<int> matched_ranks;
    double medr = 0.0;
    std::map<int, double> recall_at;
};

inline SubsetMetrics medr_recall_at_k(const DenseMatrix& queries,
                                      const DenseMatrix& candidates,
                                      const std::vector<int>& matched,
                                      const std::vector<int>& k_list) {
    if (queries.cols < 1) fail("medr_recall_at_k: query set is empty");
    if (queries.rows != candidates.rows)
        fail("medr_recall_at_k: query dimension ", queries.rows,
             " does not match candidate dimension ", candidates.rows);
    if (static_cast<int>(matched.size()) != queries.cols)
        fail("medr_recall_at_k: ", matched.size(), " match indices for ", queries.cols,
             " queries");
    std::vector<char> taken(static_cast<std::size_t>(candidates.cols), 0);
    for (const int m : matched) {
        if (m < 0 || m >= candidates.cols)
            fail("medr_recall_at_k: match index ", m, " outside ", candidates.cols,
                 " candidates");
        if (taken[static_cast<std::size_t>(m)])
            fail("medr_recall_at_k: candidate ", m,
                 " is matched to two queries; matches must be one to one");
        taken[static_cast<std::size_t>(m)] = 1;
    }
    for (const int k : k_list)
        if (k < 1) fail("medr_recall_at_k: recall cutoff must be >= 1, got ", k);

    SubsetMetrics out;
    DenseMatrix q(queries.rows, 1);
    for (int c = 0; c < queries.cols; ++c) {
        for (int i = 0; i < queries.rows; ++i)
            q.data[static_cast<std::size_t>(i)] = queries.at(i, c);
        const std::vector<int> ranks = rank_candidates(q, candidates);
        out.matched_ranks.push_back(ranks[static_cast<std::size_t>(matched[static_cast<std::size_t>(c)])]);
    }
    out.medr = median_rank(out.matched_ranks);
    const double total = static_cast<double>(out.matched_ranks.size());
    for (const int k : k_list) {
        int hits = 0;
        for (const int r : out.matched_ranks)
            if (r <= k) ++hits;
        out.recall_at[k] = 100.0 * static_cast<double>(hits) / total;
    }
    return out;
}

// Aggregate over subset draws for one query direction. The headline MedR is
// the mean of per-subset medians (mean-of-medians); recalls are plain means.
struct RetrievalReport {
    Direction direction = Direction::ImageToRecipe;
    int subset_size = 0;
    double medr = 0.0;
    double r_at_1 = 0.0;
    double r_at_5 = 0.0;
    double r_at_10 = 0.0;
    std::vector<double> per_subset_medr;
    std::vector<double> per_subset_r1;
    std::vector<double> per_subset_r5;
    std::vector<double> per_subset_r10;

    void validate() const {
        if (subset_size < 1) fail("retrieval report: subset size must be >= 1");
        const std::size_t n = per_subset_medr.size();
        if (n == 0) fail("retrieval report: no subsets");
        if (per_subset_r1.size() != n || per_subset_r5.size() != n ||
            per_subset_r10.size() != n)
            fail("retrieval report: per-subset series have different lengths");
        auto check = [&](double med, double r1, double r5, double r10) {
            if (!(med >= 1.0 && med <= static_cast<double>(subset_size)))
                fail("retrieval report: MedR ", med, " outside [1, ", subset_size, "]");
            for (const double r : {r1, r5, r10})
                if (!(r >= 0.0 && r <= 100.0))
                    fail("retrieval report: recall ", r, " outside [0, 100]");
            if (r1 > r5 || r5 > r10)
                fail("retrieval report: recall must be non-decreasing in K, got R@1 ", r1,
                     ", R@5 ", r5, ", R@10 ", r10);
        };
        check(medr, r_at_1, r_at_5, r_at_10);
        for (std::size_t s = 0; s < n; ++s)
            check(per_subset_medr[s], per_subset_r1[s], per_subset_r5[s],
                  per_subset_r10[s]);
    }
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (const double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

} // namespace detail

// The subset protocol: draw `n_subsets` seeded subsets without replacement,
// score each with the paired example as the single correct answer, and
// average. A subset covering the whole corpus collapses to one draw since
// every draw would contain the same examples. The checkpoint is read only.
inline RetrievalReport subset_protocol_eval(const Checkpoint& ck,
                                            const std::vector<PairExample>& examples,
                                            int subset_size, int n_subsets,
                                            std::uint64_t seed, Direction direction) {
    ck.validate();
    if (subset_size < 1)
        fail("subset_protocol_eval: subset size must be >= 1, got ", subset_size);
    if (n_subsets < 1)
        fail("subset_protocol_eval: subset count must be >= 1, got ", n_subsets);
    const int total = static_cast<int>(examples.size());
    validate_examples(examples, ck.categories.size());
    if (subset_size > total)
        fail("subset_protocol_eval: corpus has ", total,
             " examples, fewer than the requested subset size ", subset_size,
             "; pass a custom subset size of at most ", total);
    if (subset_size == total) n_subsets = 1;

    // Embed the whole corpus once; subsets only gather columns.
    std::vector<int> all(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) all[static_cast<std::size_t>(i)] = i;
    const TrainingBatch feats = detail::assemble_batch(examples, all);
    const DenseMatrix recipe_emb = encode_recipe_batch(ck.encoder, feats.recipe_features);
    const DenseMatrix image_emb =
        encode_image_batch(ck.encoder, feats.visual_features, feats.labels);
    const DenseMatrix& query_side =
        direction == Direction::ImageToRecipe ? image_emb : recipe_emb;
    const DenseMatrix& candidate_side =
        direction == Direction::ImageToRecipe ? recipe_emb : image_emb;

    RetrievalReport report;
    report.direction = direction;
    report.subset_size = subset_size;

    const SplitMix64 base(seed);
    std::vector<int> identity(static_cast<std::size_t>(subset_size));
    for (int i = 0; i < subset_size; ++i) identity[static_cast<std::size_t>(i)] = i;

    for (int s = 0; s < n_subsets; ++s) {
        SplitMix64 rng = base.fork(static_cast<std::uint64_t>(s));
        const std::vector<std::size_t> pick = rng.sample_without_replacement(
            static_cast<std::size_t>(total), static_cast<std::size_t>(subset_size));

        DenseMatrix queries(query_side.rows, subset_size);
        DenseMatrix candidates(candidate_side.rows, subset_size);
        for (int j = 0; j < subset_size; ++j) {
            const int src = static_cast<int>(pick[static_cast<std::size_t>(j)]);
            for (int i = 0; i < queries.rows; ++i) queries.at(i, j) = query_side.at(i, src);
            for (int i = 0; i < candidates.rows; ++i)
                candidates.at(i, j) = candidate_side.at(i, src);
        }

        const SubsetMetrics m = medr_recall_at_k(queries, candidates, identity, {1, 5, 10});
        report.per_subset_medr.push_back(m.medr);
        report.per_subset_r1.push_back(m.recall_at.at(1));
        report.per_subset_r5.push_back(m.recall_at.at(5));
        report.per_subset_r10.push_back(m.recall_at.at(10));
    }

    report.medr = detail::mean_of(report.per_subset_medr);
    report.r_at_1 = detail::mean_of(report.per_subset_r1);
    report.r_at_5 = detail::mean_of(report.per_subset_r5);
    report.r_at_10 = detail::mean_of(report.per_subset_r10);
    report.validate();
    return report;
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_real(double v) {
    std::ostringstream os;
    os << std::setprecision(15) << v;
    return os.str();
}

} // namespace detail

// One row per (direction, subset size, metric); the aggregation column names
// how the mean was formed and the trailing columns hold per-subset values.
// Reports with fewer subsets than the widest leave their tail cells empty.
inline void write_report_csv(std::ostream& os, const std::vector<RetrievalReport>& reports) {
    if (reports.empty()) fail("write_report_csv: no reports");
    std::size_t widest = 0;
    for (const RetrievalReport& r : reports)
        widest = std::max(widest, r.per_subset_medr.size());

    os << "direction,subset_size,metric,aggregation,mean";
    for (std::size_t s = 0; s < widest; ++s) os << ",subset_" << (s + 1);
    os << "\n";

    for (const RetrievalReport& r : reports) {
        r.validate();
        auto row = [&](const char* metric, const char* agg, double mean,
                       const std::vector<double>& per_subset) {
            os << direction_name(r.direction) << "," << r.subset_size << "," << metric
               << "," << agg << "," << detail::fmt_real(mean);
            for (std::size_t s = 0; s < widest; ++s) {
                os << ",";
                if (s < per_subset.size()) os << detail::fmt_real(per_subset[s]);
            }
            os << "\n";
        };
        row("MedR", "mean-of-medians", r.medr, r.per_subset_medr);
        row("R@1", "mean", r.r_at_1, r.per_subset_r1);
        row("R@5", "mean", r.r_at_5, r.per_subset_r5);
        row("R@10", "mean", r.r_at_10, r.per_subset_r10);
    }
}

inline nlohmann::json report_to_json(const RetrievalReport& r) {
    r.validate();
    return nlohmann::json{
        {"direction", direction_name(r.direction)},
        {"subset_size", r.subset_size},
        {"subsets", r.per_subset_medr.size()},
        {"medr",
         {{"value", r.medr},
          {"aggregation", "mean-of-medians"},
          {"per_subset", r.per_subset_medr}}},
        {"r_at_1", {{"value", r.r_at_1}, {"per_subset", r.per_subset_r1}}},
        {"r_at_5", {{"value", r.r_at_5}, {"per_subset", r.per_subset_r5}}},
        {"r_at_10", {{"value", r.r_at_10}, {"per_subset", r.per_subset_r10}}},
    };
}

inline void write_report_json(std::ostream& os, const std::vector<RetrievalReport>& reports) {
    if (reports.empty()) fail("write_report_json: no reports");
    nlohmann::json arr = nlohmann::json::array();
    for (const RetrievalReport& r : reports) arr.push_back(report_to_json(r));
    os << arr.dump(2) << "\n";
}

} // namespace jema
