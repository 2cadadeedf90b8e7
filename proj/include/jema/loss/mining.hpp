#pragma once

#include <string>
#include <vector>

#include "jema/error.hpp"
#include "jema/matrix.hpp"

namespace jema {

// One aligned batch of encoded pairs: row i of each matrix is pair i.
struct EmbeddingBatch {
    DenseMatrix recipes;  // N x d
    DenseMatrix images;   // N x d
    std::vector<int> labels;
    std::vector<std::string> pair_ids;

    int size() const { return recipes.rows; }

    void validate() const {
        if (recipes.rows != images.rows || recipes.cols != images.cols)
            fail("embedding batch: recipe block ", recipes.rows, "x", recipes.cols,
                 " does not match image block ", images.rows, "x", images.cols);
        if (static_cast<int>(labels.size()) != recipes.rows)
            fail("embedding batch: ", recipes.rows, " pairs but ", labels.size(), " labels");
        if (!pair_ids.empty() && static_cast<int>(pair_ids.size()) != recipes.rows)
            fail("embedding batch: ", recipes.rows, " pairs but ", pair_ids.size(), " ids");
    }
};

// Column-major (d x N) encoder output folded into row-major batch form.
inline EmbeddingBatch make_embedding_batch(const DenseMatrix& recipe_cols,
                                           const DenseMatrix& image_cols,
                                           std::vector<int> labels,
                                           std::vector<std::string> pair_ids = {}) {
    EmbeddingBatch b;
    b.recipes = transposed(recipe_cols);
    b.images = transposed(image_cols);
    b.labels = std::move(labels);
    b.pair_ids = std::move(pair_ids);
    b.validate();
    return b;
}

enum class AnchorModality { Recipe, Image };
enum class MiningLevel { Instance, Class };

inline const char* anchor_name(AnchorModality m) {
    return m == AnchorModality::Recipe ? "recipe" : "image";
}

// Hardest pair selected for one anchor. Skipped anchors (class level only:
// no same-category positive or no other-category negative) keep -1 indices.
struct MiningOutcome {
    int anchor = -1;
    int positive = -1;
    int negative = -1;
    double positive_distance = 0.0;
    double negative_distance = 0.0;
    MiningLevel level = MiningLevel::Instance;
    bool skipped = false;
};

namespace detail {

inline const DenseMatrix& anchor_side(const EmbeddingBatch& b, AnchorModality m) {
    return m == AnchorModality::Recipe ? b.recipes : b.images;
}

inline const DenseMatrix& counterpart_side(const EmbeddingBatch& b, AnchorModality m) {
    return m == AnchorModality::Recipe ? b.images : b.recipes;
}

} // namespace detail

// Instance level: the only positive is the anchor's own pair; the negative is
// the closest non-matching counterpart. Ties go to the lowest index.
inline std::vector<MiningOutcome> mine_instance_hard(const EmbeddingBatch& batch,
                                                     AnchorModality modality) {
    batch.validate();
    const int n = batch.size();
    if (n < 2)
        fail("mine_instance_hard: batch of ", n, " cannot supply a negative (need >= 2)");
    const DenseMatrix& anchors = detail::anchor_side(batch, modality);
    const DenseMatrix& cands = detail::counterpart_side(batch, modality);
    const int d = anchors.cols;

    std::vector<MiningOutcome> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        MiningOutcome& o = out[static_cast<std::size_t>(i)];
        o.anchor = i;
        o.level = MiningLevel::Instance;
        o.positive = i;
        o.positive_distance = euclidean(anchors.row(i), cands.row(i), d);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = euclidean(anchors.row(i), cands.row(j), d);
            if (o.negative < 0 || dist < o.negative_distance) {
                o.negative = j;
                o.negative_distance = dist;
            }
        }
    }
    return out;
}

// Class level: positive = farthest same-category counterpart other than the
// anchor's own pair, negative = closest different-category counterpart.
// Anchors missing either side are reported as skipped, never dropped.
inline std::vector<MiningOutcome> mine_class_hard(const EmbeddingBatch& batch,
                                                  AnchorModality modality) {
    batch.validate();
    const int n = batch.size();
    if (n < 2) fail("mine_class_hard: batch of ", n, " cannot supply candidates (need >= 2)");
    const DenseMatrix& anchors = detail::anchor_side(batch, modality);
    const DenseMatrix& cands = detail::counterpart_side(batch, modality);
    const int d = anchors.cols;

    std::vector<MiningOutcome> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        MiningOutcome& o = out[static_cast<std::size_t>(i)];
        o.anchor = i;
        o.level = MiningLevel::Class;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dist = euclidean(anchors.row(i), cands.row(j), d);
            if (batch.labels[static_cast<std::size_t>(j)] ==
                batch.labels[static_cast<std::size_t>(i)]) {
                if (o.positive < 0 || dist > o.positive_distance) {
                    o.positive = j;
                    o.positive_distance = dist;
                }
            } else {
                if (o.negative < 0 || dist < o.negative_distance) {
                    o.negative = j;
                    o.negative_distance = dist;
                }
            }
        }
        o.skipped = o.positive < 0 || o.negative < 0;
    }
    return out;
}

} // namespace jema
