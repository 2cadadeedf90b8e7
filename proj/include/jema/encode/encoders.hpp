#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jema/encode/features.hpp"
#include "jema/error.hpp"
#include "jema/matrix.hpp"
#include "jema/rng.hpp"
#include "jema/tape.hpp"

namespace jema {

// Shared-space dimensions. The fusion hidden layer matches the output width.
struct EncoderDims {
    int sequence = 512;
    int key_term = 300;
    int visual = 512;
    int category = 300;
    int hidden = 1024;
    int out = 1024;
    int n_categories = 0;

    int recipe_in() const { return sequence + key_term; }
    int image_in() const { return visual + category; }

    void validate() const {
        if (sequence < 1 || key_term < 1 || visual < 1 || category < 1 || hidden < 1 ||
            out < 1)
            fail("encoder dims: all dimensions must be >= 1");
        if (n_categories < 1) fail("encoder dims: n_categories must be >= 1, got ", n_categories);
    }
};

// Both modality encoders: concat -> affine -> relu -> affine -> l2-normalize,
// plus the trainable category-embedding table consumed on the image side.
struct EncoderParams {
    EncoderDims dims;
    bool normalize = true;

    DenseMatrix recipe_w1, recipe_b1, recipe_w2, recipe_b2;
    DenseMatrix image_w1, image_b1, image_w2, image_b2;
    DenseMatrix category_table;  // n_categories x category dim

    static EncoderParams init(const EncoderDims& dims, SplitMix64& rng, double scale,
                              bool normalize = true) {
        dims.validate();
        if (!(scale > 0.0)) fail("encoder init: scale must be positive, got ", scale);
        EncoderParams p;
        p.dims = dims;
        p.normalize = normalize;
        p.recipe_w1 = DenseMatrix(dims.hidden, dims.recipe_in());
        p.recipe_b1 = DenseMatrix(dims.hidden, 1);
        p.recipe_w2 = DenseMatrix(dims.out, dims.hidden);
        p.recipe_b2 = DenseMatrix(dims.out, 1);
        p.image_w1 = DenseMatrix(dims.hidden, dims.image_in());
        p.image_b1 = DenseMatrix(dims.hidden, 1);
        p.image_w2 = DenseMatrix(dims.out, dims.hidden);
        p.image_b2 = DenseMatrix(dims.out, 1);
        p.category_table = DenseMatrix(dims.n_categories, dims.category);
        for (auto& [name, m] : p.named())
            if (name.find("_b") == std::string::npos) m->fill_gaussian(rng, scale);
        return p;
    }

    std::vector<std::pair<std::string, DenseMatrix*>> named() {
        return {{"recipe_w1", &recipe_w1}, {"recipe_b1", &recipe_b1},
                {"recipe_w2", &recipe_w2}, {"recipe_b2", &recipe_b2},
                {"image_w1", &image_w1},   {"image_b1", &image_b1},
                {"image_w2", &image_w2},   {"image_b2", &image_b2},
                {"category_table", &category_table}};
    }

    std::vector<std::pair<std::string, const DenseMatrix*>> named() const {
        auto mut = const_cast<EncoderParams*>(this)->named();
        std::vector<std::pair<std::string, const DenseMatrix*>> out;
        for (auto& [name, m] : mut) out.push_back({name, m});
        return out;
    }
};

// Trainable category semantics: plain row lookup, returned as a column.
inline DenseMatrix embed_category(int label, const EncoderParams& params) {
    if (label < 0 || label >= params.category_table.rows)
        fail("embed_category: label ", label, " outside table of ",
             params.category_table.rows, " categories");
    DenseMatrix v(params.category_table.cols, 1);
    const double* row = params.category_table.row(label);
    for (int k = 0; k < params.category_table.cols; ++k) v.data[k] = row[k];
    return v;
}

namespace detail {

// Tape-free tower used by evaluation paths; must mirror tape_tower exactly.
inline DenseMatrix tower_forward(const DenseMatrix& w1, const DenseMatrix& b1,
                                 const DenseMatrix& w2, const DenseMatrix& b2,
                                 const DenseMatrix& x, bool normalize, const char* side) {
    if (x.rows != w1.cols)
        fail(side, " encoder: feature rows ", x.rows, " do not match weight columns ",
             w1.cols);
    DenseMatrix h = matmul(w1, x);
    for (int i = 0; i < h.rows; ++i)
        for (int j = 0; j < h.cols; ++j) {
            const double v = h.at(i, j) + b1.data[i];
            h.at(i, j) = v < 0.0 ? 0.0 : v;  // NaN passes through to the norm check
        }
    DenseMatrix o = matmul(w2, h);
    for (int i = 0; i < o.rows; ++i)
        for (int j = 0; j < o.cols; ++j) o.at(i, j) += b2.data[i];
    if (normalize) {
        for (int j = 0; j < o.cols; ++j) {
            double norm = 0.0;
            for (int i = 0; i < o.rows; ++i) norm += o.at(i, j) * o.at(i, j);
            if (!std::isfinite(norm))
                fail(side, " encoder: column ", j, " has a non-finite norm");
            if (!(norm > 0.0))
                fail(side, " encoder: column ", j,
                     " embeds to the zero vector and cannot be normalized");
            norm = std::sqrt(norm);
            for (int i = 0; i < o.rows; ++i) o.at(i, j) /= norm;
        }
    }
    if (!o.all_finite()) fail(side, " encoder: non-finite embedding");
    return o;
}

inline DenseMatrix one_hot_labels(const std::vector<int>& labels, int n_categories) {
    DenseMatrix onehot(n_categories, static_cast<int>(labels.size()));
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j] < 0 || labels[j] >= n_categories)
            fail("encode_image: label ", labels[j], " outside table of ", n_categories,
                 " categories");
        onehot.at(labels[j], static_cast<int>(j)) = 1.0;
    }
    return onehot;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Plain forward paths (evaluation; one column per example)
// ---------------------------------------------------------------------------

inline DenseMatrix encode_recipe_batch(const EncoderParams& params, const DenseMatrix& feats) {
    if (feats.rows != params.dims.recipe_in())
        fail("encode_recipe: feature rows ", feats.rows, ", expected ",
             params.dims.recipe_in());
    return detail::tower_forward(params.recipe_w1, params.recipe_b1, params.recipe_w2,
                                 params.recipe_b2, feats, params.normalize, "recipe");
}

inline DenseMatrix encode_image_batch(const EncoderParams& params, const DenseMatrix& visual,
                                      const std::vector<int>& labels) {
    if (visual.rows != params.dims.visual)
        fail("encode_image: visual rows ", visual.rows, ", expected ", params.dims.visual);
    if (visual.cols != static_cast<int>(labels.size()))
        fail("encode_image: ", visual.cols, " visual columns but ", labels.size(),
             " labels");
    const DenseMatrix onehot = detail::one_hot_labels(labels, params.category_table.rows);
    const DenseMatrix cat = matmul(transposed(params.category_table), onehot);
    DenseMatrix x(params.dims.image_in(), visual.cols);
    for (int j = 0; j < visual.cols; ++j) {
        for (int i = 0; i < visual.rows; ++i) x.at(i, j) = visual.at(i, j);
        for (int i = 0; i < cat.rows; ++i) x.at(visual.rows + i, j) = cat.at(i, j);
    }
    return detail::tower_forward(params.image_w1, params.image_b1, params.image_w2,
                                 params.image_b2, x, params.normalize, "image");
}

inline DenseMatrix encode_recipe(const RecipeFeatures& f, const EncoderParams& params) {
    if (f.sequence.cols != 1 || f.key_term.cols != 1)
        fail("encode_recipe: features must be single columns");
    if (f.sequence.rows != params.dims.sequence)
        fail("encode_recipe: sequence feature has ", f.sequence.rows, " rows, expected ",
             params.dims.sequence);
    if (f.key_term.rows != params.dims.key_term)
        fail("encode_recipe: key-term feature has ", f.key_term.rows, " rows, expected ",
             params.dims.key_term);
    DenseMatrix x(params.dims.recipe_in(), 1);
    for (int i = 0; i < f.sequence.rows; ++i) x.data[i] = f.sequence.data[i];
    for (int i = 0; i < f.key_term.rows; ++i) x.data[f.sequence.rows + i] = f.key_term.data[i];
    return encode_recipe_batch(params, x);
}

inline DenseMatrix encode_image(const ImageFeatures& f, const EncoderParams& params) {
    if (f.visual.cols != 1) fail("encode_image: visual feature must be a single column");
    return encode_image_batch(params, f.visual, {f.category_label});
}

// ---------------------------------------------------------------------------
// Tape graphs (training; parameters enter as named inputs)
// ---------------------------------------------------------------------------

namespace detail {

inline NodeId tape_tower(Tape& t, NodeId x, NodeId w1, NodeId b1, NodeId w2, NodeId b2,
                         bool normalize, const char* side) {
    const int n = t.node(x).value.cols;
    const int d = t.node(w2).value.rows;
    const NodeId h = t.relu(t.add(t.matmul(w1, x), t.tile_cols(b1, n)));
    NodeId o = t.add(t.matmul(w2, h), t.tile_cols(b2, n));
    if (normalize) {
        const NodeId sq_norms = t.col_sum(t.mul(o, o));  // 1 x n
        for (int j = 0; j < n; ++j) {
            const double sq = t.value(sq_norms).at(0, j);
            if (!std::isfinite(sq))
                fail(side, " encoder: column ", j, " has a non-finite norm");
            if (!(sq > 0.0))
                fail(side, " encoder: column ", j,
                     " embeds to the zero vector and cannot be normalized");
        }
        const NodeId inv = t.reciprocal(t.sqrt(sq_norms));
        o = t.mul(o, t.tile_rows(inv, d));
    }
    return o;
}

} // namespace detail

// Registers recipe_w1/b1/w2/b2 as tape inputs and returns the out x N
// embedding node for the given feature node.
inline NodeId recipe_tower_graph(Tape& t, const EncoderParams& params, NodeId features) {
    if (t.node(features).value.rows != params.dims.recipe_in())
        fail("recipe_tower_graph: feature rows ", t.node(features).value.rows,
             ", expected ", params.dims.recipe_in());
    const NodeId w1 = t.input("recipe_w1", params.recipe_w1);
    const NodeId b1 = t.input("recipe_b1", params.recipe_b1);
    const NodeId w2 = t.input("recipe_w2", params.recipe_w2);
    const NodeId b2 = t.input("recipe_b2", params.recipe_b2);
    return detail::tape_tower(t, features, w1, b1, w2, b2, params.normalize, "recipe");
}

// Same for the image side; the category table joins the graph so label
// semantics are trained end to end.
inline NodeId image_tower_graph(Tape& t, const EncoderParams& params, NodeId visual,
                                const std::vector<int>& labels) {
    if (t.node(visual).value.rows != params.dims.visual)
        fail("image_tower_graph: visual rows ", t.node(visual).value.rows, ", expected ",
             params.dims.visual);
    if (t.node(visual).value.cols != static_cast<int>(labels.size()))
        fail("image_tower_graph: ", t.node(visual).value.cols, " visual columns but ",
             labels.size(), " labels");
    const NodeId table = t.input("category_table", params.category_table);
    const NodeId onehot =
        t.constant(detail::one_hot_labels(labels, params.category_table.rows));
    const NodeId cat = t.matmul(t.transpose(table), onehot);
    const NodeId x = t.concat_rows({visual, cat});
    const NodeId w1 = t.input("image_w1", params.image_w1);
    const NodeId b1 = t.input("image_b1", params.image_b1);
    const NodeId w2 = t.input("image_w2", params.image_w2);
    const NodeId b2 = t.input("image_b2", params.image_b2);
    return detail::tape_tower(t, x, w1, b1, w2, b2, params.normalize, "image");
}

} // namespace jema
