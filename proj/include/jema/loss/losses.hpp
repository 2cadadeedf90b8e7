#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "jema/encode/encoders.hpp"
#include "jema/error.hpp"
#include "jema/loss/discriminator.hpp"
#include "jema/loss/mining.hpp"
#include "jema/matrix.hpp"
#include "jema/rng.hpp"
#include "jema/tape.hpp"

namespace jema {

enum class GpMode { Standard, PaperLiteral };

// Trade-off weights and triplet shaping for the composite objective. The
// margin/gamma defaults are the synthetic-benchmark optimum: gamma near 8
// lets the class-level pull saturate once categories separate while the
// instance-level term keeps its gradient; gamma 1 never shuts the class pull
// off and collapses classes, gamma 15+ memorizes the training pairs.
struct LossConfig {
    double margin = 0.3;
    double gamma = 8.0;
    double lambda1 = 0.005;  // recipe category term
    double lambda2 = 0.005;  // image category term
    double lambda3 = 0.005;  // distribution alignment term
    double lambda_d = 10.0;  // gradient penalty weight inside the adversary
    bool class_level = true;
    bool use_batch_all = false;  // ablation baseline: average all negatives
    GpMode gp_mode = GpMode::Standard;
    bool eq4_literal = false;

    void validate() const {
        if (margin < 0.0) fail("loss config: margin must be >= 0, got ", margin);
        if (!(gamma > 0.0)) fail("loss config: gamma must be > 0, got ", gamma);
        if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0 || lambda_d < 0.0)
            fail("loss config: trade-off weights must be >= 0");
    }
};

struct LossBreakdown {
    double dhtl = 0.0;
    double ca_r = 0.0;
    double ca_v = 0.0;
    double da = 0.0;
    double total = 0.0;
    double d_loss = 0.0;
};

// Per-modality linear category heads over the shared space (no bias).
struct CategoryClassifiers {
    DenseMatrix recipe;  // N_c x d
    DenseMatrix image;

    static CategoryClassifiers init(int n_categories, int d, SplitMix64& rng, double scale) {
        if (n_categories < 1 || d < 1)
            fail("classifiers: need n_categories >= 1 and d >= 1, got ", n_categories,
                 " and ", d);
        CategoryClassifiers c;
        c.recipe = DenseMatrix(n_categories, d);
        c.image = DenseMatrix(n_categories, d);
        c.recipe.fill_gaussian(rng, scale);
        c.image.fill_gaussian(rng, scale);
        return c;
    }

    std::vector<std::pair<std::string, DenseMatrix*>> named() {
        return {{"classifier_recipe", &recipe}, {"classifier_image", &image}};
    }
};

// One training batch in feature space, one column per pair.
struct TrainingBatch {
    DenseMatrix recipe_features;
    DenseMatrix visual_features;
    std::vector<int> labels;
    std::vector<std::string> pair_ids;

    int size() const { return recipe_features.cols; }

    void validate() const {
        if (recipe_features.cols != visual_features.cols)
            fail("training batch: ", recipe_features.cols, " recipe columns but ",
                 visual_features.cols, " visual columns");
        if (static_cast<int>(labels.size()) != recipe_features.cols)
            fail("training batch: ", recipe_features.cols, " pairs but ", labels.size(),
                 " labels");
    }
};

// ---------------------------------------------------------------------------
// Double batch-hard soft-margin triplet loss
// ---------------------------------------------------------------------------

struct DhtlNodes {
    NodeId loss = 0;
    std::vector<MiningOutcome> outcomes;  // every mining pass, skips included
};

namespace detail {

// Memoized column slice; mining reuses anchors across terms.
struct ColumnSlicer {
    Tape* t;
    std::map<std::pair<NodeId, int>, NodeId> cache;

    NodeId operator()(NodeId m, int j) {
        const auto key = std::make_pair(m, j);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        const NodeId s = t->slice(m, 0, j, t->node(m).value.rows, 1);
        cache[key] = s;
        return s;
    }
};

} // namespace detail

// Soft-margin terms ln(1 + exp(gamma * (d(a,p) - d(a,n) + m))) over hardest
// pairs in both anchor directions: instance level always, class level under
// the flag. Selection is a value-space choice; gradients flow only through
// the selected columns.
inline DhtlNodes dhtl_sm_graph(Tape& t, NodeId recipe_cols, NodeId image_cols,
                               const std::vector<int>& labels, const LossConfig& cfg) {
    cfg.validate();
    const EmbeddingBatch batch =
        make_embedding_batch(t.value(recipe_cols), t.value(image_cols), labels);

    DhtlNodes res;
    detail::ColumnSlicer col{&t, {}};
    NodeId acc = t.constant_scalar(0.0);
    auto add_terms = [&](const std::vector<MiningOutcome>& outs, AnchorModality am) {
        const NodeId a_m = am == AnchorModality::Recipe ? recipe_cols : image_cols;
        const NodeId c_m = am == AnchorModality::Recipe ? image_cols : recipe_cols;
        for (const MiningOutcome& o : outs) {
            if (o.skipped) continue;
            const NodeId dap = t.euclidean_distance(col(a_m, o.anchor), col(c_m, o.positive));
            const NodeId dan = t.euclidean_distance(col(a_m, o.anchor), col(c_m, o.negative));
            acc = t.add(acc, t.softplus(t.sub(dap, dan), cfg.gamma, cfg.margin));
        }
        res.outcomes.insert(res.outcomes.end(), outs.begin(), outs.end());
    };
    for (const AnchorModality am : {AnchorModality::Recipe, AnchorModality::Image}) {
        add_terms(mine_instance_hard(batch, am), am);
        if (cfg.class_level) add_terms(mine_class_hard(batch, am), am);
    }
    res.loss = acc;
    return res;
}

// Baseline without mining: for each anchor the positive is its own pair and
// every non-matching counterpart contributes, averaged per anchor.
inline NodeId batch_all_graph(Tape& t, NodeId recipe_cols, NodeId image_cols,
                              const LossConfig& cfg) {
    cfg.validate();
    const int n = t.node(recipe_cols).value.cols;
    if (n < 2) fail("batch_all: batch of ", n, " cannot supply a negative (need >= 2)");
    if (t.node(image_cols).value.cols != n)
        fail("batch_all: recipe and image batches differ in size");

    detail::ColumnSlicer col{&t, {}};
    std::map<std::pair<int, int>, NodeId> dist;  // (recipe idx, image idx) -> node
    auto d_ri = [&](int r, int v) {
        const auto key = std::make_pair(r, v);
        auto it = dist.find(key);
        if (it != dist.end()) return it->second;
        const NodeId node =
            t.euclidean_distance(col(recipe_cols, r), col(image_cols, v));
        dist[key] = node;
        return node;
    };

    NodeId acc = t.constant_scalar(0.0);
    for (const AnchorModality am : {AnchorModality::Recipe, AnchorModality::Image}) {
        for (int i = 0; i < n; ++i) {
            const NodeId dap = d_ri(i, i);
            NodeId sum = t.constant_scalar(0.0);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const NodeId dan = am == AnchorModality::Recipe ? d_ri(i, j) : d_ri(j, i);
                sum = t.add(sum, t.softplus(t.sub(dap, dan), cfg.gamma, cfg.margin));
            }
            acc = t.add(acc, t.scale(sum, 1.0 / (n - 1)));
        }
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Category cross-entropy
// ---------------------------------------------------------------------------

// -sum_i log softmax(W * e_i)[label_i] over embedding columns.
inline NodeId category_ce_graph(Tape& t, NodeId classifier, NodeId emb_cols,
                                const std::vector<int>& labels) {
    const int nc = t.node(classifier).value.rows;
    const int n = t.node(emb_cols).value.cols;
    if (static_cast<int>(labels.size()) != n)
        fail("category_ce: ", n, " embeddings but ", labels.size(), " labels");
    for (int lab : labels)
        if (lab < 0 || lab >= nc)
            fail("category_ce: label ", lab, " outside ", nc, " classes");

    const NodeId logits = t.matmul(classifier, emb_cols);  // nc x n
    NodeId acc = t.constant_scalar(0.0);
    for (int j = 0; j < n; ++j) {
        const NodeId column = t.slice(logits, 0, j, nc, 1);
        const NodeId truth = t.slice(logits, labels[static_cast<std::size_t>(j)], j, 1, 1);
        acc = t.add(acc, t.sub(t.logsumexp(column), truth));
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Adversary: gradient penalty, discriminator loss, distribution alignment
// ---------------------------------------------------------------------------

// log F_D and log(1 - F_D) from the pre-sigmoid critic; the softplus forms
// never see a saturated probability.
namespace detail {

inline NodeId log_conf(Tape& t, NodeId critic) {  // log sigmoid(c) = -softplus(-c)
    return t.scale(t.softplus(t.scale(critic, -1.0), 1.0, 0.0), -1.0);
}

inline NodeId log_one_minus_conf(Tape& t, NodeId critic) {  // -softplus(c)
    return t.scale(t.softplus(critic, 1.0, 0.0), -1.0);
}

} // namespace detail

// Penalty for one pair on the interpolated point x = eps*e_r + (1-eps)*e_v.
// x enters as an input leaf: the norm is of the critic's gradient in embedding
// space, and embeddings stay frozen during discriminator updates.
inline NodeId gradient_penalty_graph(Tape& t, const DiscriminatorNodes& d,
                                     const DenseMatrix& recipe_col,
                                     const DenseMatrix& image_col, double eps,
                                     GpMode mode, const std::string& tag) {
    if (recipe_col.cols != 1 || image_col.cols != 1 || recipe_col.rows != image_col.rows)
        fail("gradient_penalty: embeddings must be matching single columns");
    DenseMatrix x(recipe_col.rows, 1);
    for (int i = 0; i < x.rows; ++i)
        x.data[i] = eps * recipe_col.data[i] + (1.0 - eps) * image_col.data[i];
    const NodeId leaf = t.input("gp_x_" + tag, x);
    const NodeId critic = critic_graph(t, d, leaf);  // 1x1
    const NodeId target =
        mode == GpMode::Standard ? critic : detail::log_conf(t, critic);
    const NodeId grad = t.backward_nodes(target, {leaf})[0];
    const NodeId norm_minus_one = t.shift(t.l2norm(grad), -1.0);
    return t.mul(norm_minus_one, norm_minus_one);
}

struct DiscriminatorLossNodes {
    NodeId objective = 0;     // sum of log-confidence terms under the active convention
    NodeId penalty = 0;       // unscaled gradient penalty sum
    NodeId reported = 0;      // objective + lambda_d * penalty
    NodeId train_target = 0;  // what the discriminator optimizer minimizes
};

// Builds the full adversary step target over frozen embedding values. In the
// default convention the discriminator ascends log F_D(image) +
// log(1 - F_D(recipe)); the literal mode instead minimizes log F_D(recipe) +
// log(1 - F_D(image)) as printed. The penalty is minimized in both modes.
inline DiscriminatorLossNodes discriminator_loss_graph(Tape& t,
                                                       const DiscriminatorParams& params,
                                                       const DenseMatrix& recipe_cols,
                                                       const DenseMatrix& image_cols,
                                                       const LossConfig& cfg,
                                                       SplitMix64& rng) {
    cfg.validate();
    if (recipe_cols.rows != params.in_dim || image_cols.rows != params.in_dim)
        fail("discriminator_loss: embedding rows ", recipe_cols.rows, "/", image_cols.rows,
             " do not match discriminator input ", params.in_dim);
    const int n = recipe_cols.cols;
    if (n < 1 || image_cols.cols != n)
        fail("discriminator_loss: need matching non-empty batches, got ", n, " and ",
             image_cols.cols);

    const DiscriminatorNodes d = register_discriminator(t, params, true);
    const NodeId critic_r = critic_graph(t, d, t.constant(recipe_cols));
    const NodeId critic_v = critic_graph(t, d, t.constant(image_cols));

    DiscriminatorLossNodes out;
    if (cfg.eq4_literal)
        out.objective = t.add(t.sum(detail::log_conf(t, critic_r)),
                              t.sum(detail::log_one_minus_conf(t, critic_v)));
    else
        out.objective = t.add(t.sum(detail::log_conf(t, critic_v)),
                              t.sum(detail::log_one_minus_conf(t, critic_r)));

    NodeId pen = t.constant_scalar(0.0);
    for (int i = 0; i < n; ++i) {
        DenseMatrix rc(recipe_cols.rows, 1), vc(image_cols.rows, 1);
        for (int k = 0; k < recipe_cols.rows; ++k) {
            rc.data[k] = recipe_cols.at(k, i);
            vc.data[k] = image_cols.at(k, i);
        }
        pen = t.add(pen, gradient_penalty_graph(t, d, rc, vc, rng.uniform(), cfg.gp_mode,
                                                std::to_string(i)));
    }
    out.penalty = pen;
    out.reported = t.add(out.objective, t.scale(pen, cfg.lambda_d));
    out.train_target = cfg.eq4_literal
                           ? t.add(out.objective, t.scale(pen, cfg.lambda_d))
                           : t.add(t.scale(out.objective, -1.0), t.scale(pen, cfg.lambda_d));
    return out;
}

// Alignment term the encoders minimize: sum_i log(1 - F_D(E_R(r_i))) with the
// discriminator frozen into constants.
inline NodeId distribution_alignment_graph(Tape& t, const DiscriminatorParams& disc,
                                           NodeId recipe_cols) {
    if (t.node(recipe_cols).value.rows != disc.in_dim)
        fail("distribution_alignment: embedding rows ", t.node(recipe_cols).value.rows,
             " do not match discriminator input ", disc.in_dim);
    const DiscriminatorNodes d = register_discriminator(t, disc, false);
    return t.sum(detail::log_one_minus_conf(t, critic_graph(t, d, recipe_cols)));
}

// ---------------------------------------------------------------------------
// Composite objective
// ---------------------------------------------------------------------------

struct ObjectiveNodes {
    NodeId total = 0;
    NodeId dhtl = 0;
    NodeId ca_r = 0;
    NodeId ca_v = 0;
    NodeId da = 0;
    NodeId recipe_embeddings = 0;
    NodeId image_embeddings = 0;
    std::vector<MiningOutcome> outcomes;
};

// L = dhtl + l1*ca_r + l2*ca_v + l3*da over one batch. Encoder and classifier
// parameters are trainable inputs; the discriminator is frozen.
inline ObjectiveNodes total_objective_graph(Tape& t, const EncoderParams& enc,
                                            const CategoryClassifiers& cls,
                                            const DiscriminatorParams& disc,
                                            const TrainingBatch& batch,
                                            const LossConfig& cfg) {
    batch.validate();
    cfg.validate();
    ObjectiveNodes o;
    o.recipe_embeddings = recipe_tower_graph(t, enc, t.constant(batch.recipe_features));
    o.image_embeddings =
        image_tower_graph(t, enc, t.constant(batch.visual_features), batch.labels);

    if (cfg.use_batch_all) {
        o.dhtl = batch_all_graph(t, o.recipe_embeddings, o.image_embeddings, cfg);
    } else {
        DhtlNodes dh = dhtl_sm_graph(t, o.recipe_embeddings, o.image_embeddings,
                                     batch.labels, cfg);
        o.dhtl = dh.loss;
        o.outcomes = std::move(dh.outcomes);
    }

    const NodeId cr = t.input("classifier_recipe", cls.recipe);
    const NodeId ci = t.input("classifier_image", cls.image);
    o.ca_r = category_ce_graph(t, cr, o.recipe_embeddings, batch.labels);
    o.ca_v = category_ce_graph(t, ci, o.image_embeddings, batch.labels);
    o.da = distribution_alignment_graph(t, disc, o.recipe_embeddings);

    o.total = t.add(t.add(t.add(o.dhtl, t.scale(o.ca_r, cfg.lambda1)),
                          t.scale(o.ca_v, cfg.lambda2)),
                    t.scale(o.da, cfg.lambda3));
    return o;
}

inline LossBreakdown read_breakdown(const Tape& t, const ObjectiveNodes& o) {
    LossBreakdown b;
    b.dhtl = t.value(o.dhtl).scalar_value();
    b.ca_r = t.value(o.ca_r).scalar_value();
    b.ca_v = t.value(o.ca_v).scalar_value();
    b.da = t.value(o.da).scalar_value();
    b.total = t.value(o.total).scalar_value();
    return b;
}

// ---------------------------------------------------------------------------
// Value-level conveniences for tests and reporting
// ---------------------------------------------------------------------------

inline double dhtl_sm(const EmbeddingBatch& batch, const LossConfig& cfg,
                      std::vector<MiningOutcome>* outcomes = nullptr) {
    batch.validate();
    Tape t;
    const NodeId r = t.constant(transposed(batch.recipes));
    const NodeId v = t.constant(transposed(batch.images));
    DhtlNodes nodes = dhtl_sm_graph(t, r, v, batch.labels, cfg);
    if (outcomes) *outcomes = std::move(nodes.outcomes);
    return t.value(nodes.loss).scalar_value();
}

inline double category_ce(const DenseMatrix& emb_rows, const std::vector<int>& labels,
                          const DenseMatrix& classifier) {
    Tape t;
    return t
        .value(category_ce_graph(t, t.constant(classifier),
                                 t.constant(transposed(emb_rows)), labels))
        .scalar_value();
}

inline double distribution_alignment_loss(const EmbeddingBatch& batch,
                                          const DiscriminatorParams& disc) {
    batch.validate();
    Tape t;
    return t
        .value(distribution_alignment_graph(t, disc, t.constant(transposed(batch.recipes))))
        .scalar_value();
}

inline double gradient_penalty(const DenseMatrix& recipe_col, const DenseMatrix& image_col,
                               const DiscriminatorParams& params, double eps, GpMode mode) {
    Tape t;
    const DiscriminatorNodes d = register_discriminator(t, params, true);
    return t.value(gradient_penalty_graph(t, d, recipe_col, image_col, eps, mode, "0"))
        .scalar_value();
}

} // namespace jema
