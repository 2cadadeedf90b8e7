#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "jema/adam.hpp"
#include "jema/gradcheck.hpp"
#include "jema/loss/losses.hpp"
#include "jema/rng.hpp"

using namespace jema;

namespace {

double stable_softplus(double z) {
    if (z > 30.0) return z;
    if (z < -30.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

double row_dist(const DenseMatrix& a, int i, const DenseMatrix& b, int j) {
    double s = 0.0;
    for (int k = 0; k < a.cols; ++k) {
        const double t = a.at(i, k) - b.at(j, k);
        s += t * t;
    }
    return std::sqrt(s);
}

// Plain-loop recomputation of the mined triplet loss, selections included.
double oracle_dhtl(const EmbeddingBatch& b, const LossConfig& cfg) {
    double total = 0.0;
    for (int dir = 0; dir < 2; ++dir) {
        const DenseMatrix& a = dir == 0 ? b.recipes : b.images;
        const DenseMatrix& c = dir == 0 ? b.images : b.recipes;
        for (int i = 0; i < b.size(); ++i) {
            int neg = -1;
            double dn = 0.0;
            for (int j = 0; j < b.size(); ++j) {
                if (j == i) continue;
                const double dj = row_dist(a, i, c, j);
                if (neg < 0 || dj < dn) {
                    neg = j;
                    dn = dj;
                }
            }
            total += stable_softplus(cfg.gamma * (row_dist(a, i, c, i) - dn + cfg.margin));
            if (!cfg.class_level) continue;
            int pos = -1, cneg = -1;
            double dp = 0.0, dcn = 0.0;
            for (int j = 0; j < b.size(); ++j) {
                if (j == i) continue;
                const double dj = row_dist(a, i, c, j);
                if (b.labels[j] == b.labels[i]) {
                    if (pos < 0 || dj > dp) {
                        pos = j;
                        dp = dj;
                    }
                } else if (cneg < 0 || dj < dcn) {
                    cneg = j;
                    dcn = dj;
                }
            }
            if (pos >= 0 && cneg >= 0)
                total += stable_softplus(cfg.gamma * (dp - dcn + cfg.margin));
        }
    }
    return total;
}

double oracle_batch_all(const EmbeddingBatch& b, const LossConfig& cfg) {
    const int n = b.size();
    double total = 0.0;
    for (int dir = 0; dir < 2; ++dir) {
        const DenseMatrix& a = dir == 0 ? b.recipes : b.images;
        const DenseMatrix& c = dir == 0 ? b.images : b.recipes;
        for (int i = 0; i < n; ++i) {
            const double dap = row_dist(a, i, c, i);
            double sum = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                sum += stable_softplus(cfg.gamma * (dap - row_dist(a, i, c, j) + cfg.margin));
            }
            total += sum / (n - 1);
        }
    }
    return total;
}

double batch_all_value(const EmbeddingBatch& b, const LossConfig& cfg) {
    Tape t;
    return t
        .value(batch_all_graph(t, t.constant(transposed(b.recipes)),
                               t.constant(transposed(b.images)), cfg))
        .scalar_value();
}

double oracle_softmax_ce(const DenseMatrix& w, const DenseMatrix& emb_rows,
                         const std::vector<int>& labels) {
    double total = 0.0;
    for (int i = 0; i < emb_rows.rows; ++i) {
        std::vector<double> z(static_cast<std::size_t>(w.rows), 0.0);
        for (int c = 0; c < w.rows; ++c)
            for (int k = 0; k < w.cols; ++k)
                z[static_cast<std::size_t>(c)] += w.at(c, k) * emb_rows.at(i, k);
        const double mx = *std::max_element(z.begin(), z.end());
        double acc = 0.0;
        for (const double v : z) acc += std::exp(v - mx);
        total += mx + std::log(acc) - z[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    return total;
}

double plain_critic(const DiscriminatorParams& p, const DenseMatrix& x) {
    auto layer = [&](const DenseMatrix& w, const DenseMatrix& b, const DenseMatrix& v,
                     bool act) {
        DenseMatrix o = matmul(w, v);
        for (int i = 0; i < o.rows; ++i) {
            o.data[static_cast<std::size_t>(i)] += b.data[static_cast<std::size_t>(i)];
            if (act && o.data[static_cast<std::size_t>(i)] < 0.0)
                o.data[static_cast<std::size_t>(i)] *= p.leak;
        }
        return o;
    };
    return layer(p.w3, p.b3, layer(p.w2, p.b2, layer(p.w1, p.b1, x, true), true), false)
        .data[0];
}

// All four mined terms share the same (d(a,p), d(a,n)) in this 1-D layout:
// r = [0, dap+dan], v = [dap, dan].
EmbeddingBatch symmetric_pair_batch(double dap, double dan) {
    EmbeddingBatch b;
    b.recipes = DenseMatrix(2, 1);
    b.images = DenseMatrix(2, 1);
    b.recipes.at(0, 0) = 0.0;
    b.recipes.at(1, 0) = dap + dan;
    b.images.at(0, 0) = dap;
    b.images.at(1, 0) = dan;
    b.labels = {0, 1};
    return b;
}

EmbeddingBatch random_embedding_batch(SplitMix64& rng, int n, int d, int n_cats) {
    EmbeddingBatch b;
    b.recipes = DenseMatrix(n, d);
    b.images = DenseMatrix(n, d);
    b.recipes.fill_gaussian(rng, 1.0);
    b.images.fill_gaussian(rng, 1.0);
    for (int i = 0; i < n; ++i)
        b.labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(n_cats))));
    return b;
}

DiscriminatorParams zero_discriminator(int in_dim) {
    SplitMix64 rng(1);
    DiscriminatorParams p = DiscriminatorParams::init(in_dim, rng, 0.1);
    for (auto& [name, mat] : p.named())
        std::fill(mat->data.begin(), mat->data.end(), 0.0);
    return p;
}

} // namespace

TEST_CASE("soft-margin triplet terms hit their closed forms") {
    LossConfig cfg;
    cfg.class_level = false;

    // d(a,p)=1.0, d(a,n)=1.2, margin 0.2: exponent 0, each term ln 2
    cfg.margin = 0.2;
    cfg.gamma = 1.0;
    REQUIRE_THAT(dhtl_sm(symmetric_pair_batch(1.0, 1.2), cfg),
                 Catch::Matchers::WithinAbs(4.0 * std::log(2.0), 1e-12));

    // gamma scales the exponent but zero stays zero
    cfg.margin = 0.4;
    cfg.gamma = 2.0;
    REQUIRE_THAT(dhtl_sm(symmetric_pair_batch(1.0, 1.4), cfg),
                 Catch::Matchers::WithinAbs(4.0 * std::log(2.0), 1e-12));

    // violated triplet: d(a,p)=2.0, d(a,n)=0.5, margin 0.3 -> ln(1 + e^1.8)
    cfg.margin = 0.3;
    cfg.gamma = 1.0;
    REQUIRE_THAT(dhtl_sm(symmetric_pair_batch(2.0, 0.5), cfg),
                 Catch::Matchers::WithinAbs(4.0 * std::log1p(std::exp(1.8)), 1e-12));
}

TEST_CASE("triplet loss is positive and falls as the negative recedes") {
    LossConfig cfg;
    cfg.class_level = false;
    cfg.margin = 0.2;
    const double near = dhtl_sm(symmetric_pair_batch(1.0, 1.2), cfg);
    const double far = dhtl_sm(symmetric_pair_batch(1.0, 3.0), cfg);
    REQUIRE(near > 0.0);
    REQUIRE(far > 0.0);
    REQUIRE(far < near);
}

TEST_CASE("mined triplet loss matches the plain-loop oracle") {
    SplitMix64 rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        const int d = 2 + static_cast<int>(rng.below(3));
        const EmbeddingBatch b = random_embedding_batch(rng, n, d, 1 + static_cast<int>(rng.below(3)));
        LossConfig cfg;
        cfg.class_level = trial % 2 == 0;
        cfg.gamma = trial % 3 == 0 ? 2.0 : 1.0;
        cfg.margin = trial % 4 == 0 ? 0.1 : 0.3;
        CAPTURE(trial, n, d);
        std::vector<MiningOutcome> outs;
        const double got = dhtl_sm(b, cfg, &outs);
        REQUIRE_THAT(got, Catch::Matchers::WithinAbs(oracle_dhtl(b, cfg), 1e-10));
        REQUIRE(got > 0.0);
        REQUIRE(outs.size() == static_cast<std::size_t>(cfg.class_level ? 4 * n : 2 * n));
    }
}

TEST_CASE("steep soft margins converge to the hinge") {
    LossConfig cfg;
    cfg.class_level = false;
    cfg.margin = 0.3;
    cfg.gamma = 50.0;
    for (const double arg : {-2.0, -0.5, -0.2, 0.2, 0.5, 2.0}) {
        const double dap = arg > 0.7 ? 3.0 : 1.0;
        const double dan = dap + cfg.margin - arg;
        const double per_term = dhtl_sm(symmetric_pair_batch(dap, dan), cfg) / 4.0;
        CAPTURE(arg);
        REQUIRE_THAT(per_term / cfg.gamma,
                     Catch::Matchers::WithinAbs(std::max(0.0, arg), 0.02));
    }
}

TEST_CASE("batch-all baseline averages every negative") {
    SplitMix64 rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        const EmbeddingBatch b = random_embedding_batch(rng, n, 3, 2);
        LossConfig cfg;
        cfg.margin = 0.3;
        REQUIRE_THAT(batch_all_value(b, cfg),
                     Catch::Matchers::WithinAbs(oracle_batch_all(b, cfg), 1e-10));
    }

    Tape t;
    const NodeId one = t.constant(DenseMatrix(3, 1));
    REQUIRE_THROWS_WITH(batch_all_graph(t, one, one, LossConfig{}),
                        Catch::Matchers::ContainsSubstring("need >= 2"));
    const NodeId two = t.constant(DenseMatrix(3, 2));
    const NodeId three = t.constant(DenseMatrix(3, 3));
    REQUIRE_THROWS_WITH(batch_all_graph(t, two, three, LossConfig{}),
                        Catch::Matchers::ContainsSubstring("differ in size"));
}

TEST_CASE("category cross-entropy has the right fixed points") {
    SplitMix64 rng(33);
    DenseMatrix emb(3, 5);
    emb.fill_gaussian(rng, 1.0);

    // zero classifier: uniform softmax over 4 classes, ln 4 per item
    const DenseMatrix zero_w(4, 5);
    REQUIRE_THAT(category_ce(emb, {0, 3, 1}, zero_w),
                 Catch::Matchers::WithinAbs(3.0 * std::log(4.0), 1e-12));

    // saturated correct logits: loss collapses to zero
    DenseMatrix eye_emb(3, 4);
    eye_emb.at(0, 0) = 1.0;
    eye_emb.at(1, 2) = 1.0;
    eye_emb.at(2, 1) = 1.0;
    DenseMatrix sharp_w(4, 4);
    for (int i = 0; i < 4; ++i) sharp_w.at(i, i) = 50.0;
    REQUIRE_THAT(category_ce(eye_emb, {0, 2, 1}, sharp_w),
                 Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("category cross-entropy matches an independent softmax oracle") {
    SplitMix64 rng(34);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        const int d = 2 + static_cast<int>(rng.below(3));
        const int nc = 2 + static_cast<int>(rng.below(3));
        DenseMatrix emb(n, d), w(nc, d);
        emb.fill_gaussian(rng, 2.0);
        w.fill_gaussian(rng, 2.0);
        std::vector<int> labels;
        for (int i = 0; i < n; ++i)
            labels.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(nc))));
        REQUIRE_THAT(category_ce(emb, labels, w),
                     Catch::Matchers::WithinAbs(oracle_softmax_ce(w, emb, labels), 1e-10));
    }
}

TEST_CASE("category cross-entropy is a per-item sum") {
    SplitMix64 rng(35);
    DenseMatrix emb(4, 3), w(3, 3);
    emb.fill_gaussian(rng, 1.0);
    w.fill_gaussian(rng, 1.0);
    const std::vector<int> labels = {2, 0, 1, 1};

    double singles = 0.0;
    for (int i = 0; i < 4; ++i) {
        DenseMatrix one(1, 3);
        for (int k = 0; k < 3; ++k) one.at(0, k) = emb.at(i, k);
        singles += category_ce(one, {labels[static_cast<std::size_t>(i)]}, w);
    }
    const double whole = category_ce(emb, labels, w);
    REQUIRE_THAT(whole, Catch::Matchers::WithinAbs(singles, 1e-12));

    // permuting the batch leaves the total unchanged
    DenseMatrix perm(4, 3);
    const int order[4] = {2, 0, 3, 1};
    std::vector<int> perm_labels;
    for (int i = 0; i < 4; ++i) {
        for (int k = 0; k < 3; ++k) perm.at(i, k) = emb.at(order[i], k);
        perm_labels.push_back(labels[static_cast<std::size_t>(order[i])]);
    }
    REQUIRE_THAT(category_ce(perm, perm_labels, w),
                 Catch::Matchers::WithinAbs(whole, 1e-12));

    REQUIRE_THROWS_WITH(category_ce(emb, {0, 1, 2, 3}, w),
                        Catch::Matchers::ContainsSubstring("outside"));
    REQUIRE_THROWS_WITH(category_ce(emb, {0, 1}, w),
                        Catch::Matchers::ContainsSubstring("labels"));
}

TEST_CASE("an untrained discriminator is exactly undecided") {
    const DiscriminatorParams p = zero_discriminator(6);
    DenseMatrix x(6, 1);
    x.at(2, 0) = 3.5;
    REQUIRE(discriminator_forward(x, p) == 0.5);

    SplitMix64 rng(36);
    DiscriminatorParams trained = DiscriminatorParams::init(6, rng, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        DenseMatrix v(6, 1);
        v.fill_gaussian(rng, 3.0);
        const double conf = discriminator_forward(v, trained);
        REQUIRE(conf >= kConfidenceFloor);
        REQUIRE(conf <= 1.0 - kConfidenceFloor);
    }

    DenseMatrix wrong(4, 1);
    REQUIRE_THROWS_WITH(discriminator_forward(wrong, p),
                        Catch::Matchers::ContainsSubstring("input"));
}

TEST_CASE("discriminator confidence differentiates through its input") {
    SplitMix64 rng(37);
    const DiscriminatorParams p = DiscriminatorParams::init(5, rng, 0.5);
    DenseMatrix x(5, 1);
    x.fill_gaussian(rng, 1.0);

    Tape t;
    const NodeId leaf = t.input("x", x);
    const DiscriminatorNodes d = register_discriminator(t, p, false);
    const NodeId conf = t.sigmoid(critic_graph(t, d, leaf));
    const FiniteDiffReport rep = finite_diff_check(t, conf, {"x"});
    INFO(rep.describe());
    REQUIRE(rep.pass(1e-4));
}

TEST_CASE("a unit-norm linear critic earns no gradient penalty") {
    DiscriminatorParams p = zero_discriminator(4);
    p.leak = 1.0;  // identity activations make the critic linear
    p.w1.at(0, 0) = 1.0;
    p.w2.at(0, 0) = 1.0;
    p.w3.at(0, 0) = 1.0;

    SplitMix64 rng(38);
    DenseMatrix rc(4, 1), vc(4, 1);
    rc.fill_gaussian(rng, 1.0);
    vc.fill_gaussian(rng, 1.0);
    REQUIRE_THAT(gradient_penalty(rc, vc, p, 0.3, GpMode::Standard),
                 Catch::Matchers::WithinAbs(0.0, 1e-15));
    // the literal variant penalizes the log-confidence slope, which a unit
    // critic does not satisfy
    REQUIRE(gradient_penalty(rc, vc, p, 0.3, GpMode::PaperLiteral) > 0.0);
}

TEST_CASE("gradient penalty agrees with nested finite differences") {
    SplitMix64 rng(39);
    const DiscriminatorParams p = DiscriminatorParams::init(6, rng, 0.7);
    DenseMatrix rc(6, 1), vc(6, 1);
    rc.fill_gaussian(rng, 1.0);
    vc.fill_gaussian(rng, 1.0);
    const double eps = 0.37;

    DenseMatrix x(6, 1);
    for (int i = 0; i < 6; ++i)
        x.data[static_cast<std::size_t>(i)] =
            eps * rc.data[static_cast<std::size_t>(i)] +
            (1.0 - eps) * vc.data[static_cast<std::size_t>(i)];

    for (const GpMode mode : {GpMode::Standard, GpMode::PaperLiteral}) {
        double sq = 0.0;
        for (int i = 0; i < 6; ++i) {
            DenseMatrix hi = x, lo = x;
            const double h = 1e-6;
            hi.data[static_cast<std::size_t>(i)] += h;
            lo.data[static_cast<std::size_t>(i)] -= h;
            auto target = [&](const DenseMatrix& v) {
                const double c = plain_critic(p, v);
                return mode == GpMode::Standard ? c : -stable_softplus(-c);
            };
            const double g = (target(hi) - target(lo)) / (2.0 * h);
            sq += g * g;
        }
        const double expect = (std::sqrt(sq) - 1.0) * (std::sqrt(sq) - 1.0);
        CAPTURE(mode == GpMode::Standard);
        REQUIRE_THAT(gradient_penalty(rc, vc, p, eps, mode),
                     Catch::Matchers::WithinAbs(expect, 1e-6));
    }
}

TEST_CASE("gradient penalty differentiates through to the critic weights") {
    SplitMix64 rng(40);
    const DiscriminatorParams p = DiscriminatorParams::init(4, rng, 0.7);
    DenseMatrix rc(4, 1), vc(4, 1);
    rc.fill_gaussian(rng, 1.0);
    vc.fill_gaussian(rng, 1.0);

    Tape t;
    const DiscriminatorNodes d = register_discriminator(t, p, true);
    const NodeId pen = gradient_penalty_graph(t, d, rc, vc, 0.42, GpMode::Standard, "0");
    std::vector<std::string> names;
    for (const auto& [name, mat] : p.named()) names.push_back(name);
    const FiniteDiffReport rep = finite_diff_check(t, pen, names);
    INFO(rep.describe());
    REQUIRE(rep.pass(1e-3));
}

TEST_CASE("an undecided discriminator reports two log-half per pair") {
    const int n = 3, dim = 4;
    const DiscriminatorParams p = zero_discriminator(dim);
    SplitMix64 rng(41);
    DenseMatrix rcols(dim, n), vcols(dim, n);
    rcols.fill_gaussian(rng, 1.0);
    vcols.fill_gaussian(rng, 1.0);

    for (const bool literal : {false, true}) {
        LossConfig cfg;
        cfg.lambda_d = 0.0;
        cfg.eq4_literal = literal;
        Tape t;
        SplitMix64 gp_rng(5);
        const DiscriminatorLossNodes nodes =
            discriminator_loss_graph(t, p, rcols, vcols, cfg, gp_rng);
        const double expect = 2.0 * n * std::log(0.5);
        CAPTURE(literal);
        REQUIRE_THAT(t.value(nodes.reported).scalar_value(),
                     Catch::Matchers::WithinAbs(expect, 1e-12));
        // a zero critic has zero input gradient, so each pair's penalty is 1
        REQUIRE_THAT(t.value(nodes.penalty).scalar_value(),
                     Catch::Matchers::WithinAbs(static_cast<double>(n), 1e-12));
        const double target = t.value(nodes.train_target).scalar_value();
        REQUIRE_THAT(target, Catch::Matchers::WithinAbs(literal ? expect : -expect, 1e-12));
    }

    LossConfig weighted;
    weighted.lambda_d = 10.0;
    Tape t;
    SplitMix64 gp_rng(5);
    const DiscriminatorLossNodes nodes =
        discriminator_loss_graph(t, p, rcols, vcols, weighted, gp_rng);
    REQUIRE_THAT(t.value(nodes.reported).scalar_value(),
                 Catch::Matchers::WithinAbs(2.0 * n * std::log(0.5) + 10.0 * n, 1e-12));
}

TEST_CASE("one adversary step improves its objective on separable batches") {
    SplitMix64 rng(42);
    const int n = 8, dim = 6;
    DenseMatrix rcols(dim, n), vcols(dim, n);
    rcols.fill_gaussian(rng, 0.1);
    vcols.fill_gaussian(rng, 0.1);
    for (std::size_t i = 0; i < rcols.size(); ++i) {
        rcols.data[i] -= 1.0;
        vcols.data[i] += 1.0;
    }

    DiscriminatorParams p = DiscriminatorParams::init(dim, rng, 0.1);
    LossConfig cfg;
    cfg.lambda_d = 0.0;

    double before = 0.0;
    {
        Tape t;
        SplitMix64 gp_rng(7);
        const DiscriminatorLossNodes nodes =
            discriminator_loss_graph(t, p, rcols, vcols, cfg, gp_rng);
        before = t.value(nodes.objective).scalar_value();
        const auto grads = t.backward_grad(nodes.train_target);
        AdamConfig ac;
        ac.lr = 1e-3;
        std::map<std::string, AdamState> states;
        for (auto& [name, mat] : p.named())
            adam_step(*mat, grads.at(name), states[name], ac, name);
    }
    Tape t;
    SplitMix64 gp_rng(7);
    const double after =
        t.value(discriminator_loss_graph(t, p, rcols, vcols, cfg, gp_rng).objective).scalar_value();
    REQUIRE(after > before);
}

TEST_CASE("adversary target differentiates including the penalty path") {
    SplitMix64 rng(43);
    const int dim = 4;
    const DiscriminatorParams p = DiscriminatorParams::init(dim, rng, 0.6);
    DenseMatrix rcols(dim, 2), vcols(dim, 2);
    rcols.fill_gaussian(rng, 1.0);
    vcols.fill_gaussian(rng, 1.0);

    LossConfig cfg;  // lambda_d 10, standard mode
    Tape t;
    SplitMix64 gp_rng(9);
    const DiscriminatorLossNodes nodes =
        discriminator_loss_graph(t, p, rcols, vcols, cfg, gp_rng);
    std::vector<std::string> names;
    for (const auto& [name, mat] : p.named()) names.push_back(name);
    const FiniteDiffReport rep = finite_diff_check(t, nodes.train_target, names);
    INFO(rep.describe());
    REQUIRE(rep.pass(1e-3));

    DenseMatrix bad(dim + 1, 2);
    SplitMix64 r2(1);
    REQUIRE_THROWS_WITH(discriminator_loss_graph(t, p, bad, vcols, cfg, r2),
                        Catch::Matchers::ContainsSubstring("do not match"));
    DenseMatrix empty(dim, 0);
    REQUIRE_THROWS_WITH(discriminator_loss_graph(t, p, empty, empty, cfg, r2),
                        Catch::Matchers::ContainsSubstring("non-empty"));
}

TEST_CASE("alignment loss is the log mass the critic leaves on recipes") {
    const DiscriminatorParams zero = zero_discriminator(3);
    EmbeddingBatch b;
    b.recipes = DenseMatrix(2, 3);
    b.images = DenseMatrix(2, 3);
    b.recipes.at(0, 0) = 1.0;
    b.recipes.at(1, 2) = -2.0;
    b.labels = {0, 1};
    REQUIRE_THAT(distribution_alignment_loss(b, zero),
                 Catch::Matchers::WithinAbs(2.0 * std::log(0.5), 1e-12));

    SplitMix64 rng(44);
    const DiscriminatorParams p = DiscriminatorParams::init(3, rng, 0.4);
    EmbeddingBatch rb = random_embedding_batch(rng, 4, 3, 2);
    double expect = 0.0;
    for (int i = 0; i < 4; ++i) {
        DenseMatrix col(3, 1);
        for (int k = 0; k < 3; ++k) col.at(k, 0) = rb.recipes.at(i, k);
        expect += std::log(1.0 - discriminator_forward(col, p));
    }
    REQUIRE_THAT(distribution_alignment_loss(rb, p),
                 Catch::Matchers::WithinAbs(expect, 1e-9));
}

TEST_CASE("alignment gradients reach embeddings but never the frozen critic") {
    SplitMix64 rng(45);
    const DiscriminatorParams p = DiscriminatorParams::init(4, rng, 0.5);
    DenseMatrix cols(4, 3);
    cols.fill_gaussian(rng, 1.0);

    Tape t;
    const NodeId emb = t.input("emb", cols);
    const NodeId da = distribution_alignment_graph(t, p, emb);
    const auto grads = t.backward_grad(da);
    REQUIRE(grads.count("emb") == 1);
    REQUIRE(grads.count("disc_w1") == 0);
    REQUIRE(grads.count("disc_b3") == 0);
    double mag = 0.0;
    for (const double g : grads.at("emb").data) mag += std::abs(g);
    REQUIRE(mag > 0.0);
}

namespace {

EncoderDims tiny_dims() {
    EncoderDims d;
    d.sequence = 3;
    d.key_term = 2;
    d.visual = 4;
    d.category = 2;
    d.hidden = 5;
    d.out = 4;
    d.n_categories = 3;
    return d;
}

TrainingBatch tiny_batch(SplitMix64& rng, const EncoderDims& d, int n) {
    TrainingBatch b;
    b.recipe_features = DenseMatrix(d.recipe_in(), n);
    b.visual_features = DenseMatrix(d.visual, n);
    b.recipe_features.fill_gaussian(rng, 1.0);
    b.visual_features.fill_gaussian(rng, 1.0);
    for (int i = 0; i < n; ++i)
        b.labels.push_back(i % d.n_categories);
    return b;
}

} // namespace

TEST_CASE("composite objective decomposes into its reported parts") {
    SplitMix64 rng(46);
    const EncoderDims dims = tiny_dims();
    const EncoderParams enc = EncoderParams::init(dims, rng, 0.4, true);
    const CategoryClassifiers cls = CategoryClassifiers::init(dims.n_categories, dims.out, rng, 0.4);
    const DiscriminatorParams disc = DiscriminatorParams::init(dims.out, rng, 0.4);
    const TrainingBatch batch = tiny_batch(rng, dims, 4);

    LossConfig cfg;
    Tape t;
    const ObjectiveNodes o = total_objective_graph(t, enc, cls, disc, batch, cfg);
    const LossBreakdown b = read_breakdown(t, o);
    REQUIRE_THAT(b.total,
                 Catch::Matchers::WithinAbs(b.dhtl + cfg.lambda1 * b.ca_r +
                                                cfg.lambda2 * b.ca_v + cfg.lambda3 * b.da,
                                            1e-12));
    REQUIRE(b.dhtl > 0.0);
    REQUIRE(b.da < 0.0);  // log(1 - confidence) terms are negative
    REQUIRE_FALSE(o.outcomes.empty());
    REQUIRE(b.d_loss == 0.0);

    // with all trade-off weights at zero the objective is the triplet term
    LossConfig bare;
    bare.lambda1 = bare.lambda2 = bare.lambda3 = 0.0;
    Tape t2;
    const LossBreakdown b2 = read_breakdown(t2, total_objective_graph(t2, enc, cls, disc, batch, bare));
    REQUIRE(b2.total == b2.dhtl);
}

TEST_CASE("scaling every trade-off weight scales the regularizer mass") {
    SplitMix64 rng(47);
    const EncoderDims dims = tiny_dims();
    const EncoderParams enc = EncoderParams::init(dims, rng, 0.4, true);
    const CategoryClassifiers cls = CategoryClassifiers::init(dims.n_categories, dims.out, rng, 0.4);
    const DiscriminatorParams disc = DiscriminatorParams::init(dims.out, rng, 0.4);
    const TrainingBatch batch = tiny_batch(rng, dims, 4);

    LossConfig base;
    LossConfig tripled = base;
    tripled.lambda1 *= 3.0;
    tripled.lambda2 *= 3.0;
    tripled.lambda3 *= 3.0;

    Tape t1, t3;
    const LossBreakdown b1 = read_breakdown(t1, total_objective_graph(t1, enc, cls, disc, batch, base));
    const LossBreakdown b3 = read_breakdown(t3, total_objective_graph(t3, enc, cls, disc, batch, tripled));
    REQUIRE(b1.dhtl == b3.dhtl);
    REQUIRE_THAT(b3.total - b3.dhtl,
                 Catch::Matchers::WithinAbs(3.0 * (b1.total - b1.dhtl), 1e-12));
}

TEST_CASE("composite objective can swap in the batch-all baseline") {
    SplitMix64 rng(50);
    const EncoderDims dims = tiny_dims();
    const EncoderParams enc = EncoderParams::init(dims, rng, 0.4, true);
    const CategoryClassifiers cls = CategoryClassifiers::init(dims.n_categories, dims.out, rng, 0.4);
    const DiscriminatorParams disc = DiscriminatorParams::init(dims.out, rng, 0.4);
    const TrainingBatch batch = tiny_batch(rng, dims, 4);

    LossConfig cfg;
    cfg.use_batch_all = true;
    Tape t;
    const ObjectiveNodes o = total_objective_graph(t, enc, cls, disc, batch, cfg);
    REQUIRE(o.outcomes.empty());

    const EmbeddingBatch emb = make_embedding_batch(t.value(o.recipe_embeddings),
                                                    t.value(o.image_embeddings), batch.labels);
    REQUIRE_THAT(read_breakdown(t, o).dhtl,
                 Catch::Matchers::WithinAbs(oracle_batch_all(emb, cfg), 1e-10));
}

TEST_CASE("composite objective differentiates against every trainable parameter") {
    SplitMix64 rng(49);
    const EncoderDims dims = tiny_dims();
    EncoderParams enc = EncoderParams::init(dims, rng, 0.4, true);
    CategoryClassifiers cls = CategoryClassifiers::init(dims.n_categories, dims.out, rng, 0.4);
    const DiscriminatorParams disc = DiscriminatorParams::init(dims.out, rng, 0.4);
    const TrainingBatch batch = tiny_batch(rng, dims, 4);

    Tape t;
    const ObjectiveNodes o = total_objective_graph(t, enc, cls, disc, batch, LossConfig{});

    std::vector<std::string> names;
    for (const auto& [name, mat] : enc.named()) names.push_back(name);
    for (const auto& [name, mat] : cls.named()) names.push_back(name);
    REQUIRE(names.size() == 11);

    const auto grads = t.backward_grad(o.total);
    REQUIRE(grads.count("disc_w1") == 0);  // the critic stays frozen here

    const FiniteDiffReport rep = finite_diff_check(t, o.total, names);
    INFO(rep.describe());
    REQUIRE(rep.pass(1e-4));
}
