#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jema/error.hpp"
#include "jema/matrix.hpp"
#include "jema/rng.hpp"
#include "jema/tape.hpp"

namespace jema {

// Modality discriminator: three affine layers d -> d/2 -> d/4 -> 1 with leaky
// relu between them; the sigmoid of the final scalar is the confidence F_D.
struct DiscriminatorParams {
    int in_dim = 0;
    double leak = 0.2;
    DenseMatrix w1, b1, w2, b2, w3, b3;

    static DiscriminatorParams init(int in_dim, SplitMix64& rng, double scale) {
        if (in_dim < 1) fail("discriminator: input dimension must be >= 1, got ", in_dim);
        if (!(scale > 0.0)) fail("discriminator: init scale must be positive");
        const int h1 = in_dim / 2 > 0 ? in_dim / 2 : 1;
        const int h2 = in_dim / 4 > 0 ? in_dim / 4 : 1;
        DiscriminatorParams p;
        p.in_dim = in_dim;
        p.w1 = DenseMatrix(h1, in_dim);
        p.b1 = DenseMatrix(h1, 1);
        p.w2 = DenseMatrix(h2, h1);
        p.b2 = DenseMatrix(h2, 1);
        p.w3 = DenseMatrix(1, h2);
        p.b3 = DenseMatrix(1, 1);
        p.w1.fill_gaussian(rng, scale);
        p.w2.fill_gaussian(rng, scale);
        p.w3.fill_gaussian(rng, scale);
        return p;
    }

    std::vector<std::pair<std::string, DenseMatrix*>> named() {
        return {{"disc_w1", &w1}, {"disc_b1", &b1}, {"disc_w2", &w2},
                {"disc_b2", &b2}, {"disc_w3", &w3}, {"disc_b3", &b3}};
    }

    std::vector<std::pair<std::string, const DenseMatrix*>> named() const {
        auto mut = const_cast<DiscriminatorParams*>(this)->named();
        std::vector<std::pair<std::string, const DenseMatrix*>> out;
        for (auto& [name, m] : mut) out.push_back({name, m});
        return out;
    }
};

// Confidence clamp: a raw probability never reports exactly 0 or 1.
inline constexpr double kConfidenceFloor = 1e-7;

// Tape handles for one registered discriminator. Trainable registration uses
// named inputs (gradients flow); frozen registration uses constants.
struct DiscriminatorNodes {
    NodeId w1, b1, w2, b2, w3, b3;
    double leak;
};

inline DiscriminatorNodes register_discriminator(Tape& t, const DiscriminatorParams& p,
                                                 bool trainable) {
    DiscriminatorNodes n;
    n.leak = p.leak;
    if (trainable) {
        n.w1 = t.input("disc_w1", p.w1);
        n.b1 = t.input("disc_b1", p.b1);
        n.w2 = t.input("disc_w2", p.w2);
        n.b2 = t.input("disc_b2", p.b2);
        n.w3 = t.input("disc_w3", p.w3);
        n.b3 = t.input("disc_b3", p.b3);
    } else {
        n.w1 = t.constant(p.w1);
        n.b1 = t.constant(p.b1);
        n.w2 = t.constant(p.w2);
        n.b2 = t.constant(p.b2);
        n.w3 = t.constant(p.w3);
        n.b3 = t.constant(p.b3);
    }
    return n;
}

// Pre-sigmoid critic over d x N columns -> 1 x N. Losses compose log F_D from
// this via softplus identities instead of taking log of a saturated sigmoid.
inline NodeId critic_graph(Tape& t, const DiscriminatorNodes& d, NodeId x) {
    const int n = t.node(x).value.cols;
    const NodeId h1 =
        t.leaky_relu(t.add(t.matmul(d.w1, x), t.tile_cols(d.b1, n)), d.leak);
    const NodeId h2 =
        t.leaky_relu(t.add(t.matmul(d.w2, h1), t.tile_cols(d.b2, n)), d.leak);
    return t.add(t.matmul(d.w3, h2), t.tile_cols(d.b3, n));
}

// Plain confidence for a single column; evaluation-side convenience.
inline double discriminator_forward(const DenseMatrix& x, const DiscriminatorParams& p) {
    if (x.cols != 1 || x.rows != p.in_dim)
        fail("discriminator_forward: input is ", x.rows, "x", x.cols, ", expected ",
             p.in_dim, "x1");
    auto layer = [&](const DenseMatrix& w, const DenseMatrix& b, const DenseMatrix& v,
                     bool act) {
        DenseMatrix o = matmul(w, v);
        for (int i = 0; i < o.rows; ++i) {
            o.data[i] += b.data[i];
            if (act && o.data[i] < 0.0) o.data[i] *= p.leak;
        }
        return o;
    };
    const DenseMatrix h1 = layer(p.w1, p.b1, x, true);
    const DenseMatrix h2 = layer(p.w2, p.b2, h1, true);
    const DenseMatrix c = layer(p.w3, p.b3, h2, false);
    const double conf = sigmoid_scalar(c.data[0]);
    if (conf < kConfidenceFloor) return kConfidenceFloor;
    if (conf > 1.0 - kConfidenceFloor) return 1.0 - kConfidenceFloor;
    return conf;
}

} // namespace jema
