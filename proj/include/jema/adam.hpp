#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "jema/error.hpp"
#include "jema/matrix.hpp"

namespace jema {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const {
        if (!(lr > 0.0)) fail("adam: learning rate must be positive, got ", lr);
        if (!(beta1 > 0.0 && beta1 < 1.0)) fail("adam: beta1 must be in (0,1), got ", beta1);
        if (!(beta2 > 0.0 && beta2 < 1.0)) fail("adam: beta2 must be in (0,1), got ", beta2);
        if (!(eps > 0.0)) fail("adam: eps must be positive, got ", eps);
    }
};

// First/second moment buffers for one parameter matrix. Moments start at
// zero, so a run of all-zero gradients leaves the parameter bit-identical.
struct AdamState {
    DenseMatrix m;
    DenseMatrix v;
    std::int64_t step = 0;

    explicit AdamState(int rows = 0, int cols = 0) : m(rows, cols), v(rows, cols) {}
};

// One bias-corrected update, in place. A non-finite gradient element aborts
// with the parameter's name and position; silently clamping would poison the
// moments for every later step.
inline void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state,
                      const AdamConfig& cfg, const std::string& param_name) {
    cfg.validate();
    if (!param.same_shape(grad))
        fail("adam: parameter '", param_name, "' is ", param.rows, "x", param.cols,
             " but gradient is ", grad.rows, "x", grad.cols);
    if (!state.m.same_shape(param)) {
        state.m = DenseMatrix(param.rows, param.cols);
        state.v = DenseMatrix(param.rows, param.cols);
        state.step = 0;
    }
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!std::isfinite(grad.data[i]))
            fail("adam: non-finite gradient for parameter '", param_name, "' at element ", i,
                 " (value ", grad.data[i], ")");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad.data[i];
        const double m = state.m.data[i] = cfg.beta1 * state.m.data[i] + (1.0 - cfg.beta1) * g;
        const double v = state.v.data[i] = cfg.beta2 * state.v.data[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        param.data[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

} // namespace jema
