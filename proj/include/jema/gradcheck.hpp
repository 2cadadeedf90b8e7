#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "jema/error.hpp"
#include "jema/tape.hpp"

namespace jema {

// Central-difference gradient verification. The default step of 1e-5 puts
// truncation and roundoff error both well under the 1e-4 acceptance band for
// losses of order one.
struct FiniteDiffReport {
    double max_err = 0.0;      // |analytic - numeric| / max(1, |analytic|, |numeric|)
    std::string worst_input;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;

    bool pass(double tol) const { return checked > 0 && max_err < tol; }

    std::string describe() const {
        return cat("worst ", worst_input, "[", worst_index, "]: analytic=", worst_analytic,
                   " numeric=", worst_numeric, " err=", max_err, " over ", checked, " elements");
    }
};

// Compares backward_grad of `seed` against central differences for every
// element of the named leaves. Only the dependency cone of the perturbed leaf
// is re-evaluated per probe, so checking a few hundred parameters stays in
// the millisecond range.
inline FiniteDiffReport finite_diff_check(Tape& tape, NodeId seed,
                                          const std::vector<std::string>& wrt,
                                          double step = 1e-5) {
    if (wrt.empty()) fail("finite_diff_check: no input leaves requested");
    const std::map<std::string, DenseMatrix> grads = tape.backward_grad(seed);

    FiniteDiffReport rep;
    for (const std::string& name : wrt) {
        auto git = grads.find(name);
        if (git == grads.end()) fail("finite_diff_check: no input leaf named '", name, "'");
        const DenseMatrix& analytic = git->second;
        const NodeId leaf = tape.input_id(name);
        const std::vector<NodeId> cone = tape.dependents(leaf, seed);

        DenseMatrix probe = tape.value(leaf);
        for (std::size_t i = 0; i < probe.size(); ++i) {
            const double saved = probe.data[i];

            probe.data[i] = saved + step;
            tape.set_input(name, probe);
            tape.recompute_nodes(cone);
            const double f_plus = tape.value(seed).data[0];

            probe.data[i] = saved - step;
            tape.set_input(name, probe);
            tape.recompute_nodes(cone);
            const double f_minus = tape.value(seed).data[0];

            probe.data[i] = saved;
            tape.set_input(name, probe);
            tape.recompute_nodes(cone);

            const double numeric = (f_plus - f_minus) / (2.0 * step);
            const double a = analytic.data[i];
            const double denom = std::max({1.0, std::fabs(a), std::fabs(numeric)});
            const double err = std::fabs(a - numeric) / denom;
            if (err > rep.max_err) {
                rep.max_err = err;
                rep.worst_input = name;
                rep.worst_index = i;
                rep.worst_analytic = a;
                rep.worst_numeric = numeric;
            }
            rep.checked += 1;
        }
    }
    return rep;
}

} // namespace jema
