#pragma once

// Change-of-measure bookkeeping along simulated paths. The running martingale
// uses left-endpoint (Ito) evaluation with the same increments that drove the
// path; any other evaluation breaks the pathwise sign identities the tests
// rely on.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dyadic/integrate.hpp"

namespace dyadic {

struct GirsanovLedger {
    TimeGrid grid;
    std::vector<double> martingale;  // M(t_i), M(t0) = 0
    std::vector<double> quadratic_variation;  // [M](t_i), nondecreasing
    std::vector<double> density;     // exp(M - [M]/2) > 0

    double terminal_density() const { return density.back(); }
};

namespace detail {

inline GirsanovLedger ledger_impl(const Tree& tree, const SdePath& path, double sign) {
    const std::size_t n = tree.node_count();
    if (!path.states.empty() && path.states.front().size() != n)
        throw std::invalid_argument("path dimension does not match tree");

    GirsanovLedger ledger;
    ledger.grid = path.grid;
    ledger.martingale.reserve(path.grid.n_points());
    ledger.quadratic_variation.reserve(path.grid.n_points());
    ledger.density.reserve(path.grid.n_points());
    ledger.martingale.push_back(0.0);
    ledger.quadratic_variation.push_back(0.0);
    ledger.density.push_back(1.0);

    const double inv_sigma = 1.0 / tree.sigma();
    const double dt = path.grid.dt;
    double m = 0.0, qv = 0.0;
    for (std::size_t i = 0; i < path.grid.n_steps; ++i) {
        const State& x = path.states[i];
        double dm = 0.0, dq = 0.0;
        // Sum over non-root nodes; generation-1 parents are the pinned root
        // and contribute nothing.
        for (NodeId j = 1; j < n; ++j) {
            const double xp = x[tree.parent(j)];
            if (xp == 0.0) continue;
            dm += xp * path.noise.increment(j, i);
            dq += xp * xp;
        }
        m += sign * inv_sigma * dm;
        qv += inv_sigma * inv_sigma * dq * dt;
        ledger.martingale.push_back(m);
        ledger.quadratic_variation.push_back(qv);
        ledger.density.push_back(std::exp(m - 0.5 * qv));
    }
    return ledger;
}

} // namespace detail

/// Ledger of the measure change that linearizes a nonlinear path: the path's
/// increments are read as Brownian under the nonlinear measure and
///   M_t = -(1/sigma) sum_j int X_parent dW_j,
/// so density(t) converts expectations toward the linearized measure.
inline GirsanovLedger ledger_forward(const Tree& tree, const SdePath& path) {
    if (!is_ito(path.model))
        throw std::invalid_argument("ledger_forward expects a path of an Ito kind");
    return detail::ledger_impl(tree, path, -1.0);
}

/// Opposite direction, for paths simulated under the linear model: increments
/// are read as Brownian under the linearized measure and the martingale sign
/// flips; the quadratic variation is identical.
inline GirsanovLedger ledger_inverse(const Tree& tree, const SdePath& path) {
    if (!is_linear(path.model))
        throw std::invalid_argument("ledger_inverse expects a path of a linear kind");
    return detail::ledger_impl(tree, path, +1.0);
}

struct ReweightedEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double effective_sample_size = 0.0;
    bool degenerate = false;  // effective sample size below 1% of n
};

/// Unnormalized importance-sampling mean of phi under the target measure:
/// mean of density * phi, with the standard error of that product sample.
inline ReweightedEstimate reweighted_expectation(std::span<const double> phi,
                                                 std::span<const double> density) {
    if (phi.size() != density.size() || phi.empty())
        throw std::invalid_argument("reweighted_expectation needs matching nonempty samples");
    const double n = static_cast<double>(phi.size());

    double sum = 0.0, sum_sq = 0.0, w_sum = 0.0, w_sq = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double v = density[i] * phi[i];
        sum += v;
        sum_sq += v * v;
        w_sum += density[i];
        w_sq += density[i] * density[i];
    }

    ReweightedEstimate est;
    est.value = sum / n;
    const double var = phi.size() > 1 ? std::max(0.0, (sum_sq - n * est.value * est.value) / (n - 1.0)) : 0.0;
    est.std_error = std::sqrt(var / n);
    est.effective_sample_size = w_sq > 0.0 ? w_sum * w_sum / w_sq : 0.0;
    est.degenerate = est.effective_sample_size < 0.01 * n;
    return est;
}

} // namespace dyadic
