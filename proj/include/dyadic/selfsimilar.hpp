#pragma once

// Self-similar coefficient profiles a_j with X_j(t) = a_j / (t - t0), their
// time reversal, and the deterministic non-uniqueness experiment: the
// time-reversed closed form shares initial data with the finite-energy
// Galerkin trajectory but blows up where the latter conserves energy.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "dyadic/integrate.hpp"

namespace dyadic {

struct SelfSimilarProfile {
    std::vector<double> a;       // per-node coefficients, a[0] = 0
    double t0 = -1.0;            // singularity time of the forward solution, < 0
    double residual_norm = 0.0;  // max |residual| over the interior generations
    bool converged = false;

    bool trivial() const {
        for (double v : a)
            if (v != 0.0) return false;
        return true;
    }
};

/// Algebraic residual of the profile recursion, component j:
///   a_j + c_j a_parent^2 - sum_{k in children} c_k a_j a_k,
/// with a_k = 0 closure beyond generation N.
inline std::vector<double> residual_selfsimilar(const Tree& tree, std::span<const double> a) {
    if (a.size() != tree.node_count())
        throw std::invalid_argument("profile dimension does not match tree");
    if (a[0] != 0.0)
        throw std::invalid_argument("profile root coefficient must be 0");
    std::vector<double> res(tree.node_count(), 0.0);
    const int d = tree.arity();
    for (NodeId j = 1; j < tree.node_count(); ++j) {
        const double ap = a[tree.parent(j)];
        double s = 0.0;
        if (tree.has_children(j)) {
            const NodeId first = tree.first_child(j);
            for (int k = 0; k < d; ++k)
                s += tree.coeff(first + static_cast<std::size_t>(k)) * a[first + static_cast<std::size_t>(k)];
        }
        res[j] = a[j] + tree.coeff(j) * ap * ap - a[j] * s;
    }
    return res;
}

/// Max |residual| over generations 1..N-2. The recursion is closed by decay,
/// not by the hard a = 0 cutoff, so the last two generations are excluded
/// from the quality metric.
inline double interior_residual_norm(const Tree& tree, std::span<const double> residual) {
    const int last = tree.max_generation() >= 3 ? tree.max_generation() - 2
                                                : tree.max_generation();
    double norm = 0.0;
    for (NodeId j = 1; j < tree.node_count(); ++j)
        if (tree.generation(j) <= last) norm = std::max(norm, std::abs(residual[j]));
    return norm;
}

namespace detail {

// Under the generation-symmetric ansatz a_j = alpha_{|j|} the recursion
// collapses to a scalar recurrence in the generation index. The truncated
// system is closed with the asymptotic tail ratio
//   alpha_{N+1} = gamma alpha_N,  gamma = (d b_eff)^{-1/3},
// which respects the decay of the infinite profile. Damped Newton on the
// resulting tridiagonal system.
struct SymmetricSolve {
    std::vector<double> alpha;  // alpha_1..alpha_N
    bool converged = false;
    int iterations = 0;
};

inline SymmetricSolve solve_symmetric(const std::vector<double>& ct,  // ct[g] = coeff at generation g, g <= N+1
                                      int max_gen, int d,
                                      std::vector<double> alpha, double tol) {
    SymmetricSolve out;
    const std::size_t n = static_cast<std::size_t>(max_gen);
    const double gamma = std::cbrt(1.0 / (static_cast<double>(d) * ct[2] / ct[1]));

    auto eval = [&](const std::vector<double>& al, std::vector<double>& f) {
        f.assign(n, 0.0);
        for (std::size_t g = 1; g <= n; ++g) {
            const double prev = g >= 2 ? al[g - 2] : 0.0;
            const double next = g == n ? gamma * al[n - 1] : al[g];
            f[g - 1] = al[g - 1] + ct[g] * prev * prev -
                       static_cast<double>(d) * ct[g + 1] * al[g - 1] * next;
        }
    };
    auto max_abs = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };

    std::vector<double> f, f_trial;
    for (out.iterations = 0; out.iterations < 200; ++out.iterations) {
        eval(alpha, f);
        const double norm = max_abs(f);
        if (norm <= tol) {
            out.alpha = alpha;
            out.converged = true;
            return out;
        }
        // Tridiagonal Jacobian, dense solve at this scale.
        std::vector<double> jac(n * n, 0.0);
        for (std::size_t g = 1; g <= n; ++g) {
            const std::size_t r = g - 1;
            const double next = g == n ? gamma * alpha[n - 1] : alpha[g];
            jac[r * n + r] += 1.0 - static_cast<double>(d) * ct[g + 1] * next;
            if (g >= 2) jac[r * n + (g - 2)] += 2.0 * ct[g] * alpha[g - 2];
            if (g == n)
                jac[r * n + (n - 1)] += -static_cast<double>(d) * ct[g + 1] * alpha[n - 1] * gamma;
            else
                jac[r * n + g] += -static_cast<double>(d) * ct[g + 1] * alpha[g - 1];
        }
        // Gaussian elimination with partial pivoting.
        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) rhs[i] = -f[i];
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < n; ++r)
                if (std::abs(jac[r * n + col]) > std::abs(jac[pivot * n + col])) pivot = r;
            if (jac[pivot * n + col] == 0.0)
                throw solver_error("self-similar solve: singular Jacobian");
            if (pivot != col) {
                for (std::size_t cc = 0; cc < n; ++cc) std::swap(jac[pivot * n + cc], jac[col * n + cc]);
                std::swap(rhs[pivot], rhs[col]);
            }
            for (std::size_t r = col + 1; r < n; ++r) {
                const double factor = jac[r * n + col] / jac[col * n + col];
                if (factor == 0.0) continue;
                for (std::size_t cc = col; cc < n; ++cc) jac[r * n + cc] -= factor * jac[col * n + cc];
                rhs[r] -= factor * rhs[col];
            }
        }
        std::vector<double> step(n);
        for (std::size_t r = n; r-- > 0;) {
            double s = rhs[r];
            for (std::size_t cc = r + 1; cc < n; ++cc) s -= jac[r * n + cc] * step[cc];
            step[r] = s / jac[r * n + r];
        }
        // Backtracking line search on the residual norm.
        double lambda = 1.0;
        bool improved = false;
        std::vector<double> trial(n);
        while (lambda > 1e-10) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = alpha[i] + lambda * step[i];
            eval(trial, f_trial);
            if (max_abs(f_trial) < norm) {
                alpha = trial;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!improved)
            throw solver_error("self-similar solve: line search stalled at residual " +
                               std::to_string(norm));
    }
    throw solver_error("self-similar solve: no convergence after 200 iterations");
}

} // namespace detail

/// Solve the profile recursion on the generation-symmetric ansatz, then lift
/// to the full tree and verify the residual there. The guess is reduced to
/// per-generation means; an all-zero guess returns the (flagged) trivial
/// profile. Requires a generation-symmetric coefficient law.
inline SelfSimilarProfile solve_selfsimilar(const Tree& tree, std::span<const double> guess,
                                            double tol, double t0 = -1.0) {
    if (guess.size() != tree.node_count())
        throw std::invalid_argument("guess dimension does not match tree");
    if (guess[0] != 0.0)
        throw std::invalid_argument("guess root coefficient must be 0");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!(t0 < 0.0)) throw std::invalid_argument("t0 must be negative");

    const int nn = tree.max_generation();
    // Per-generation coefficient values; the law must be generation-symmetric
    // for the ansatz to make sense.
    std::vector<double> ct(static_cast<std::size_t>(nn) + 2, 0.0);
    for (int g = 1; g <= nn; ++g) {
        const double c = tree.coeff(tree.generation_begin(g));
        for (std::size_t j = tree.generation_begin(g); j < tree.generation_end(g); ++j)
            if (tree.coeff(j) != c)
                throw std::invalid_argument(
                    "self-similar ansatz requires generation-symmetric coefficients");
        ct[static_cast<std::size_t>(g)] = c;
    }
    ct[static_cast<std::size_t>(nn) + 1] = tree.ghost_coeff(tree.generation_begin(nn)).front();

    SelfSimilarProfile profile;
    profile.t0 = t0;
    profile.a.assign(tree.node_count(), 0.0);

    // Generation means of the guess.
    std::vector<double> alpha(static_cast<std::size_t>(nn), 0.0);
    bool all_zero = true;
    for (int g = 1; g <= nn; ++g) {
        double mean = 0.0;
        for (std::size_t j = tree.generation_begin(g); j < tree.generation_end(g); ++j)
            mean += guess[j];
        mean /= static_cast<double>(tree.generation_end(g) - tree.generation_begin(g));
        alpha[static_cast<std::size_t>(g) - 1] = mean;
        if (mean != 0.0) all_zero = false;
    }
    if (all_zero || nn == 0) {
        // The zero profile solves the recursion; report it as such rather than
        // passing it off as the nontrivial one.
        profile.converged = true;
        profile.residual_norm = 0.0;
        return profile;
    }

    auto sym = detail::solve_symmetric(ct, nn, tree.arity(), alpha, tol);
    for (NodeId j = 1; j < tree.node_count(); ++j)
        profile.a[j] = sym.alpha[static_cast<std::size_t>(tree.generation(j)) - 1];

    const auto res = residual_selfsimilar(tree, profile.a);
    profile.residual_norm = interior_residual_norm(tree, res);
    profile.converged = sym.converged && profile.residual_norm <= tol;
    return profile;
}

/// Time-reversed self-similar state: component j is -a_j / (-t - t0),
/// defined for t < -t0 and blowing up as t approaches -t0.
inline State time_reversed_state(const SelfSimilarProfile& profile, double t) {
    const double u = -t - profile.t0;
    if (!(u > 0.0))
        throw std::invalid_argument("time_reversed_state requires t < -t0 (before blow-up)");
    State x(profile.a.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = -profile.a[j] / u;
    x[0] = 0.0;
    return x;
}

struct NonuniquenessReport {
    TimeGrid grid;
    std::vector<double> l2_distance;          // per grid point
    std::vector<double> energy_selfsimilar;   // closed form
    std::vector<double> energy_galerkin;      // integrated finite-energy trajectory
    double profile_residual = 0.0;
    bool galerkin_blowup = false;
    double blowup_time = 0.0;

    double relative_divergence(std::size_t i) const {
        return l2_distance[i] / std::sqrt(energy_galerkin[0]);
    }
};

/// Sample the closed-form time-reversed trajectory and integrate the Galerkin
/// system from the same initial data; report distances and energy curves.
inline NonuniquenessReport nonuniqueness_experiment(const Tree& tree,
                                                    const SelfSimilarProfile& profile,
                                                    const TimeGrid& grid) {
    if (profile.a.size() != tree.node_count())
        throw std::invalid_argument("profile dimension does not match tree");
    if (!(grid.t_end < -profile.t0))
        throw std::invalid_argument("grid must end before the blow-up time -t0");

    NonuniquenessReport report;
    report.grid = grid;
    report.profile_residual = profile.residual_norm;

    const State x0 = time_reversed_state(profile, grid.t0);
    std::vector<State> galerkin;
    try {
        SdePath path = integrate_ode(tree, x0, grid);
        galerkin = std::move(path.states);
    } catch (const blowup_error& e) {
        report.galerkin_blowup = true;
        report.blowup_time = e.last_finite_time;
    }

    for (std::size_t i = 0; i < grid.n_points(); ++i) {
        const State xhat = time_reversed_state(profile, grid.time(i));
        report.energy_selfsimilar.push_back(energy(xhat));
        if (i < galerkin.size()) {
            double d2 = 0.0;
            for (std::size_t j = 0; j < xhat.size(); ++j) {
                const double diff = xhat[j] - galerkin[i][j];
                d2 += diff * diff;
            }
            report.l2_distance.push_back(std::sqrt(d2));
            report.energy_galerkin.push_back(energy(galerkin[i]));
        }
    }
    return report;
}

} // namespace dyadic
