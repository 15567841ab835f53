#pragma once

// Vector fields of the cascade system on a truncated tree. The root intensity
// is pinned to zero in every formulation; all operations write a zero root
// component and never inject noise into it.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dyadic/tree.hpp"

namespace dyadic {

/// Per-node intensities X_j, indexed like the tree nodes. values[0] == 0.
using State = std::vector<double>;

enum class ModelKind {
    DeterministicNonlinear,
    ItoNonlinear,
    ItoLinear,
    StratonovichNonlinear,
    StratonovichLinear,
};

inline bool is_ito(ModelKind m) {
    return m == ModelKind::ItoNonlinear || m == ModelKind::ItoLinear;
}
inline bool is_stratonovich(ModelKind m) {
    return m == ModelKind::StratonovichNonlinear || m == ModelKind::StratonovichLinear;
}
inline bool is_linear(ModelKind m) {
    return m == ModelKind::ItoLinear || m == ModelKind::StratonovichLinear;
}

inline const char* model_name(ModelKind m) {
    switch (m) {
        case ModelKind::DeterministicNonlinear: return "deterministic-nonlinear";
        case ModelKind::ItoNonlinear: return "ito-nonlinear";
        case ModelKind::ItoLinear: return "ito-linear";
        case ModelKind::StratonovichNonlinear: return "stratonovich-nonlinear";
        case ModelKind::StratonovichLinear: return "stratonovich-linear";
    }
    return "?";
}

namespace detail {
inline void check_state(const Tree& tree, std::span<const double> x) {
    if (x.size() != tree.node_count())
        throw std::invalid_argument("state dimension does not match tree node count");
}
} // namespace detail

/// Component j of the inviscid drift: c_j x_{parent}^2 - x_j sum_k c_k x_k.
inline void drift_deterministic(const Tree& tree, std::span<const double> x, State& out) {
    detail::check_state(tree, x);
    out.assign(tree.node_count(), 0.0);
    const int d = tree.arity();
    for (NodeId j = 1; j < tree.node_count(); ++j) {
        const double xp = x[tree.parent(j)];
        double s = 0.0;
        if (tree.has_children(j)) {
            const NodeId first = tree.first_child(j);
            for (int k = 0; k < d; ++k)
                s += tree.coeff(first + static_cast<std::size_t>(k)) * x[first + static_cast<std::size_t>(k)];
        }
        out[j] = tree.coeff(j) * xp * xp - x[j] * s;
    }
}

inline State drift_deterministic(const Tree& tree, std::span<const double> x) {
    State out;
    drift_deterministic(tree, x, out);
    return out;
}

/// -(sigma^2/2)(c_j^2 + sum_k c_k^2) x_j with ghost coefficients at the
/// boundary generation.
inline void ito_correction(const Tree& tree, std::span<const double> x, State& out) {
    detail::check_state(tree, x);
    out.assign(tree.node_count(), 0.0);
    const double half_s2 = 0.5 * tree.sigma() * tree.sigma();
    for (NodeId j = 1; j < tree.node_count(); ++j)
        out[j] = -half_s2 * tree.correction_coeff(j) * x[j];
}

inline State ito_correction(const Tree& tree, std::span<const double> x) {
    State out;
    ito_correction(tree, x, out);
    return out;
}

/// The slice of the Ito correction produced by the simulated noise itself
/// (quadratic covariation of the materialized non-root edges).
inline void ito_correction_interior(const Tree& tree, std::span<const double> x, State& out) {
    detail::check_state(tree, x);
    out.assign(tree.node_count(), 0.0);
    const double half_s2 = 0.5 * tree.sigma() * tree.sigma();
    for (NodeId j = 1; j < tree.node_count(); ++j)
        out[j] = -half_s2 * tree.correction_coeff_interior(j) * x[j];
}

/// The complementary slice: root edge at generation 1, ghost edges at
/// generation N. A Stratonovich-form integrator must keep this as explicit
/// drift for the truncated system to stay equivalent to the Ito form.
inline void ito_correction_boundary(const Tree& tree, std::span<const double> x, State& out) {
    detail::check_state(tree, x);
    out.assign(tree.node_count(), 0.0);
    const double half_s2 = 0.5 * tree.sigma() * tree.sigma();
    for (NodeId j = 1; j < tree.node_count(); ++j)
        out[j] = -half_s2 * tree.correction_coeff_boundary(j) * x[j];
}

/// Drift of the requested formulation.
inline void drift(ModelKind model, const Tree& tree, std::span<const double> x, State& out) {
    switch (model) {
        case ModelKind::DeterministicNonlinear:
        case ModelKind::StratonovichNonlinear:
            // Stratonovich drift is the Ito drift minus the correction, which
            // cancels back to the deterministic field.
            drift_deterministic(tree, x, out);
            return;
        case ModelKind::ItoNonlinear: {
            drift_deterministic(tree, x, out);
            State corr;
            ito_correction(tree, x, corr);
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += corr[j];
            return;
        }
        case ModelKind::ItoLinear:
            ito_correction(tree, x, out);
            return;
        case ModelKind::StratonovichLinear:
            detail::check_state(tree, x);
            out.assign(tree.node_count(), 0.0);
            return;
    }
    throw std::invalid_argument("unknown model kind");
}

inline State drift(ModelKind model, const Tree& tree, std::span<const double> x) {
    State out;
    drift(model, tree, x, out);
    return out;
}

/// Diffusion increment: component j is
///   sigma (c_j x_{parent} dW_j - sum_{k in children} c_k x_k dW_k),
/// with the root row forced to zero. One increment per node; ghost children
/// carry zero intensity so no ghost Brownian motions appear.
inline void apply_noise(const Tree& tree, std::span<const double> x,
                        std::span<const double> dw, State& out) {
    detail::check_state(tree, x);
    if (dw.size() != tree.node_count())
        throw std::invalid_argument("noise increment count does not match tree node count");
    out.assign(tree.node_count(), 0.0);
    const double sigma = tree.sigma();
    const int d = tree.arity();
    for (NodeId j = 1; j < tree.node_count(); ++j) {
        double acc = tree.coeff(j) * x[tree.parent(j)] * dw[j];
        if (tree.has_children(j)) {
            const NodeId first = tree.first_child(j);
            for (int k = 0; k < d; ++k) {
                const NodeId child = first + static_cast<std::size_t>(k);
                acc -= tree.coeff(child) * x[child] * dw[child];
            }
        }
        out[j] = sigma * acc;
    }
}

inline State apply_noise(const Tree& tree, std::span<const double> x,
                         std::span<const double> dw) {
    State out;
    apply_noise(tree, x, dw, out);
    return out;
}

/// Total kinetic energy sum_j x_j^2.
inline double energy(std::span<const double> x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

/// Instantaneous energy leak through the truncation boundary:
/// sigma^2 sum_{|j|=N} (sum of squared ghost coefficients) x_j^2.
inline double boundary_dissipation(const Tree& tree, std::span<const double> x) {
    detail::check_state(tree, x);
    const double s2 = tree.sigma() * tree.sigma();
    double total = 0.0;
    const int nn = tree.max_generation();
    for (std::size_t j = tree.generation_begin(nn); j < tree.generation_end(nn); ++j)
        total += tree.ghost_sq_sum(j) * x[j] * x[j];
    return s2 * total;
}

/// Instantaneous energy leak into the pinned root:
/// sigma^2 sum_{|j|=1} c_j^2 x_j^2. The root absorbs this flux because its
/// intensity is held at zero instead of evolving.
inline double root_dissipation(const Tree& tree, std::span<const double> x) {
    detail::check_state(tree, x);
    if (tree.max_generation() < 1) return 0.0;
    const double s2 = tree.sigma() * tree.sigma();
    double total = 0.0;
    for (std::size_t j = tree.generation_begin(1); j < tree.generation_end(1); ++j)
        total += tree.coeff(j) * tree.coeff(j) * x[j] * x[j];
    return s2 * total;
}

/// Full leak rate of the truncated system (boundary plus root). The energy of
/// linear and nonlinear Ito paths satisfies
///   d energy = -dissipation_rate dt + martingale
/// with the martingale telescoping to zero on the truncated tree.
inline double dissipation_rate(const Tree& tree, std::span<const double> x) {
    return boundary_dissipation(tree, x) + root_dissipation(tree, x);
}

} // namespace dyadic
