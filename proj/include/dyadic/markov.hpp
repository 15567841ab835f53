#pragma once

// The q-matrix associated with the second-moment system, its forward
// Kolmogorov equation, the jump-and-hold chain, and structural checks.
//
// Two truncation closures are exposed:
//  - Leaky: states are the non-root nodes; diagonals keep the ghost terms and
//    the coefficient toward the pinned root, so flux through generation 1 and
//    generation N leaves the state space. This matrix reproduces the second
//    moments of the truncated linear SDE exactly.
//  - Conservative: states are all nodes including the root; diagonals equal
//    minus the within-truncation row sum, so total mass is preserved. This is
//    the setting for transition-function and uniqueness-style checks.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dyadic/philox.hpp"
#include "dyadic/time_grid.hpp"
#include "dyadic/tree.hpp"

namespace dyadic {

enum class QMode { Leaky, Conservative };

inline const char* qmode_name(QMode m) {
    return m == QMode::Leaky ? "leaky" : "conservative";
}

struct QMatrix {
    QMode mode = QMode::Conservative;
    std::size_t dim = 0;
    std::vector<double> diag;  // q_jj <= 0
    std::vector<std::vector<std::pair<std::size_t, double>>> off;  // per row: (col, q_jl)
    std::vector<NodeId> state_to_node;
    std::vector<std::ptrdiff_t> node_to_state;  // -1 where a node is not a state

    double rate(std::size_t state) const { return -diag[state]; }

    std::optional<std::size_t> state_of(NodeId node) const {
        if (node >= node_to_state.size() || node_to_state[node] < 0) return std::nullopt;
        return static_cast<std::size_t>(node_to_state[node]);
    }
};

/// Entries q_{j,parent} = sigma^2 c_j^2 and q_{j,k} = sigma^2 c_k^2 for
/// children k; each edge value is stored once and mirrored, so the matrix is
/// symmetric by construction. Diagonals are assembled from the same stored
/// values (plus the leak terms in Leaky mode) in a fixed order, which makes
/// the conservative row sums cancel exactly in floating point.
inline QMatrix build_qmatrix(const Tree& tree, QMode mode) {
    const double s2 = tree.sigma() * tree.sigma();
    QMatrix qm;
    qm.mode = mode;
    qm.node_to_state.assign(tree.node_count(), -1);

    const NodeId first_node = (mode == QMode::Leaky) ? 1 : 0;
    for (NodeId j = first_node; j < tree.node_count(); ++j) {
        qm.node_to_state[j] = static_cast<std::ptrdiff_t>(qm.state_to_node.size());
        qm.state_to_node.push_back(j);
    }
    qm.dim = qm.state_to_node.size();
    qm.off.resize(qm.dim);
    qm.diag.assign(qm.dim, 0.0);

    // Each edge value is computed once and mirrored into both rows.
    for (std::size_t s = 0; s < qm.dim; ++s) {
        const NodeId j = qm.state_to_node[s];
        if (j == 0) continue;
        const double v = s2 * tree.coeff(j) * tree.coeff(j);
        if (auto p = qm.state_of(tree.parent(j))) {
            qm.off[s].emplace_back(*p, v);
            qm.off[*p].emplace_back(s, v);
        }
    }
    // Diagonals from the stored row in list order plus the leak terms, so the
    // conservative defect cancels exactly.
    for (std::size_t s = 0; s < qm.dim; ++s) {
        const NodeId j = qm.state_to_node[s];
        double row = 0.0;
        for (const auto& [col, v] : qm.off[s]) row += v;
        if (mode == QMode::Leaky) {
            if (tree.generation(j) == 1 && j != 0)
                row += s2 * tree.coeff(j) * tree.coeff(j);  // flux into the pinned root
            row += s2 * tree.ghost_sq_sum(j);               // flux past the boundary
        }
        qm.diag[s] = -row;
    }
    return qm;
}

struct QMatrixReport {
    bool stable = false;
    double symmetric_defect = 0.0;                // max |q_jl - q_lj|
    std::vector<double> conservative_defect;      // per state: -q_jj - sum_{l != j} q_jl
};

inline QMatrixReport validate_qmatrix(const QMatrix& qm) {
    QMatrixReport report;
    report.stable = true;
    report.conservative_defect.assign(qm.dim, 0.0);

    // Dense mirror lookup would be wasteful; collect entries into a map-free
    // two-pass check using sorted copies.
    std::vector<std::vector<std::pair<std::size_t, double>>> rows(qm.dim);
    for (std::size_t s = 0; s < qm.dim; ++s) rows[s] = qm.off[s];
    for (auto& r : rows) std::sort(r.begin(), r.end());

    for (std::size_t s = 0; s < qm.dim; ++s) {
        if (!std::isfinite(qm.diag[s]) || qm.diag[s] > 0.0) report.stable = false;
        double row = 0.0;
        for (const auto& [col, v] : qm.off[s]) {
            if (!(v >= 0.0)) report.stable = false;
            row += v;
            // transpose entry
            const auto& rc = rows[col];
            auto it = std::lower_bound(rc.begin(), rc.end(),
                                       std::make_pair(s, -std::numeric_limits<double>::infinity()));
            const double mirror = (it != rc.end() && it->first == s) ? it->second : 0.0;
            report.symmetric_defect = std::max(report.symmetric_defect, std::abs(v - mirror));
        }
        report.conservative_defect[s] = -qm.diag[s] - row;
    }
    return report;
}

/// Row-vector multiply out = y Q.
inline void apply_q(const QMatrix& qm, std::span<const double> y, std::vector<double>& out) {
    out.assign(qm.dim, 0.0);
    for (std::size_t j = 0; j < qm.dim; ++j) {
        out[j] += y[j] * qm.diag[j];
        for (const auto& [l, v] : qm.off[j]) out[l] += y[j] * v;
    }
}

/// Solution samples of the forward equation y' = yQ, one row per grid point.
/// Carries the state map so downstream comparisons can translate node ids.
struct ForwardSolution {
    TimeGrid grid;
    std::size_t dim = 0;
    std::vector<NodeId> state_to_node;
    std::vector<double> y;  // row-major (time, state)

    double at(std::size_t time_index, std::size_t state) const {
        return y[time_index * dim + state];
    }
};

/// RK4 on the forward equation (by symmetry of Q the backward equation is the
/// same system read transposed). Refuses grids on which the solution develops
/// negative entries beyond round-off, which signals step-size instability.
inline ForwardSolution forward_solve(const QMatrix& qm, const std::vector<double>& initial,
                                     const TimeGrid& grid) {
    if (initial.size() != qm.dim)
        throw std::invalid_argument("initial vector size does not match q-matrix dimension");
    for (double v : initial)
        if (!(v >= 0.0)) throw std::invalid_argument("initial vector must be entrywise nonnegative");

    ForwardSolution sol;
    sol.grid = grid;
    sol.dim = qm.dim;
    sol.state_to_node = qm.state_to_node;
    sol.y.reserve(grid.n_points() * qm.dim);
    sol.y.insert(sol.y.end(), initial.begin(), initial.end());

    double scale = 1.0;
    for (double v : initial) scale = std::max(scale, v);
    const double tol = 1e-9 * scale;

    std::vector<double> y = initial, k1, k2, k3, k4, tmp(qm.dim);
    const double dt = grid.dt;
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
        apply_q(qm, y, k1);
        for (std::size_t j = 0; j < qm.dim; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
        apply_q(qm, tmp, k2);
        for (std::size_t j = 0; j < qm.dim; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
        apply_q(qm, tmp, k3);
        for (std::size_t j = 0; j < qm.dim; ++j) tmp[j] = y[j] + dt * k3[j];
        apply_q(qm, tmp, k4);
        for (std::size_t j = 0; j < qm.dim; ++j) {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if (y[j] < -tol)
                throw std::runtime_error(
                    "forward_solve: negative entry " + std::to_string(y[j]) + " at t = " +
                    std::to_string(grid.time(i + 1)) + "; step dt = " + std::to_string(dt) +
                    " is unstable for this q-matrix");
        }
        sol.y.insert(sol.y.end(), y.begin(), y.end());
    }
    return sol;
}

struct DenseMatrix {
    std::size_t dim = 0;
    std::vector<double> a;  // row-major

    explicit DenseMatrix(std::size_t dim = 0) : dim(dim), a(dim * dim, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * dim + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * dim + j]; }

    DenseMatrix multiply(const DenseMatrix& rhs) const {
        DenseMatrix out(dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t k = 0; k < dim; ++k) {
                const double v = (*this)(i, k);
                if (v == 0.0) continue;
                for (std::size_t j = 0; j < dim; ++j) out(i, j) += v * rhs(k, j);
            }
        return out;
    }
};

/// Transition function f(t): matrix forward equation F' = FQ from identity
/// initial data, integrated with RK4 on substeps of size about dt_hint.
inline DenseMatrix transition_matrix(const QMatrix& qm, double t, double dt_hint = 1e-4) {
    if (!(t >= 0.0)) throw std::invalid_argument("transition_matrix requires t >= 0");
    DenseMatrix f(qm.dim);
    for (std::size_t i = 0; i < qm.dim; ++i) f(i, i) = 1.0;
    if (t == 0.0) return f;

    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(t / dt_hint)));
    const double dt = t / static_cast<double>(steps);

    auto apply_rows = [&](const DenseMatrix& m, DenseMatrix& out) {
        out = DenseMatrix(qm.dim);
        for (std::size_t r = 0; r < qm.dim; ++r) {
            for (std::size_t j = 0; j < qm.dim; ++j) {
                const double yj = m(r, j);
                if (yj == 0.0) continue;
                out(r, j) += yj * qm.diag[j];
                for (const auto& [l, v] : qm.off[j]) out(r, l) += yj * v;
            }
        }
    };

    DenseMatrix k1, k2, k3, k4, tmp(qm.dim);
    for (std::size_t s = 0; s < steps; ++s) {
        apply_rows(f, k1);
        for (std::size_t i = 0; i < f.a.size(); ++i) tmp.a[i] = f.a[i] + 0.5 * dt * k1.a[i];
        apply_rows(tmp, k2);
        for (std::size_t i = 0; i < f.a.size(); ++i) tmp.a[i] = f.a[i] + 0.5 * dt * k2.a[i];
        apply_rows(tmp, k3);
        for (std::size_t i = 0; i < f.a.size(); ++i) tmp.a[i] = f.a[i] + dt * k3.a[i];
        apply_rows(tmp, k4);
        for (std::size_t i = 0; i < f.a.size(); ++i)
            f.a[i] += dt / 6.0 * (k1.a[i] + 2.0 * k2.a[i] + 2.0 * k3.a[i] + k4.a[i]);
    }
    return f;
}

/// Jump-and-hold realization of the chain.
struct JumpPath {
    std::vector<std::pair<std::size_t, double>> segments;  // (state, holding time)
    bool killed = false;           // leaky leak event before the horizon
    bool hit_absorbing = false;    // reached a state with rate 0; held to horizon
    double horizon = 0.0;

    /// State occupied at time t in [0, horizon]; nullopt once killed.
    std::optional<std::size_t> state_at(double t) const {
        double acc = 0.0;
        for (const auto& [s, hold] : segments) {
            acc += hold;
            if (t < acc) return s;
        }
        if (!killed && !segments.empty() && t <= horizon) return segments.back().first;
        return std::nullopt;
    }
};

/// Hold at state j for an exponential time with rate q_j = -q_jj, then jump
/// with probabilities q_jl / q_j; in leaky mode the remaining probability
/// mass kills the path.
inline JumpPath ctmc_simulate(const QMatrix& qm, std::size_t start, double horizon,
                              std::uint64_t seed, std::uint64_t chain_index = 0) {
    if (start >= qm.dim) throw std::invalid_argument("start state out of range");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");

    rng::UniformStream stream(seed, rng::domain_jump_chain, chain_index);
    JumpPath path;
    path.horizon = horizon;

    std::size_t state = start;
    double t = 0.0;
    while (t < horizon) {
        const double rate = qm.rate(state);
        if (rate <= 0.0) {
            path.segments.emplace_back(state, horizon - t);
            path.hit_absorbing = true;
            return path;
        }
        const double hold = stream.exponential(rate);
        if (t + hold >= horizon) {
            path.segments.emplace_back(state, horizon - t);
            return path;
        }
        path.segments.emplace_back(state, hold);
        t += hold;

        // Jump proportionally to the off-diagonal row; the residual mass
        // (leak defect) kills the path.
        double u = stream.next() * rate;
        bool jumped = false;
        for (const auto& [col, v] : qm.off[state]) {
            if (u < v) {
                state = col;
                jumped = true;
                break;
            }
            u -= v;
        }
        if (!jumped) {
            path.killed = true;
            return path;
        }
    }
    return path;
}

struct LaplacianReport {
    bool is_negative_semidefinite = false;  // -Q positive semidefinite
    bool diagonally_dominant = false;       // exact structural certificate
    double min_eigenvalue_upper_bound = 0.0;  // numerical smallest eigenvalue of -Q
    bool one_is_eigenvalue = false;         // whether 1 is in the spectrum of Q
};

/// -Q of a symmetric conservative q-matrix is a weighted graph Laplacian.
/// The structural certificate (symmetry, nonnegative off-diagonals, row
/// defects >= 0) proves positive semidefiniteness by diagonal dominance; the
/// dense eigensolve provides the numerical bound.
inline LaplacianReport laplacian_check(const QMatrix& qm) {
    LaplacianReport report;

    const QMatrixReport v = validate_qmatrix(qm);
    bool dominant = v.stable && v.symmetric_defect == 0.0;
    for (double defect : v.conservative_defect)
        if (defect < 0.0) dominant = false;
    report.diagonally_dominant = dominant;
    report.is_negative_semidefinite = dominant;

    if (qm.dim == 0) return report;

    Eigen::MatrixXd neg_q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(qm.dim),
                                                  static_cast<Eigen::Index>(qm.dim));
    for (std::size_t j = 0; j < qm.dim; ++j) {
        neg_q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = -qm.diag[j];
        for (const auto& [l, val] : qm.off[j])
            neg_q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) = -val;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(neg_q, Eigen::EigenvaluesOnly);
    const auto& eigs = solver.eigenvalues();
    report.min_eigenvalue_upper_bound = eigs(0);
    for (Eigen::Index i = 0; i < eigs.size(); ++i)
        if (std::abs(-eigs(i) - 1.0) < 1e-9) report.one_is_eigenvalue = true;
    return report;
}

} // namespace dyadic
