#pragma once

// Monte Carlo moment estimation, statistical comparison against forward-
// equation oracles, and pathwise energy audits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dyadic/girsanov.hpp"
#include "dyadic/integrate.hpp"
#include "dyadic/markov.hpp"

namespace dyadic {

/// Per-(time, node) sample moments of X_j and X_j^2 over an ensemble.
struct MomentTable {
    TimeGrid grid;
    std::size_t n_nodes = 0;
    std::size_t n_paths = 0;
    std::vector<double> mean_x, var_x;      // row-major (time, node)
    std::vector<double> mean_xsq, var_xsq;

    std::size_t index(std::size_t time_index, NodeId node) const {
        return time_index * n_nodes + node;
    }
};

/// Streaming Welford accumulator; merging partials in a fixed order keeps the
/// result bit-identical for any worker count.
class MomentAccumulator {
public:
    MomentAccumulator(const TimeGrid& grid, std::size_t n_nodes)
        : grid_(grid), n_nodes_(n_nodes) {
        const std::size_t cells = grid.n_points() * n_nodes;
        mean_x_.assign(cells, 0.0);
        m2_x_.assign(cells, 0.0);
        mean_xsq_.assign(cells, 0.0);
        m2_xsq_.assign(cells, 0.0);
    }

    void consume(std::size_t /*path_index*/, const SdePath& path) {
        ++count_;
        const double n = static_cast<double>(count_);
        for (std::size_t i = 0; i < path.states.size(); ++i) {
            const State& x = path.states[i];
            const std::size_t base = i * n_nodes_;
            for (std::size_t j = 0; j < n_nodes_; ++j) {
                const std::size_t c = base + j;
                const double v = x[j];
                double delta = v - mean_x_[c];
                mean_x_[c] += delta / n;
                m2_x_[c] += delta * (v - mean_x_[c]);
                const double v2 = v * v;
                delta = v2 - mean_xsq_[c];
                mean_xsq_[c] += delta / n;
                m2_xsq_[c] += delta * (v2 - mean_xsq_[c]);
            }
        }
    }

    void merge(MomentAccumulator&& other) {
        if (other.count_ == 0) return;
        if (count_ == 0) {
            *this = std::move(other);
            return;
        }
        const double na = static_cast<double>(count_);
        const double nb = static_cast<double>(other.count_);
        const double n = na + nb;
        for (std::size_t c = 0; c < mean_x_.size(); ++c) {
            double delta = other.mean_x_[c] - mean_x_[c];
            mean_x_[c] += delta * nb / n;
            m2_x_[c] += other.m2_x_[c] + delta * delta * na * nb / n;
            delta = other.mean_xsq_[c] - mean_xsq_[c];
            mean_xsq_[c] += delta * nb / n;
            m2_xsq_[c] += other.m2_xsq_[c] + delta * delta * na * nb / n;
        }
        count_ += other.count_;
    }

    MomentTable table() const {
        if (count_ < 2)
            throw std::invalid_argument("moment estimation needs at least 2 paths");
        MomentTable t;
        t.grid = grid_;
        t.n_nodes = n_nodes_;
        t.n_paths = count_;
        t.mean_x = mean_x_;
        t.mean_xsq = mean_xsq_;
        t.var_x.resize(m2_x_.size());
        t.var_xsq.resize(m2_xsq_.size());
        const double denom = static_cast<double>(count_) - 1.0;
        for (std::size_t c = 0; c < m2_x_.size(); ++c) {
            t.var_x[c] = m2_x_[c] / denom;
            t.var_xsq[c] = m2_xsq_[c] / denom;
        }
        return t;
    }

private:
    TimeGrid grid_;
    std::size_t n_nodes_ = 0;
    std::size_t count_ = 0;
    std::vector<double> mean_x_, m2_x_, mean_xsq_, m2_xsq_;
};

inline MomentTable estimate_moments(const Tree& tree, ModelKind model, const State& x0,
                                    const TimeGrid& grid, std::uint64_t seed,
                                    std::size_t n_paths, Scheme scheme,
                                    unsigned workers = 0, std::uint64_t path_offset = 0) {
    if (n_paths < 2)
        throw std::invalid_argument("moment estimation needs at least 2 paths");
    MomentAccumulator acc(grid, tree.node_count());
    simulate_ensemble(tree, model, x0, grid, seed, n_paths, scheme, acc, workers, path_offset);
    return acc.table();
}

/// Comparison of Monte Carlo second moments against a forward solution, in
/// z-score units. Cells with zero sample variance (exactly deterministic
/// configurations) fall back to an absolute tolerance.
struct ComparisonReport {
    double z_threshold = 3.0;
    double abs_tol = 1e-8;
    std::size_t n_cells = 0;
    std::size_t n_z_cells = 0;
    std::size_t n_violations = 0;  // |z| > threshold, or zero-variance defect > abs_tol
    double max_abs_z = 0.0;
    double violating_fraction = 0.0;
    bool pass = false;  // max |z| within threshold and all zero-variance cells within abs_tol

    // Per-cell data, row-major (time, state); z is NaN on zero-variance cells.
    std::vector<double> z;
    std::vector<double> mc_value, oracle_value, std_error;
};

inline ComparisonReport compare_moments(const MomentTable& mc, const ForwardSolution& oracle,
                                        double z_threshold = 3.0, double abs_tol = 1e-8) {
    if (!mc.grid.same_as(oracle.grid))
        throw std::invalid_argument("moment table and forward solution grids differ");
    for (NodeId node : oracle.state_to_node)
        if (node >= mc.n_nodes)
            throw std::invalid_argument("forward solution state map does not fit the moment table");

    ComparisonReport report;
    report.z_threshold = z_threshold;
    report.abs_tol = abs_tol;
    const std::size_t n_times = mc.grid.n_points();
    report.n_cells = n_times * oracle.dim;
    report.z.assign(report.n_cells, std::numeric_limits<double>::quiet_NaN());
    report.mc_value.assign(report.n_cells, 0.0);
    report.oracle_value.assign(report.n_cells, 0.0);
    report.std_error.assign(report.n_cells, 0.0);

    bool abs_ok = true;
    for (std::size_t i = 0; i < n_times; ++i) {
        for (std::size_t s = 0; s < oracle.dim; ++s) {
            const std::size_t cell = i * oracle.dim + s;
            const NodeId node = oracle.state_to_node[s];
            const double mc_val = mc.mean_xsq[mc.index(i, node)];
            const double var = mc.var_xsq[mc.index(i, node)];
            const double target = oracle.at(i, s);
            report.mc_value[cell] = mc_val;
            report.oracle_value[cell] = target;
            if (var > 0.0) {
                const double se = std::sqrt(var / static_cast<double>(mc.n_paths));
                const double zv = (mc_val - target) / se;
                report.std_error[cell] = se;
                report.z[cell] = zv;
                ++report.n_z_cells;
                report.max_abs_z = std::max(report.max_abs_z, std::abs(zv));
                if (std::abs(zv) > z_threshold) ++report.n_violations;
            } else if (std::abs(mc_val - target) > abs_tol) {
                ++report.n_violations;
                abs_ok = false;
            }
        }
    }
    report.violating_fraction =
        static_cast<double>(report.n_violations) / static_cast<double>(report.n_cells);
    report.pass = abs_ok && report.max_abs_z <= z_threshold;
    return report;
}

/// Upper-tail standard normal quantile: the z with P(Z > z) = p.
inline double normal_quantile_upper(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("p must lie in (0,1)");
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(mid / std::sqrt(2.0)) > p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Pathwise audit of the energy identity
///   energy(X(t)) + int_0^t dissipation_rate(X) ds = energy(x0)
/// (left-endpoint quadrature) together with the reconstruction of the
/// martingale part, which telescopes to ~0 on the truncated tree.
struct EnergyAudit {
    TimeGrid grid;
    std::vector<double> residual;        // per grid point
    std::vector<double> martingale_sum;  // sum_j N_j(t) reconstruction

    double terminal_residual() const { return residual.back(); }
    double max_abs_martingale() const {
        double m = 0.0;
        for (double v : martingale_sum) m = std::max(m, std::abs(v));
        return m;
    }
};

inline EnergyAudit energy_audit(const Tree& tree, const SdePath& path) {
    const std::size_t n = tree.node_count();
    if (path.states.empty() || path.states.front().size() != n)
        throw std::invalid_argument("path dimension does not match tree");

    EnergyAudit audit;
    audit.grid = path.grid;
    audit.residual.reserve(path.grid.n_points());
    audit.martingale_sum.reserve(path.grid.n_points());

    const double e0 = energy(path.states.front());
    const double dt = path.grid.dt;
    const double sigma = tree.sigma();
    double dissipated = 0.0;
    double mart = 0.0;
    audit.residual.push_back(0.0);
    audit.martingale_sum.push_back(0.0);

    for (std::size_t i = 0; i < path.grid.n_steps; ++i) {
        const State& x = path.states[i];
        dissipated += dissipation_rate(tree, x) * dt;
        // dN_j = sigma c_j X_parent X_j dB_j - sigma sum_k c_k X_j X_k dB_k,
        // summed over all nodes; interior edge terms cancel pairwise.
        double dn = 0.0;
        for (NodeId j = 1; j < n; ++j) {
            const double dw = path.noise.increment(j, i);
            dn += sigma * tree.coeff(j) * x[tree.parent(j)] * x[j] * dw;
            if (tree.has_children(j)) {
                const NodeId first = tree.first_child(j);
                for (int k = 0; k < tree.arity(); ++k) {
                    const NodeId child = first + static_cast<std::size_t>(k);
                    dn -= sigma * tree.coeff(child) * x[j] * x[child] *
                          path.noise.increment(child, i);
                }
            }
        }
        // Root row: the root is pinned, so only the children part appears and
        // it vanishes with x[0] = 0; nothing to add.
        mart += dn;
        audit.martingale_sum.push_back(mart);
        audit.residual.push_back(energy(path.states[i + 1]) + dissipated - e0);
    }
    return audit;
}

/// Per-path bounds over an ensemble: the energy-controlled property
/// (energy never exceeds its initial value) and the fourth-moment bound
/// (sum_j X_j^4 <= (sum_j x_j^2)^2), both up to a discretization tolerance.
struct PathBoundReport {
    std::size_t n_paths = 0;
    double tolerance = 0.0;
    std::size_t energy_violations = 0;
    std::size_t fourth_moment_violations = 0;
    double max_energy_excess = 0.0;   // max over paths of max_t energy - energy(x0)
    double max_fourth_excess = 0.0;   // max over paths of max_t sum x^4 - energy(x0)^2
};

class PathBoundSink {
public:
    explicit PathBoundSink(double tolerance) { report_.tolerance = tolerance; }

    void consume(std::size_t /*path_index*/, const SdePath& path) {
        const double e0 = energy(path.states.front());
        const double bound4 = e0 * e0;
        double max_energy = 0.0, max_fourth = 0.0;
        for (const State& x : path.states) {
            double e = 0.0, m4 = 0.0;
            for (double v : x) {
                const double v2 = v * v;
                e += v2;
                m4 += v2 * v2;
            }
            max_energy = std::max(max_energy, e - e0);
            max_fourth = std::max(max_fourth, m4 - bound4);
        }
        ++report_.n_paths;
        report_.max_energy_excess = std::max(report_.max_energy_excess, max_energy);
        report_.max_fourth_excess = std::max(report_.max_fourth_excess, max_fourth);
        if (max_energy > report_.tolerance) ++report_.energy_violations;
        if (max_fourth > report_.tolerance) ++report_.fourth_moment_violations;
    }

    void merge(PathBoundSink&& other) {
        report_.n_paths += other.report_.n_paths;
        report_.energy_violations += other.report_.energy_violations;
        report_.fourth_moment_violations += other.report_.fourth_moment_violations;
        report_.max_energy_excess = std::max(report_.max_energy_excess, other.report_.max_energy_excess);
        report_.max_fourth_excess = std::max(report_.max_fourth_excess, other.report_.max_fourth_excess);
    }

    const PathBoundReport& report() const { return report_; }

private:
    PathBoundReport report_;
};

inline PathBoundReport fourth_moment_check(const Tree& tree, ModelKind model, const State& x0,
                                           const TimeGrid& grid, std::uint64_t seed,
                                           std::size_t n_paths, Scheme scheme, double tolerance,
                                           unsigned workers = 0) {
    PathBoundSink sink(tolerance);
    simulate_ensemble(tree, model, x0, grid, seed, n_paths, scheme, sink, workers);
    return sink.report();
}

/// Terminal-time statistics of an ensemble: plain means of X_j(T) and, when a
/// ledger direction is requested, importance weights from the inverse ledger.
struct TerminalStats {
    std::size_t n_paths = 0;
    std::vector<double> sum_x, sum_x_sq;          // per node, unweighted
    std::vector<double> sum_wx, sum_wx_sq;        // per node, density-weighted
    double sum_w = 0.0, sum_w_sq = 0.0;

    void resize(std::size_t n_nodes) {
        sum_x.assign(n_nodes, 0.0);
        sum_x_sq.assign(n_nodes, 0.0);
        sum_wx.assign(n_nodes, 0.0);
        sum_wx_sq.assign(n_nodes, 0.0);
    }

    double mean(NodeId j) const { return sum_x[j] / static_cast<double>(n_paths); }
    double std_error(NodeId j) const {
        const double n = static_cast<double>(n_paths);
        const double m = sum_x[j] / n;
        const double var = std::max(0.0, (sum_x_sq[j] - n * m * m) / (n - 1.0));
        return std::sqrt(var / n);
    }
    double weighted_mean(NodeId j) const { return sum_wx[j] / static_cast<double>(n_paths); }
    double weighted_std_error(NodeId j) const {
        const double n = static_cast<double>(n_paths);
        const double m = sum_wx[j] / n;
        const double var = std::max(0.0, (sum_wx_sq[j] - n * m * m) / (n - 1.0));
        return std::sqrt(var / n);
    }
    double density_mean() const { return sum_w / static_cast<double>(n_paths); }
    double density_std_error() const {
        const double n = static_cast<double>(n_paths);
        const double m = sum_w / n;
        const double var = std::max(0.0, (sum_w_sq - n * m * m) / (n - 1.0));
        return std::sqrt(var / n);
    }
    double effective_sample_size() const {
        return sum_w_sq > 0.0 ? sum_w * sum_w / sum_w_sq : 0.0;
    }
};

class TerminalSink {
public:
    TerminalSink(const Tree& tree, bool with_inverse_ledger)
        : tree_(&tree), with_ledger_(with_inverse_ledger) {
        stats_.resize(tree.node_count());
    }

    void consume(std::size_t /*path_index*/, const SdePath& path) {
        ++stats_.n_paths;
        const State& xt = path.states.back();
        double w = 1.0;
        if (with_ledger_) {
            w = ledger_inverse(*tree_, path).terminal_density();
            stats_.sum_w += w;
            stats_.sum_w_sq += w * w;
        }
        for (std::size_t j = 0; j < xt.size(); ++j) {
            stats_.sum_x[j] += xt[j];
            stats_.sum_x_sq[j] += xt[j] * xt[j];
            if (with_ledger_) {
                const double wx = w * xt[j];
                stats_.sum_wx[j] += wx;
                stats_.sum_wx_sq[j] += wx * wx;
            }
        }
    }

    void merge(TerminalSink&& other) {
        stats_.n_paths += other.stats_.n_paths;
        stats_.sum_w += other.stats_.sum_w;
        stats_.sum_w_sq += other.stats_.sum_w_sq;
        for (std::size_t j = 0; j < stats_.sum_x.size(); ++j) {
            stats_.sum_x[j] += other.stats_.sum_x[j];
            stats_.sum_x_sq[j] += other.stats_.sum_x_sq[j];
            stats_.sum_wx[j] += other.stats_.sum_wx[j];
            stats_.sum_wx_sq[j] += other.stats_.sum_wx_sq[j];
        }
    }

    const TerminalStats& stats() const { return stats_; }

private:
    const Tree* tree_;
    bool with_ledger_;
    TerminalStats stats_;
};

} // namespace dyadic
