#pragma once

// Fixed-step integrators for the deterministic system (RK4) and the SDEs
// (Euler-Maruyama on the Ito forms, stochastic Heun on the Stratonovich
// forms), plus deterministic block-parallel ensembles.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dyadic/dynamics.hpp"
#include "dyadic/noise.hpp"
#include "dyadic/time_grid.hpp"

namespace dyadic {

enum class Scheme { EulerMaruyama, Heun };

inline const char* scheme_name(Scheme s) {
    return s == Scheme::EulerMaruyama ? "euler-maruyama" : "heun";
}

/// One trajectory on a time grid together with the noise plan that produced
/// it, so change-of-measure ledgers can be rebuilt afterwards.
struct SdePath {
    TimeGrid grid;
    ModelKind model = ModelKind::DeterministicNonlinear;
    NoisePlan noise;
    std::vector<State> states;  // grid.n_points() entries

    const State& at(std::size_t i) const { return states[i]; }
    const State& front() const { return states.front(); }
    const State& back() const { return states.back(); }
};

namespace detail {

inline void check_initial(const Tree& tree, const State& x0) {
    check_state(tree, x0);
    if (x0[0] != 0.0)
        throw std::invalid_argument("initial state must have zero root component");
}

inline bool finite(const State& x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return std::isfinite(e);
}

[[noreturn]] inline void throw_blowup(const TimeGrid& grid, std::size_t step,
                                      std::uint64_t path_index) {
    const double t_last = grid.time(step);
    throw blowup_error("integration blew up on path " + std::to_string(path_index) +
                           "; last finite time t = " + std::to_string(t_last),
                       t_last);
}

} // namespace detail

/// Classical RK4 on the deterministic drift. Energy is conserved up to
/// O(dt^4) by the telescoping structure of the drift.
inline SdePath integrate_ode(const Tree& tree, const State& x0, const TimeGrid& grid) {
    detail::check_initial(tree, x0);
    SdePath path;
    path.grid = grid;
    path.model = ModelKind::DeterministicNonlinear;
    path.noise = NoisePlan::zeros(grid.dt);
    path.states.reserve(grid.n_points());
    path.states.push_back(x0);

    const std::size_t n = tree.node_count();
    State k1, k2, k3, k4, tmp(n);
    State x = x0;
    for (std::size_t i = 0; i < grid.n_steps; ++i) {
        const double dt = grid.dt;
        drift_deterministic(tree, x, k1);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * dt * k1[j];
        drift_deterministic(tree, tmp, k2);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + 0.5 * dt * k2[j];
        drift_deterministic(tree, tmp, k3);
        for (std::size_t j = 0; j < n; ++j) tmp[j] = x[j] + dt * k3[j];
        drift_deterministic(tree, tmp, k4);
        for (std::size_t j = 0; j < n; ++j)
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        x[0] = 0.0;
        if (!detail::finite(x)) detail::throw_blowup(grid, i, 0);
        path.states.push_back(x);
    }
    return path;
}

/// One SDE trajectory. Euler-Maruyama requires an Ito kind; Heun requires a
/// Stratonovich kind. The Heun predictor-corrector keeps the boundary part of
/// the Ito correction (root and ghost edges) as explicit drift: the simulated
/// Brownian motions generate only the interior covariation, and without this
/// term the truncated Stratonovich system would not match the Ito one in law.
inline SdePath integrate_sde(const Tree& tree, ModelKind model, const State& x0,
                             const TimeGrid& grid, const NoisePlan& noise, Scheme scheme) {
    detail::check_initial(tree, x0);
    if (scheme == Scheme::EulerMaruyama && !is_ito(model))
        throw std::invalid_argument("Euler-Maruyama integrates the Ito kinds only");
    if (scheme == Scheme::Heun && !is_stratonovich(model))
        throw std::invalid_argument("Heun integrates the Stratonovich kinds only");

    SdePath path;
    path.grid = grid;
    path.model = model;
    path.noise = noise;
    path.states.reserve(grid.n_points());
    path.states.push_back(x0);

    const std::size_t n = tree.node_count();
    const double dt = grid.dt;
    State x = x0;
    State dw(n, 0.0), a0, a1, g0, g1, pred(n), extra;

    for (std::size_t i = 0; i < grid.n_steps; ++i) {
        for (NodeId j = 1; j < n; ++j) dw[j] = noise.increment(j, i);

        if (scheme == Scheme::EulerMaruyama) {
            drift(model, tree, x, a0);
            apply_noise(tree, x, dw, g0);
            for (std::size_t j = 0; j < n; ++j) x[j] += a0[j] * dt + g0[j];
        } else {
            auto strat_drift = [&](const State& y, State& out) {
                ito_correction_boundary(tree, y, out);
                if (model == ModelKind::StratonovichNonlinear) {
                    drift_deterministic(tree, y, extra);
                    for (std::size_t j = 0; j < n; ++j) out[j] += extra[j];
                }
            };
            strat_drift(x, a0);
            apply_noise(tree, x, dw, g0);
            for (std::size_t j = 0; j < n; ++j) pred[j] = x[j] + a0[j] * dt + g0[j];
            pred[0] = 0.0;
            strat_drift(pred, a1);
            apply_noise(tree, pred, dw, g1);
            for (std::size_t j = 0; j < n; ++j)
                x[j] += 0.5 * (a0[j] + a1[j]) * dt + 0.5 * (g0[j] + g1[j]);
        }
        x[0] = 0.0;
        if (!detail::finite(x)) detail::throw_blowup(grid, i, noise.path_index);
        path.states.push_back(x);
    }
    return path;
}

inline unsigned default_worker_count() {
    if (const char* env = std::getenv("DYADIC_MAX_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Paths are partitioned into fixed blocks; each block is reduced into its own
// sink copy and the partials are merged in block order, so the result is
// bit-identical for any worker count.
inline constexpr std::size_t ensemble_block_size = 64;

template <class Sink>
void simulate_ensemble(const Tree& tree, ModelKind model, const State& x0,
                       const TimeGrid& grid, std::uint64_t seed, std::size_t n_paths,
                       Scheme scheme, Sink& sink, unsigned workers = 0,
                       std::uint64_t path_offset = 0) {
    if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
    detail::check_initial(tree, x0);
    if (workers == 0) workers = default_worker_count();

    const std::size_t n_blocks = (n_paths + ensemble_block_size - 1) / ensemble_block_size;
    std::vector<Sink> partials(n_blocks, sink);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> failed_block{n_blocks};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= n_blocks || failed_block.load() < n_blocks) return;
            const std::size_t begin = b * ensemble_block_size;
            const std::size_t end = std::min(n_paths, begin + ensemble_block_size);
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    NoisePlan plan(seed, path_offset + i, grid.dt);
                    SdePath path = integrate_sde(tree, model, x0, grid, plan, scheme);
                    partials[b].consume(i, path);
                }
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (b < failed_block.load()) {
                    failed_block.store(b);
                    error = std::current_exception();
                }
                return;
            }
        }
    };

    const unsigned n_threads = static_cast<unsigned>(
        std::min<std::size_t>(workers, n_blocks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    for (std::size_t b = 0; b < n_blocks; ++b) sink.merge(std::move(partials[b]));
}

/// Convenience for small ensembles: materialize every path.
inline std::vector<SdePath> simulate_paths(const Tree& tree, ModelKind model,
                                           const State& x0, const TimeGrid& grid,
                                           std::uint64_t seed, std::size_t n_paths,
                                           Scheme scheme, std::uint64_t path_offset = 0) {
    if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
    std::vector<SdePath> out;
    out.reserve(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i)
        out.push_back(integrate_sde(tree, model, x0, grid,
                                    NoisePlan(seed, path_offset + i, grid.dt), scheme));
    return out;
}

} // namespace dyadic
