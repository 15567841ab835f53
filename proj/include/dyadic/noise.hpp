#pragma once

// Reproducible per-path noise: every Brownian increment is a pure function of
// (seed, path_index, node, step), independent of evaluation order and thread
// scheduling.

#include <cmath>
#include <cstdint>

#include "dyadic/philox.hpp"
#include "dyadic/tree.hpp"

namespace dyadic {

struct NoisePlan {
    std::uint64_t seed = 0;
    std::uint64_t path_index = 0;
    double dt = 0.0;
    bool zeroed = false;  // test hook: all increments identically zero

    NoisePlan() = default;
    NoisePlan(std::uint64_t seed, std::uint64_t path_index, double dt)
        : seed(seed), path_index(path_index), dt(dt), sqrt_dt_(std::sqrt(dt)) {}

    static NoisePlan zeros(double dt) {
        NoisePlan plan(0, 0, dt);
        plan.zeroed = true;
        return plan;
    }

    /// Gaussian increment of W_node over step i, mean 0, variance dt.
    double increment(NodeId node, std::size_t step) const {
        if (zeroed) return 0.0;
        return sqrt_dt_ * rng::gaussian(seed, rng::domain_sde_noise,
                                        {static_cast<std::uint32_t>(path_index),
                                         static_cast<std::uint32_t>(path_index >> 32),
                                         static_cast<std::uint32_t>(node),
                                         static_cast<std::uint32_t>(step)});
    }

private:
    double sqrt_dt_ = 0.0;
};

} // namespace dyadic
