#pragma once

#include <cmath>
#include <cstddef>

#include "dyadic/errors.hpp"

namespace dyadic {

/// Fixed-step time grid t_i = t0 + i dt, i = 0..n_steps.
struct TimeGrid {
    double t0 = 0.0;
    double t_end = 1.0;
    double dt = 1e-4;
    std::size_t n_steps = 0;

    static TimeGrid from_step(double t0, double t_end, double dt) {
        if (!(dt > 0.0)) throw config_error("time step dt must be positive");
        if (!(t_end > t0)) throw config_error("t_end must exceed t0");
        TimeGrid grid;
        grid.t0 = t0;
        grid.t_end = t_end;
        grid.dt = dt;
        grid.n_steps = static_cast<std::size_t>(std::llround((t_end - t0) / dt));
        if (grid.n_steps < 1) grid.n_steps = 1;
        return grid;
    }

    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    std::size_t n_points() const { return n_steps + 1; }

    bool same_as(const TimeGrid& other) const {
        return t0 == other.t0 && dt == other.dt && n_steps == other.n_steps;
    }
};

} // namespace dyadic
