#pragma once

#include <stdexcept>
#include <string>

namespace dyadic {

/// Invalid user-supplied configuration (tree parameters, experiment files, ...).
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

/// An integrator met a non-finite state. Carries the last time at which the
/// state was still finite.
class blowup_error : public std::runtime_error {
public:
    blowup_error(const std::string& what, double last_finite_time)
        : std::runtime_error(what), last_finite_time(last_finite_time) {}

    double last_finite_time;
};

/// Iterative solver failed (no convergence, singular Jacobian).
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dyadic
