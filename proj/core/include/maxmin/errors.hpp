#pragma once

#include <stdexcept>
#include <string>

namespace maxmin {

/// Malformed or inconsistent input data (bad file, invalid MDP, bad config).
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// A feasibility or optimization problem whose feasible set is provably empty,
/// e.g. a reward polytope with contradictory constraints. CLI exit code 2.
class EmptyPolytopeError : public std::runtime_error {
public:
    explicit EmptyPolytopeError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown inside a solver (non-positive-definite ellipsoid shape,
/// simplex cycling guard, iteration explosion). Carries the iteration at which
/// the breakdown happened. CLI exit code 3.
class SolverBreakdownError : public std::runtime_error {
public:
    SolverBreakdownError(const std::string& what, long iteration)
        : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
          iteration_(iteration) {}

    long iteration() const { return iteration_; }

private:
    long iteration_;
};

} // namespace maxmin
