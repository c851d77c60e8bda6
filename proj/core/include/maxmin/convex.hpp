#pragma once

#include "maxmin/lp.hpp"

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace maxmin {

/// Closed halfspace  { x : normal . x <= offset }.
struct Halfspace {
    Eigen::VectorXd normal;
    double offset = 0.0;

    double violation(const Eigen::VectorXd& x) const { return normal.dot(x) - offset; }
};

/// Answer of a separation oracle: either "inside" or a valid halfspace that the
/// queried point strictly violates.
struct SeparationResponse {
    std::optional<Halfspace> cut;

    bool inside() const { return !cut.has_value(); }

    static SeparationResponse ok() { return {}; }
    static SeparationResponse separate(Halfspace h) { return {std::move(h)}; }
};

using SeparationOracle = std::function<SeparationResponse(const Eigen::VectorXd&)>;

/// Ellipsoid { x : (x - center)^T shape^{-1} (x - center) <= 1 }.
struct EllipsoidState {
    Eigen::VectorXd center;
    Eigen::MatrixXd shape;  // symmetric positive definite, equals factor * factor^T
    Eigen::MatrixXd factor; // square-root factor the updates are carried on
    long iteration = 0;
};

enum class SolveStatus { optimal, infeasible, iteration_limit };

struct QueryRecord {
    Eigen::VectorXd point;
    std::optional<Halfspace> cut; // empty when the oracle accepted
};

struct SolveReport {
    SolveStatus status = SolveStatus::iteration_limit;
    long iterations = 0;
    long oracle_calls = 0;
    long degraded_steps = 0;          // analytic-center Newton fallbacks
    std::vector<QueryRecord> query_log; // populated only when requested
};

/// Shared tolerances and budgets for the cutting-plane engines.
struct ConvexConfig {
    double feas_tol = 1e-9;     // slack for feasibility decisions
    double newton_tol = 1e-8;   // analytic center: stop when ||grad|| below this
    int newton_max_steps = 200; // then fall back to the bounding-box center
    int max_cuts = 120;         // accpm working set; loosest cuts dropped beyond this
    bool keep_query_log = false;
};

/**
 * Central-cut ellipsoid feasibility search over the ball of `radius` around
 * `center0` (origin when empty). Every accepted cut shrinks the volume by
 * exactly exp(-1/(2(dim+1))): the minimal-volume half-ellipsoid cover is
 * computed and then dilated to that ratio, which preserves the enclosure.
 * max_iters = 0 picks a dimension-scaled default. Throws SolverBreakdownError
 * if the shape matrix loses positive definiteness or a returned cut is not
 * violated by the query point (1e-12 slack).
 */
struct FeasibilityResult {
    SolveReport report;
    Eigen::VectorXd point;      // oracle-accepted point when status == optimal
    EllipsoidState final_state;
};
FeasibilityResult ellipsoid_feasibility(const SeparationOracle& oracle, int dim, double radius,
                                        long max_iters = 0, const ConvexConfig& cfg = {},
                                        const Eigen::VectorXd& center0 = {});

/**
 * Maximize c . x over the oracle's feasible set, assumed to lie inside the
 * ball of `radius` around `center0`. Level-set bisection: each probe runs the
 * ellipsoid feasibility engine with the extra cut c . x >= level until the
 * bracket closes below eps. The returned point is oracle-accepted and its
 * value is within eps of the optimum (given sufficient per-level budget).
 */
struct LinearOptResult {
    SolveReport report;
    Eigen::VectorXd x;
    double value = 0.0;
    double bracket = 0.0; // final upper bound minus achieved value
};
LinearOptResult maximize_linear(const SeparationOracle& oracle, const Eigen::VectorXd& c, int dim,
                                double radius, double eps, long max_iters_per_level = 0,
                                const ConvexConfig& cfg = {}, const Eigen::VectorXd& center0 = {});

/**
 * Minimize c . x over the oracle's feasible set intersected with the box
 * [box_lo, box_hi], by the analytic-center cutting-plane method. Queries the
 * analytic center (damped Newton on the log-barrier of box + cuts + objective
 * level cut), adds oracle cuts, and certifies the bracket with LP lower
 * bounds over the accumulated cuts. Throws EmptyPolytopeError when box + cuts
 * prove the feasible set empty before any point is accepted.
 */
LinearOptResult accpm_minimize(const SeparationOracle& oracle, const Eigen::VectorXd& c,
                               const Eigen::VectorXd& box_lo, const Eigen::VectorXd& box_hi,
                               double eps, long max_iters = 0, const ConvexConfig& cfg = {});

/**
 * Expresses `target` as a convex combination of at most dim+1 of the given
 * points (columns of `points`). Solved as an LP whose basic solutions are
 * automatically sparse. Reconstruction residual <= 1e-7 when feasible.
 */
struct CaratheodoryResult {
    bool feasible = false;
    std::vector<std::pair<int, double>> support; // (column index, weight)
};
CaratheodoryResult caratheodory_decompose(const Eigen::VectorXd& target,
                                          const Eigen::MatrixXd& points, double tol = 1e-9);

} // namespace maxmin
