#pragma once

#include <Eigen/Dense>

namespace maxmin {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

/**
 * Dense linear program
 *
 *     optimize  c . x
 *     subject to A_ub x <= b_ub,  A_eq x = b_eq,  lo <= x <= hi.
 *
 * Empty matrices mean "no rows of that kind". Bounds default to x >= 0 when
 * `lo`/`hi` are left empty; +-infinity entries are allowed.
 */
struct LpProblem {
    Eigen::MatrixXd A_ub;
    Eigen::VectorXd b_ub;
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::VectorXd c;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    bool maximize = false;
};

struct LpResult {
    LpStatus status = LpStatus::iteration_limit;
    Eigen::VectorXd x;
    double objective = 0.0;
    long pivots = 0;

    /**
     * Infeasibility certificate, produced only for problems in pure standard
     * form (equality rows only, lo = 0, hi = +inf). y has one entry per
     * equality row and satisfies  y^T A_eq <= tol componentwise  while
     * y . b_eq > 0, which proves {A_eq x = b_eq, x >= 0} empty. Normalized to
     * unit max-norm. Empty otherwise.
     */
    Eigen::VectorXd farkas;
};

/**
 * Two-phase dense tableau simplex with Bland's anti-cycling rule throughout.
 * Feasibility and optimality tolerances are 1e-9 on row-equilibrated data.
 */
LpResult dense_lp_solve(const LpProblem& lp);

} // namespace maxmin
