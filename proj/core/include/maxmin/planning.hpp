#pragma once

#include "maxmin/mdp.hpp"

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

namespace maxmin {

/// Output of an exact planning call: an optimal deterministic policy, its exact
/// feature expectation, and the induced value initial_dist . (features * w) path sum.
struct SolveResult {
    Policy policy;
    FeatureExpectation mu; // exact, from a linear solve
    double value = 0.0;    // w . mu for the queried w
    long iterations = 0;   // policy-improvement rounds
};

/**
 * Exact planner for one MDP with a policy-indexed evaluation cache.
 *
 * For a fixed deterministic policy pi the map w -> V_pi(w) is linear:
 * V_pi = (I - gamma P_pi)^{-1} Phi w. The planner caches W_pi =
 * (I - gamma P_pi)^{-1} Phi per policy, so re-solving under a new weight
 * vector costs a handful of (S x k) mat-vecs plus greedy sweeps, and
 * mu_pi = W_pi^T initial_dist comes for free. Policy improvement switches
 * an action only on strict improvement and finishes with a lowest-index
 * greedy pass, so results are deterministic.
 *
 * Not safe for concurrent use; construct one per thread (cheap).
 */
class Planner {
public:
    explicit Planner(const Mdp& mdp);

    /// Optimal policy for reward weights w. The returned policy is greedy with
    /// respect to its own exact value function (Bellman residual at float
    /// noise, well under tol*(1-gamma)/(2*gamma) for any sensible tol).
    SolveResult solve(const Eigen::VectorXd& w, double tol = 1e-10);

    /// Exact feature expectation of an arbitrary (possibly stochastic) policy.
    FeatureExpectation feature_expectation(const Policy& policy) const;

    long cache_size() const { return static_cast<long>(cache_.size()); }
    long solve_calls() const { return solve_calls_; }

private:
    struct Entry {
        Eigen::MatrixXd W; // (S x k), V = W * w
        FeatureExpectation mu;
    };

    const Entry& evaluate(const std::vector<int>& actions);

    const Mdp* mdp_;
    std::unordered_map<std::uint64_t, Entry> cache_;
    std::unordered_map<std::uint64_t, std::vector<int>> cache_keys_; // collision audit
    std::vector<int> hint_;
    long solve_calls_ = 0;
};

/// One-shot exact solve (fresh Planner per call). Hot paths should hold a
/// Planner instead so the evaluation cache survives across calls.
SolveResult solve_mdp(const Mdp& mdp, const Eigen::VectorXd& w, double tol = 1e-10);

/// Exact discounted feature expectation of a policy via one linear solve.
FeatureExpectation feature_expectation(const Mdp& mdp, const Policy& policy);

/// Exact occupancy measure x(s,a) of a policy; flow residual at float noise.
OccupancyMeasure occupancy_measure(const Mdp& mdp, const Policy& policy);

/// Conditional policy pi(a|s) = x(s,a) / sum_a x(s,a). States carrying no
/// occupancy mass (relative to the largest state mass) get the uniform
/// distribution.
Policy policy_from_occupancy(const Mdp& mdp, const OccupancyMeasure& occupancy);

/// Feature expectation of the occupancy measure itself: sum_s phi(s) * y_s.
FeatureExpectation occupancy_feature_expectation(const Mdp& mdp, const OccupancyMeasure& occupancy);

/// Residual of the Bellman flow constraints for x, max-norm over states.
double flow_residual(const Mdp& mdp, const OccupancyMeasure& occupancy);

/// Monte Carlo estimate of a policy's feature expectation from truncated rollouts.
struct McEstimate {
    FeatureExpectation mean;
    Eigen::VectorXd std_error; // per-component standard error of the mean
    int n_rollouts = 0;
    int horizon = 0;
};
McEstimate monte_carlo_feature_expectation(const Mdp& mdp, const Policy& policy,
                                           int n_rollouts, int horizon, std::uint64_t seed);

/// Exact feature expectation of a mixture: weighted sum of component expectations.
FeatureExpectation mixed_feature_expectation(const Mdp& mdp, const MixedPolicy& mixed);

/// Occupancy measure of a mixture (linear in the mixture weights).
OccupancyMeasure mixed_occupancy_measure(const Mdp& mdp, const MixedPolicy& mixed);

/**
 * All deterministic policies of the MDP, as action tables. Throws
 * ValidationError when n_actions^n_states exceeds `limit`; meant for
 * brute-force verification on small instances only.
 */
std::vector<std::vector<int>> enumerate_deterministic_policies(const Mdp& mdp, long limit = 4096);

/**
 * Injectable approximate planner: returns a policy whose value under w is
 * allowed to fall short of optimal by at most eta, together with that
 * policy's exact feature expectation.
 */
using ApproxSolver =
    std::function<SolveResult(const Mdp& mdp, const Eigen::VectorXd& w, double eta)>;

/// Exact solver wrapped in the ApproxSolver signature (eta ignored).
ApproxSolver make_exact_approx_solver();

/**
 * Deliberately suboptimal solver for exercising approximation guarantees:
 * enumerates all deterministic policies (guarded) and returns the runner-up
 * whenever its value gap to the optimum is at most eta, the optimum otherwise.
 */
ApproxSolver make_second_best_solver(long enumeration_limit = 4096);

} // namespace maxmin
