#pragma once

#include "maxmin/mdp.hpp"
#include "maxmin/planning.hpp"
#include "maxmin/reward_polytope.hpp"

#include <cstdint>
#include <vector>

namespace maxmin {

struct FplConfig {
    int T = 400;
    double delta = 0.0;        // perturbation density; 0 picks 1/(k sqrt(T))
    std::uint64_t seed = 0;
    int tail_window = 0;       // mixture averages the last W rounds; 0 = all T
    InnerMethod method = InnerMethod::accpm;
    double inner_eps = 1e-5;
    double xi = 0.05;          // confidence level quoted with the regret bound
    double step_divisor = 0.0; // approximate path planner input scale; 0 = 2T
    bool record_trace = true;
};

struct FplIterate {
    int t = 0;
    Eigen::VectorXd p, q;       // perturbation draws
    FeatureExpectation mu;      // learner's feature expectation this round
    Eigen::VectorXd w;          // adversary's reward pick this round
    std::vector<int> policy;    // learner's deterministic policy (actions)
    double inner_value = 0.0;   // w.(mu sum + q) achieved by the adversary
};

struct FplTrace {
    std::vector<FplIterate> iterates;
};

struct FplResult {
    MixedPolicy mixture;           // deduped uniform tail mixture
    FeatureExpectation mixture_mu; // tail average of per-round mu
    double regret_bound_value = 0.0;
    long inner_oracle_calls = 0;
    long planner_solves = 0;
    FplTrace trace;
};

// High-confidence regret bound for the exact path at horizon T.
double regret_bound(int k, int T, double xi);

// Iterative maxmin: perturbed best response against the accumulated reward
// picks, adversary minimizes over the reward set against accumulated features.
FplResult fpl_solve(const Mdp& mdp, const RewardSpec& spec, const FplConfig& cfg);

// Same loop with an eta-suboptimal planner: the planner sees accumulated
// weights divided by step_divisor, the adversary runs the weak-oracle
// minimization, and its picks are shrunk back into the reward set. The
// guarantee degrades by 4c where c parameterizes both suboptimality budgets.
FplResult fpl_solve_approx(const Mdp& mdp, const RewardSpec& spec, const FplConfig& cfg, double c,
                           const ApproxSolver& solver);

struct WorstCaseResult {
    double value = 0.0;
    Eigen::VectorXd worst_weight;
};

// min over the reward set of the mixture's expected discounted feature value.
WorstCaseResult evaluate_worst_case(const Mdp& mdp, const RewardSpec& spec,
                                    const MixedPolicy& mixture, double eps = 1e-6);

} // namespace maxmin
