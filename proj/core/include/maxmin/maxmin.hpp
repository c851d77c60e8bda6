#pragma once

#include "maxmin/convex.hpp"
#include "maxmin/mdp.hpp"
#include "maxmin/planning.hpp"
#include "maxmin/reward_polytope.hpp"

#include <optional>
#include <vector>

namespace maxmin {

// Separation for the achievable feature-expectation set. Accepted queries also
// return a realizing occupancy measure; rejected ones carry a certificate cut.
struct FeatureSeparation {
    SeparationResponse response;
    std::optional<OccupancyMeasure> occupancy;
};
FeatureSeparation so_feature(const Mdp& mdp, const Eigen::VectorXd& mu_query);

// Separation for the epigraph set {(mu, z): mu achievable, z <= min_w mu.w}.
// Feature cuts come first, lifted with a zero z coefficient.
SeparationResponse so_maxmin(const Mdp& mdp, const RewardSpec& spec,
                             const Eigen::VectorXd& mu_query, double z_query, double eps);

struct MaxminStats {
    long outer_iterations = 0;
    long outer_oracle_calls = 0;
    long feature_lp_calls = 0;
    long inner_minimizations = 0;
    long pool_cut_hits = 0;
    long expert_solves = 0;
};

struct MaxminSolution {
    double value = 0.0;
    FeatureExpectation mu_star;
    Policy policy;
    Eigen::VectorXd worst_weight;
    double recovered_worst_case = 0.0;
    MaxminStats stats;
};

// max over achievable mu of min over the reward set of mu.w, to additive
// accuracy eps, with a stationary policy realizing mu within LP accuracy.
MaxminSolution solve_maxmin_exact(const Mdp& mdp, const RewardSpec& spec, double eps = 1e-5,
                                  InnerMethod method = InnerMethod::accpm);

// Express a target feature expectation as a convex combination of candidate
// policies' feature expectations (at most k+1 of them).
MixedPolicy recover_policy_mixture(const FeatureExpectation& target,
                                   const std::vector<Policy>& candidates,
                                   const std::vector<FeatureExpectation>& candidate_mus,
                                   double tol = 1e-7);

struct BruteForceResult {
    double value = 0.0;
    MixedPolicy policy;
    FeatureExpectation mu;
    Eigen::VectorXd worst_weight;
};

// Reference solver for small instances: enumerate deterministic policies,
// enumerate or grid the reward set, and solve the resulting matrix game by
// constraint generation. Explicit specs use vertex enumeration (k <= 4);
// expert specs use a 0.01 grid (k <= 2).
BruteForceResult brute_force_maxmin(const Mdp& mdp, const RewardSpec& spec,
                                    long policy_limit = 4096);

} // namespace maxmin
