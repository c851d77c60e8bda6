#pragma once

#include "maxmin/convex.hpp"
#include "maxmin/mdp.hpp"
#include "maxmin/planning.hpp"

#include <memory>
#include <vector>

namespace maxmin {

// One demonstration: a task MDP plus the expert's feature expectation on it.
struct ExpertTerm {
    Mdp task;
    FeatureExpectation mu_e;
    double epsilon = 0.0;
};

enum class RewardSpecKind {
    explicit_only,         // halfspaces/pins only
    expert_additive,       // value(w) <= mu_e.w + epsilon, one expert
    expert_multiplicative, // (1-epsilon) value(w) <= mu_e.w, one expert
    multi_expert,          // additive consistency for each expert in order
};

// Description of the feasible reward-weight set. The [-1,1]^k norm box is
// always part of the set; halfspaces and pins may accompany any kind.
struct RewardSpec {
    int k = 0;
    RewardSpecKind kind = RewardSpecKind::explicit_only;
    std::vector<Halfspace> halfspaces;
    std::vector<std::pair<int, double>> pinned; // (feature index, fixed value)
    std::vector<ExpertTerm> experts;

    void validate() const;
};

// Membership oracle with per-expert planners and a pool of every halfspace it
// has certified so far (pins/explicit rows up front, expert cuts as found).
// The pool lets repeated minimizations over the same set warm-start.
class RewardOracle {
  public:
    explicit RewardOracle(RewardSpec spec);

    const RewardSpec& spec() const { return spec_; }

    // Check order: norm box, pins, explicit halfspaces, experts.
    SeparationResponse query(const Eigen::VectorXd& w, double tol = 1e-9);

    // Valid halfspaces for the set, excluding the norm box.
    const std::vector<Halfspace>& known_cuts() const { return cuts_; }

    long expert_solves() const { return expert_solves_; }

  private:
    void remember(const Halfspace& h);

    RewardSpec spec_;
    std::vector<Halfspace> cuts_;
    std::size_t n_static_ = 0;
    std::vector<std::unique_ptr<Planner>> planners_;
    long expert_solves_ = 0;
};

// Stateless membership check (builds a throwaway oracle).
SeparationResponse so_reward(const RewardSpec& spec, const Eigen::VectorXd& w, double tol = 1e-9);

// Weak membership for an additive single-expert set, using an eta-suboptimal
// planner. Accepts a superset of the set and only points within eta of it.
struct WsoConfig {
    double eta = 0.0;
    double tol = 1e-9;
};
SeparationResponse wso_reward(const RewardSpec& spec, const Eigen::VectorXd& w,
                              const WsoConfig& cfg, const ApproxSolver& solver);

enum class InnerMethod { accpm, ellipsoid };

struct MinOverRewardResult {
    Eigen::VectorXd w;
    double value = 0.0;
    SolveReport report;
};

// min direction.w over the reward set, to additive accuracy eps. Throws
// EmptyPolytopeError when the set is provably empty.
MinOverRewardResult min_over_reward(const RewardSpec& spec, const Eigen::VectorXd& direction,
                                    double eps = 1e-5, InnerMethod method = InnerMethod::accpm);

// Warm-started variant: reuses (and grows) the oracle's cut pool.
MinOverRewardResult min_over_reward(RewardOracle& oracle, const Eigen::VectorXd& direction,
                                    double eps = 1e-5, InnerMethod method = InnerMethod::accpm);

// Approximate minimization through the weak oracle: level-set bisection with
// the ellipsoid method, then shrink the accepted point back into the set by
// epsilon/(epsilon+eta). Requires shrink-compatible specs: single additive
// expert, no pins away from zero, explicit offsets >= 0.
MinOverRewardResult min_over_reward_approx(const RewardSpec& spec,
                                           const Eigen::VectorXd& direction, const WsoConfig& cfg,
                                           const ApproxSolver& solver, double eps = 1e-5);

} // namespace maxmin
