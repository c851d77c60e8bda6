#pragma once

#include <Eigen/Dense>
#include <vector>

namespace maxmin {

/// Discounted feature accumulation E[sum_t gamma^t phi(s_t)], one entry per feature.
using FeatureExpectation = Eigen::VectorXd;

/**
 * Stationary policy, stored as one action distribution per state (rows of
 * `probs` sum to 1). Deterministic policies are one-hot rows; `actions()`
 * recovers the action table for those.
 */
struct Policy {
    Eigen::MatrixXd probs; // (n_states, n_actions)

    static Policy from_actions(const std::vector<int>& actions, int n_actions);
    static Policy uniform(int n_states, int n_actions);

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }

    /// True when every row is (numerically) a one-hot vector.
    bool is_deterministic(double tol = 1e-12) const;

    /// Action table; for stochastic rows returns the argmax (lowest index wins ties).
    std::vector<int> actions() const;
};

/// Finite mixture of policies: play component i for the whole episode with
/// probability weight(i). Weights are nonnegative and sum to 1.
struct MixedPolicy {
    std::vector<double> weights;
    std::vector<Policy> components;

    static MixedPolicy pure(Policy p);
    std::size_t size() const { return components.size(); }
    void validate() const;
};

/// Discounted state-action visitation mass x(s,a) = sum_t gamma^t Pr(s_t=s, a_t=a).
struct OccupancyMeasure {
    Eigen::MatrixXd x; // (n_states, n_actions)

    Eigen::VectorXd state_occupancy() const { return x.rowwise().sum(); }
    double total_mass() const { return x.sum(); }
};

/**
 * Tabular MDP with state features. Rewards are never stored: a reward weight
 * vector w in R^k induces R(s) = features.row(s) . w, collected at every state
 * the process occupies, the start state included.
 *
 * transitions[a] is the (n_states x n_states) row-stochastic matrix for action a.
 * features is (n_states x k) with every entry in [0, 1].
 */
struct Mdp {
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.0;
    Eigen::VectorXd initial_dist;           // (n_states)
    std::vector<Eigen::MatrixXd> transitions; // n_actions entries, each (S x S)
    Eigen::MatrixXd features;               // (n_states x k)

    int k() const { return static_cast<int>(features.cols()); }

    /// State rewards under weight vector w: features * w.
    Eigen::VectorXd rewards(const Eigen::VectorXd& w) const { return features * w; }

    /**
     * Checks every structural invariant and throws ValidationError naming the
     * offending entry: gamma in [0,1), initial_dist a distribution (1e-12),
     * every transition row a distribution (1e-12), features inside [0,1],
     * consistent dimensions.
     */
    void validate() const;
};

/// Transition matrix of the chain induced by `policy`: row s is
/// sum_a policy(s,a) * transitions[a].row(s).
Eigen::MatrixXd policy_transition_matrix(const Mdp& mdp, const Policy& policy);

} // namespace maxmin
