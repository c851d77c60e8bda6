#include "maxmin/mdp.hpp"

#include "maxmin/errors.hpp"

#include <cmath>
#include <string>

namespace maxmin {

namespace {

constexpr double kDistTol = 1e-12;

} // namespace

Policy Policy::from_actions(const std::vector<int>& actions, int n_actions) {
    Policy p;
    p.probs = Eigen::MatrixXd::Zero(static_cast<int>(actions.size()), n_actions);
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] < 0 || actions[s] >= n_actions)
            throw ValidationError("policy action out of range at state " + std::to_string(s));
        p.probs(static_cast<int>(s), actions[s]) = 1.0;
    }
    return p;
}

Policy Policy::uniform(int n_states, int n_actions) {
    Policy p;
    p.probs = Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions);
    return p;
}

bool Policy::is_deterministic(double tol) const {
    for (int s = 0; s < probs.rows(); ++s) {
        if (std::abs(probs.row(s).maxCoeff() - 1.0) > tol) return false;
    }
    return true;
}

std::vector<int> Policy::actions() const {
    std::vector<int> out(static_cast<std::size_t>(probs.rows()));
    for (int s = 0; s < probs.rows(); ++s) {
        int best = 0;
        for (int a = 1; a < probs.cols(); ++a)
            if (probs(s, a) > probs(s, best)) best = a;
        out[static_cast<std::size_t>(s)] = best;
    }
    return out;
}

MixedPolicy MixedPolicy::pure(Policy p) {
    MixedPolicy m;
    m.weights.push_back(1.0);
    m.components.push_back(std::move(p));
    return m;
}

void MixedPolicy::validate() const {
    if (weights.size() != components.size())
        throw ValidationError("mixed policy: weights and components differ in length");
    if (components.empty()) throw ValidationError("mixed policy: no components");
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < -kDistTol)
            throw ValidationError("mixed policy: negative weight at component " + std::to_string(i));
        total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw ValidationError("mixed policy: weights sum to " + std::to_string(total));
}

void Mdp::validate() const {
    if (n_states <= 0) throw ValidationError("n_states must be positive");
    if (n_actions <= 0) throw ValidationError("n_actions must be positive");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw ValidationError("gamma must lie in [0,1), got " + std::to_string(gamma));

    if (initial_dist.size() != n_states)
        throw ValidationError("initial_dist has length " + std::to_string(initial_dist.size()) +
                              ", expected " + std::to_string(n_states));
    double mass = 0.0;
    for (int s = 0; s < n_states; ++s) {
        if (initial_dist(s) < -kDistTol)
            throw ValidationError("initial_dist[" + std::to_string(s) + "] is negative");
        mass += initial_dist(s);
    }
    if (std::abs(mass - 1.0) > kDistTol)
        throw ValidationError("initial_dist sums to " + std::to_string(mass));

    if (static_cast<int>(transitions.size()) != n_actions)
        throw ValidationError("transitions holds " + std::to_string(transitions.size()) +
                              " actions, expected " + std::to_string(n_actions));
    for (int a = 0; a < n_actions; ++a) {
        const auto& P = transitions[static_cast<std::size_t>(a)];
        if (P.rows() != n_states || P.cols() != n_states)
            throw ValidationError("transition matrix for action " + std::to_string(a) +
                                  " is not " + std::to_string(n_states) + "x" +
                                  std::to_string(n_states));
        for (int s = 0; s < n_states; ++s) {
            double row = 0.0;
            for (int t = 0; t < n_states; ++t) {
                if (P(s, t) < -kDistTol)
                    throw ValidationError("transition[" + std::to_string(s) + "][" +
                                          std::to_string(a) + "][" + std::to_string(t) +
                                          "] is negative");
                row += P(s, t);
            }
            if (std::abs(row - 1.0) > kDistTol)
                throw ValidationError("transition[" + std::to_string(s) + "][" +
                                      std::to_string(a) + "] sums to " + std::to_string(row));
        }
    }

    if (features.rows() != n_states)
        throw ValidationError("features has " + std::to_string(features.rows()) +
                              " rows, expected " + std::to_string(n_states));
    if (features.cols() < 1) throw ValidationError("features must have at least one column");
    for (int s = 0; s < n_states; ++s)
        for (int j = 0; j < features.cols(); ++j)
            if (features(s, j) < 0.0 || features(s, j) > 1.0)
                throw ValidationError("features[" + std::to_string(s) + "][" +
                                      std::to_string(j) + "] outside [0,1]");
}

Eigen::MatrixXd policy_transition_matrix(const Mdp& mdp, const Policy& policy) {
    if (policy.probs.rows() != mdp.n_states || policy.probs.cols() != mdp.n_actions)
        throw ValidationError("policy shape does not match the MDP");
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states);
    for (int a = 0; a < mdp.n_actions; ++a)
        P += policy.probs.col(a).asDiagonal() * mdp.transitions[static_cast<std::size_t>(a)];
    return P;
}

} // namespace maxmin
