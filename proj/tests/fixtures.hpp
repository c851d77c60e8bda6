#pragma once

// Shared builders for the test suites. The two-route instance mirrors the
// checked-in JSON fixtures exactly; random generators are counter-seeded so
// every suite is reproducible bit for bit.

#include "maxmin/mdp.hpp"
#include "maxmin/reward_polytope.hpp"
#include "maxmin/rng.hpp"

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace testutil {

inline std::filesystem::path fixture_path(const std::string& name) {
    return std::filesystem::path(MAXMIN_FIXTURE_DIR) / name;
}

// Three states: start, top route, bottom route. Action 0 at the start commits
// to top, action 1 to bottom; both routes absorb. gamma = 100/101 makes the
// route feature expectations come out as round numbers:
//   mu(top) = (100, 70), mu(bottom) = (90, 90).
inline maxmin::Mdp two_route_mdp() {
    maxmin::Mdp m;
    m.n_states = 3;
    m.n_actions = 2;
    m.gamma = 100.0 / 101.0;
    m.initial_dist = Eigen::Vector3d(1.0, 0.0, 0.0);
    Eigen::MatrixXd a0 = Eigen::MatrixXd::Zero(3, 3);
    a0(0, 1) = 1.0; // start -> top
    a0(1, 1) = 1.0;
    a0(2, 2) = 1.0;
    Eigen::MatrixXd a1 = Eigen::MatrixXd::Zero(3, 3);
    a1(0, 2) = 1.0; // start -> bottom
    a1(1, 1) = 1.0;
    a1(2, 2) = 1.0;
    m.transitions = {a0, a1};
    m.features.resize(3, 2);
    m.features << 0.0, 0.0, 1.0, 0.7, 0.9, 0.9;
    return m;
}

inline Eigen::Vector2d mu_top() { return {100.0, 70.0}; }
inline Eigen::Vector2d mu_bottom() { return {90.0, 90.0}; }

// Expert demonstrates the top route with additive slack epsilon. With the
// triangle halfspaces {w >= 0, w1 + w2 >= 1} the feasible set at epsilon = 25
// is conv{(1,0), (0,1), (1,1)} and the maxmin value is 90 at the bottom route.
// Without them it is the box cap {-10 w1 + 20 w2 <= 25} and the maxmin value
// is -170 at the top route.
inline maxmin::RewardSpec two_route_spec(double epsilon = 25.0, bool with_halfspaces = true) {
    maxmin::RewardSpec spec;
    spec.k = 2;
    spec.kind = maxmin::RewardSpecKind::expert_additive;
    if (with_halfspaces) {
        spec.halfspaces.push_back({Eigen::Vector2d(-1.0, 0.0), 0.0});
        spec.halfspaces.push_back({Eigen::Vector2d(0.0, -1.0), 0.0});
        spec.halfspaces.push_back({Eigen::Vector2d(-1.0, -1.0), -1.0});
    }
    maxmin::ExpertTerm e;
    e.task = two_route_mdp();
    e.mu_e = mu_top();
    e.epsilon = epsilon;
    spec.experts.push_back(std::move(e));
    return spec;
}

// Contradictory demands: both routes must be exactly optimal while the
// weights are pinned to (1,1), where top scores 170 and bottom 180.
inline maxmin::RewardSpec empty_spec() {
    maxmin::RewardSpec spec;
    spec.k = 2;
    spec.kind = maxmin::RewardSpecKind::multi_expert;
    spec.pinned = {{0, 1.0}, {1, 1.0}};
    maxmin::ExpertTerm top;
    top.task = two_route_mdp();
    top.mu_e = mu_top();
    top.epsilon = 0.0;
    maxmin::ExpertTerm bottom;
    bottom.task = two_route_mdp();
    bottom.mu_e = mu_bottom();
    bottom.epsilon = 0.0;
    spec.experts = {std::move(top), std::move(bottom)};
    return spec;
}

inline Eigen::VectorXd random_distribution(maxmin::CounterRng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = 0.1 + rng.next_double();
    v /= v.sum();
    v(n - 1) = 1.0 - v.head(n - 1).sum(); // row sum exactly 1 in floating point
    return v;
}

inline maxmin::Mdp random_mdp(maxmin::CounterRng& rng, int n_states, int n_actions, int k,
                              double gamma = 0.9) {
    maxmin::Mdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.gamma = gamma;
    m.initial_dist = random_distribution(rng, n_states);
    for (int a = 0; a < n_actions; ++a) {
        Eigen::MatrixXd P(n_states, n_states);
        for (int s = 0; s < n_states; ++s) P.row(s) = random_distribution(rng, n_states);
        m.transitions.push_back(std::move(P));
    }
    m.features.resize(n_states, k);
    for (int s = 0; s < n_states; ++s)
        for (int j = 0; j < k; ++j) m.features(s, j) = rng.next_double();
    return m;
}

// Explicit polytope guaranteed nonempty: every halfspace is placed at a
// positive margin from a hidden interior point of the box.
inline maxmin::RewardSpec random_explicit_spec(maxmin::CounterRng& rng, int k, int n_halfspaces) {
    maxmin::RewardSpec spec;
    spec.k = k;
    spec.kind = maxmin::RewardSpecKind::explicit_only;
    Eigen::VectorXd interior(k);
    for (int j = 0; j < k; ++j) interior(j) = rng.uniform(-0.5, 0.5);
    for (int i = 0; i < n_halfspaces; ++i) {
        Eigen::VectorXd normal(k);
        do {
            for (int j = 0; j < k; ++j) normal(j) = rng.uniform(-1.0, 1.0);
        } while (normal.norm() < 1e-3);
        normal.normalize();
        const double margin = rng.uniform(0.05, 0.3);
        spec.halfspaces.push_back({normal, normal.dot(interior) + margin});
    }
    return spec;
}

} // namespace testutil
