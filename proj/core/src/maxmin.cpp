#include "maxmin/maxmin.hpp"

#include "maxmin/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace maxmin {

namespace {

constexpr double kBoxCutTol = 1e-12;

// Equality system of the occupancy LP: flow balance per state, then one
// feature-matching row per feature.
void build_feature_lp(const Mdp& mdp, const Eigen::VectorXd& mu_query, LpProblem& lp) {
    const int S = mdp.n_states;
    const int A = mdp.n_actions;
    const int k = mdp.k();
    const int n = S * A;

    lp.A_eq = Eigen::MatrixXd::Zero(S + k, n);
    lp.b_eq.resize(S + k);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) lp.A_eq(s, s * A + a) += 1.0;
        lp.b_eq(s) = mdp.initial_dist(s);
    }
    for (int a = 0; a < A; ++a) {
        const Eigen::MatrixXd& P = mdp.transitions[static_cast<std::size_t>(a)];
        for (int sp = 0; sp < S; ++sp)
            for (int s = 0; s < S; ++s)
                lp.A_eq(s, sp * A + a) -= mdp.gamma * P(sp, s);
    }
    for (int j = 0; j < k; ++j) {
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) lp.A_eq(S + j, s * A + a) = mdp.features(s, j);
        lp.b_eq(S + j) = mu_query(j);
    }
    lp.c = Eigen::VectorXd::Zero(n);
}

} // namespace

FeatureSeparation so_feature(const Mdp& mdp, const Eigen::VectorXd& mu_query) {
    if (mu_query.size() != mdp.k())
        throw ValidationError("feature query has wrong dimension");

    LpProblem lp;
    build_feature_lp(mdp, mu_query, lp);
    LpResult r = dense_lp_solve(lp);

    FeatureSeparation out;
    if (r.status == LpStatus::optimal) {
        OccupancyMeasure occ;
        occ.x.resize(mdp.n_states, mdp.n_actions);
        for (int s = 0; s < mdp.n_states; ++s)
            for (int a = 0; a < mdp.n_actions; ++a)
                occ.x(s, a) = std::max(0.0, r.x(s * mdp.n_actions + a));
        out.occupancy = std::move(occ);
        out.response = SeparationResponse::ok();
        return out;
    }
    if (r.status != LpStatus::infeasible || r.farkas.size() == 0)
        throw SolverBreakdownError("occupancy feasibility solve failed", r.pivots);

    // Farkas certificate y: y^T A <= 0, y^T b > 0. The feature block of y cuts
    // in mu space; the flow block contributes only to the offset.
    const int S = mdp.n_states;
    Eigen::VectorXd y_flow = r.farkas.head(S);
    Eigen::VectorXd y_mu = r.farkas.tail(mdp.k());
    if (y_mu.lpNorm<Eigen::Infinity>() < 1e-12)
        throw SolverBreakdownError("infeasibility certificate carries no feature component", 0);
    Halfspace h;
    h.normal = y_mu;
    h.offset = -y_flow.dot(mdp.initial_dist);
    out.response = SeparationResponse::separate(std::move(h));
    return out;
}

namespace {

// Epigraph separation shared by the stateless oracle and the solver. The
// witness pool holds reward vectors already certified to lie in the set, so a
// z-violation against any of them cuts without an inner minimization.
class EpigraphOracle {
  public:
    EpigraphOracle(const Mdp& mdp, RewardOracle& reward, double eps, InnerMethod method,
                   bool pool_first)
        : mdp_(mdp), reward_(reward), eps_(eps), method_(method), pool_first_(pool_first) {
        const double horizon = 1.0 / (1.0 - mdp.gamma);
        const int k = mdp.k();
        box_lo_ = Eigen::VectorXd::Zero(k + 1);
        box_hi_ = Eigen::VectorXd::Constant(k + 1, horizon);
        box_lo_(k) = -k * horizon;
        box_hi_(k) = k * horizon;
    }

    const Eigen::VectorXd& box_lo() const { return box_lo_; }
    const Eigen::VectorXd& box_hi() const { return box_hi_; }

    MaxminStats& stats() { return stats_; }

    SeparationResponse operator()(const Eigen::VectorXd& x) {
        const int k = mdp_.k();
        Eigen::VectorXd mu = x.head(k);
        const double z = x(k);

        for (int j = 0; j < k + 1; ++j) {
            if (x(j) > box_hi_(j) + kBoxCutTol) {
                Halfspace h;
                h.normal = Eigen::VectorXd::Zero(k + 1);
                h.normal(j) = 1.0;
                h.offset = box_hi_(j);
                return SeparationResponse::separate(std::move(h));
            }
            if (x(j) < box_lo_(j) - kBoxCutTol) {
                Halfspace h;
                h.normal = Eigen::VectorXd::Zero(k + 1);
                h.normal(j) = -1.0;
                h.offset = -box_lo_(j);
                return SeparationResponse::separate(std::move(h));
            }
        }

        if (pool_first_) {
            if (auto cut = pool_cut(mu, z)) {
                ++stats_.pool_cut_hits;
                return SeparationResponse::separate(std::move(*cut));
            }
        }

        FeatureSeparation fs = so_feature(mdp_, mu);
        ++stats_.feature_lp_calls;
        if (!fs.response.inside()) {
            Halfspace lifted;
            lifted.normal = Eigen::VectorXd::Zero(k + 1);
            lifted.normal.head(k) = fs.response.cut->normal;
            lifted.offset = fs.response.cut->offset;
            return SeparationResponse::separate(std::move(lifted));
        }
        last_occupancy_ = std::move(fs.occupancy);
        last_mu_ = mu;

        if (!pool_first_) {
            if (auto cut = pool_cut(mu, z)) {
                ++stats_.pool_cut_hits;
                return SeparationResponse::separate(std::move(*cut));
            }
        }

        MinOverRewardResult inner = min_over_reward(reward_, mu, eps_ / 10.0, method_);
        ++stats_.inner_minimizations;
        witnesses_.push_back(inner.w);
        if (z > inner.value + eps_ / 10.0) {
            Halfspace h;
            h.normal = Eigen::VectorXd::Zero(k + 1);
            h.normal.head(k) = -inner.w;
            h.normal(k) = 1.0;
            h.offset = 0.0;
            return SeparationResponse::separate(std::move(h));
        }
        return SeparationResponse::ok();
    }

    std::optional<OccupancyMeasure> take_occupancy(const Eigen::VectorXd& mu) {
        if (last_mu_.size() && (last_mu_ - mu).lpNorm<Eigen::Infinity>() < 1e-15)
            return std::move(last_occupancy_);
        return std::nullopt;
    }

  private:
    std::optional<Halfspace> pool_cut(const Eigen::VectorXd& mu, double z) const {
        const int k = mdp_.k();
        int best = -1;
        double best_val = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < witnesses_.size(); ++i) {
            const double v = mu.dot(witnesses_[i]);
            if (v < best_val) {
                best_val = v;
                best = static_cast<int>(i);
            }
        }
        if (best < 0 || z <= best_val + eps_ / 10.0) return std::nullopt;
        Halfspace h;
        h.normal = Eigen::VectorXd::Zero(k + 1);
        h.normal.head(k) = -witnesses_[static_cast<std::size_t>(best)];
        h.normal(k) = 1.0;
        h.offset = 0.0;
        return h;
    }

    const Mdp& mdp_;
    RewardOracle& reward_;
    double eps_;
    InnerMethod method_;
    bool pool_first_;
    Eigen::VectorXd box_lo_, box_hi_;
    std::vector<Eigen::VectorXd> witnesses_;
    MaxminStats stats_;
    std::optional<OccupancyMeasure> last_occupancy_;
    Eigen::VectorXd last_mu_;
};

} // namespace

SeparationResponse so_maxmin(const Mdp& mdp, const RewardSpec& spec,
                             const Eigen::VectorXd& mu_query, double z_query, double eps) {
    mdp.validate();
    RewardOracle reward(spec);
    if (mu_query.size() != mdp.k()) throw ValidationError("feature query has wrong dimension");
    // Feature separation runs before any reward work.
    EpigraphOracle oracle(mdp, reward, eps, InnerMethod::accpm, /*pool_first=*/false);
    Eigen::VectorXd x(mdp.k() + 1);
    x.head(mdp.k()) = mu_query;
    x(mdp.k()) = z_query;
    return oracle(x);
}

MaxminSolution solve_maxmin_exact(const Mdp& mdp, const RewardSpec& spec, double eps,
                                  InnerMethod method) {
    mdp.validate();
    if (spec.k != mdp.k())
        throw ValidationError("reward spec dimension differs from the task's feature dimension");
    if (!(eps > 0.0)) throw ValidationError("eps must be positive");

    RewardOracle reward(spec);
    EpigraphOracle oracle(mdp, reward, eps, method, /*pool_first=*/true);

    const int k = mdp.k();
    Eigen::VectorXd c = Eigen::VectorXd::Zero(k + 1);
    c(k) = 1.0;
    Eigen::VectorXd center = 0.5 * (oracle.box_lo() + oracle.box_hi());
    const double radius = 0.505 * (oracle.box_hi() - oracle.box_lo()).norm();

    SeparationOracle sep = [&oracle](const Eigen::VectorXd& x) { return oracle(x); };
    LinearOptResult r = maximize_linear(sep, c, k + 1, radius, eps, 0, {}, center);
    if (r.report.status == SolveStatus::infeasible)
        throw EmptyPolytopeError("no achievable feature expectation satisfies the reward set");
    if (r.x.size() == 0)
        throw SolverBreakdownError("maxmin search ended without an accepted point",
                                   r.report.iterations);

    MaxminSolution sol;
    sol.mu_star = r.x.head(k);

    // Certified min at mu_star; reported value satisfies the eps contract
    // directly.
    MinOverRewardResult final_inner = min_over_reward(reward, sol.mu_star, eps / 10.0, method);
    sol.value = final_inner.value;
    sol.worst_weight = final_inner.w;

    FeatureSeparation fs = so_feature(mdp, sol.mu_star);
    if (!fs.response.inside())
        throw SolverBreakdownError("accepted feature point lost occupancy feasibility", 0);
    Eigen::VectorXd y = fs.occupancy->state_occupancy();
    sol.policy = policy_from_occupancy(mdp, *fs.occupancy);

    FeatureExpectation realized = feature_expectation(mdp, sol.policy);
    MinOverRewardResult recovered = min_over_reward(reward, realized, eps / 10.0, method);
    sol.recovered_worst_case = recovered.value;

    sol.stats = oracle.stats();
    sol.stats.outer_iterations = r.report.iterations;
    sol.stats.outer_oracle_calls = r.report.oracle_calls;
    sol.stats.expert_solves = reward.expert_solves();
    return sol;
}

MixedPolicy recover_policy_mixture(const FeatureExpectation& target,
                                   const std::vector<Policy>& candidates,
                                   const std::vector<FeatureExpectation>& candidate_mus,
                                   double tol) {
    if (candidates.empty() || candidates.size() != candidate_mus.size())
        throw ValidationError("mixture recovery needs matching policy and feature lists");
    const int k = static_cast<int>(target.size());
    Eigen::MatrixXd pts(k, static_cast<int>(candidate_mus.size()));
    for (std::size_t i = 0; i < candidate_mus.size(); ++i) {
        if (candidate_mus[i].size() != k)
            throw ValidationError("candidate feature expectation has wrong dimension");
        pts.col(static_cast<int>(i)) = candidate_mus[i];
    }

    CaratheodoryResult dec = caratheodory_decompose(target, pts, 1e-12);
    if (!dec.feasible)
        throw ValidationError("target is not a convex combination of the candidates");

    Eigen::VectorXd reached = Eigen::VectorXd::Zero(k);
    MixedPolicy mix;
    for (const auto& [idx, w] : dec.support) {
        mix.weights.push_back(w);
        mix.components.push_back(candidates[static_cast<std::size_t>(idx)]);
        reached += w * pts.col(idx);
    }
    if ((reached - target).lpNorm<Eigen::Infinity>() > tol)
        throw ValidationError("mixture recovery residual exceeds tolerance");
    return mix;
}

namespace {

struct RewardCandidates {
    std::vector<Eigen::VectorXd> points;
};

bool satisfies_static(const RewardSpec& spec, const Eigen::VectorXd& w, double slack) {
    for (int j = 0; j < spec.k; ++j)
        if (std::abs(w(j)) > 1.0 + slack) return false;
    for (const auto& [idx, val] : spec.pinned)
        if (std::abs(w(idx) - val) > slack) return false;
    for (const auto& h : spec.halfspaces)
        if (h.violation(w) > slack) return false;
    return true;
}

// All vertices of the intersection of the box, pins and explicit halfspaces.
RewardCandidates enumerate_vertices(const RewardSpec& spec) {
    const int k = spec.k;
    if (k > 4)
        throw ValidationError("vertex enumeration supports at most 4 reward dimensions");

    std::vector<Halfspace> rows;
    for (int j = 0; j < k; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
        e(j) = 1.0;
        rows.push_back({e, 1.0});
        rows.push_back({-e, 1.0});
    }
    for (const auto& [idx, val] : spec.pinned) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(k);
        e(idx) = 1.0;
        rows.push_back({e, val});
        rows.push_back({-e, -val});
    }
    for (const auto& h : spec.halfspaces) rows.push_back(h);

    const int m = static_cast<int>(rows.size());
    RewardCandidates out;
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == k) {
            Eigen::MatrixXd A(k, k);
            Eigen::VectorXd b(k);
            for (int i = 0; i < k; ++i) {
                A.row(i) = rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])]
                               .normal.transpose();
                b(i) = rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])].offset;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
            if (!lu.isInvertible()) return;
            Eigen::VectorXd v = lu.solve(b);
            if (!satisfies_static(spec, v, 1e-7)) return;
            for (const auto& p : out.points)
                if ((p - v).lpNorm<Eigen::Infinity>() < 1e-9) return;
            out.points.push_back(v);
            return;
        }
        for (int i = start; i < m; ++i) {
            pick[static_cast<std::size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

// Grid over the free dimensions at step 0.01, pins substituted exactly.
RewardCandidates grid_candidates(const RewardSpec& spec, long policy_limit) {
    std::vector<int> free_dims;
    Eigen::VectorXd base = Eigen::VectorXd::Zero(spec.k);
    std::vector<bool> is_pinned(static_cast<std::size_t>(spec.k), false);
    for (const auto& [idx, val] : spec.pinned) {
        base(idx) = val;
        is_pinned[static_cast<std::size_t>(idx)] = true;
    }
    for (int j = 0; j < spec.k; ++j)
        if (!is_pinned[static_cast<std::size_t>(j)]) free_dims.push_back(j);
    if (free_dims.size() > 2)
        throw ValidationError("grid enumeration supports at most 2 free reward dimensions");

    // Expert consistency evaluated against each task's enumerated policies.
    std::vector<std::vector<Eigen::VectorXd>> task_mus;
    for (const auto& e : spec.experts) {
        std::vector<Eigen::VectorXd> mus;
        for (const auto& acts : enumerate_deterministic_policies(e.task, policy_limit))
            mus.push_back(feature_expectation(e.task, Policy::from_actions(acts, e.task.n_actions)));
        task_mus.push_back(std::move(mus));
    }

    const bool multiplicative = spec.kind == RewardSpecKind::expert_multiplicative;
    auto member = [&](const Eigen::VectorXd& w) {
        if (!satisfies_static(spec, w, 1e-9)) return false;
        for (std::size_t i = 0; i < spec.experts.size(); ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& mu : task_mus[i]) best = std::max(best, mu.dot(w));
            const double rhs = spec.experts[i].mu_e.dot(w);
            if (multiplicative) {
                if ((1.0 - spec.experts[i].epsilon) * best > rhs + 1e-9) return false;
            } else if (best > rhs + spec.experts[i].epsilon + 1e-9) {
                return false;
            }
        }
        return true;
    };

    const int steps = 201; // -1.00, -0.99, ..., 1.00
    RewardCandidates out;
    Eigen::VectorXd w = base;
    if (free_dims.empty()) {
        if (member(w)) out.points.push_back(w);
        return out;
    }
    for (int i = 0; i < steps; ++i) {
        w(free_dims[0]) = -1.0 + 0.01 * i;
        if (free_dims.size() == 1) {
            if (member(w)) out.points.push_back(w);
            continue;
        }
        for (int j = 0; j < steps; ++j) {
            w(free_dims[1]) = -1.0 + 0.01 * j;
            if (member(w)) out.points.push_back(w);
        }
    }
    return out;
}

} // namespace

BruteForceResult brute_force_maxmin(const Mdp& mdp, const RewardSpec& spec, long policy_limit) {
    mdp.validate();
    spec.validate();
    if (spec.k != mdp.k())
        throw ValidationError("reward spec dimension differs from the task's feature dimension");

    std::vector<Policy> policies;
    std::vector<Eigen::VectorXd> mus;
    for (const auto& acts : enumerate_deterministic_policies(mdp, policy_limit)) {
        policies.push_back(Policy::from_actions(acts, mdp.n_actions));
        mus.push_back(feature_expectation(mdp, policies.back()));
    }

    // Distinct feature expectations; policies sharing one are interchangeable.
    std::vector<int> reps;
    for (std::size_t i = 0; i < mus.size(); ++i) {
        bool dup = false;
        for (int r : reps)
            if ((mus[static_cast<std::size_t>(r)] - mus[i]).lpNorm<Eigen::Infinity>() < 1e-12) {
                dup = true;
                break;
            }
        if (!dup) reps.push_back(static_cast<int>(i));
    }

    RewardCandidates cand = spec.experts.empty() ? enumerate_vertices(spec)
                                                 : grid_candidates(spec, policy_limit);
    if (cand.points.empty())
        throw EmptyPolytopeError("reference enumeration found no feasible reward vector");

    const int n = static_cast<int>(reps.size());
    auto scan_min = [&](const Eigen::VectorXd& mu_bar) {
        int best = 0;
        double v = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < cand.points.size(); ++i) {
            const double val = mu_bar.dot(cand.points[i]);
            if (val < v) {
                v = val;
                best = static_cast<int>(i);
            }
        }
        return std::make_pair(v, best);
    };

    std::vector<int> active;
    {
        Eigen::VectorXd mu0 = mus[static_cast<std::size_t>(reps[0])];
        active.push_back(scan_min(mu0).second);
    }

    Eigen::VectorXd p_best = Eigen::VectorXd::Zero(n);
    p_best(0) = 1.0;
    double value = 0.0;
    int worst_idx = active[0];

    for (int round = 0; round < 500; ++round) {
        const int m = static_cast<int>(active.size());
        LpProblem lp;
        lp.A_ub = Eigen::MatrixXd::Zero(m, n + 1);
        lp.b_ub = Eigen::VectorXd::Zero(m);
        for (int j = 0; j < m; ++j) {
            for (int i = 0; i < n; ++i)
                lp.A_ub(j, i) =
                    -mus[static_cast<std::size_t>(reps[static_cast<std::size_t>(i)])].dot(
                        cand.points[static_cast<std::size_t>(active[static_cast<std::size_t>(j)])]);
            lp.A_ub(j, n) = 1.0;
        }
        lp.A_eq = Eigen::MatrixXd::Zero(1, n + 1);
        lp.A_eq.block(0, 0, 1, n).setOnes();
        lp.b_eq = Eigen::VectorXd::Ones(1);
        lp.c = Eigen::VectorXd::Zero(n + 1);
        lp.c(n) = 1.0;
        lp.maximize = true;
        lp.lo = Eigen::VectorXd::Zero(n + 1);
        lp.hi = Eigen::VectorXd::Constant(n + 1, std::numeric_limits<double>::infinity());
        const double zbound = mdp.k() / (1.0 - mdp.gamma);
        lp.lo(n) = -zbound;
        lp.hi(n) = zbound;

        LpResult r = dense_lp_solve(lp);
        if (r.status != LpStatus::optimal)
            throw SolverBreakdownError("matrix game restriction failed to solve", round);
        Eigen::VectorXd p = r.x.head(n);
        const double t = r.x(n);

        Eigen::VectorXd mu_bar = Eigen::VectorXd::Zero(mdp.k());
        for (int i = 0; i < n; ++i)
            mu_bar += p(i) * mus[static_cast<std::size_t>(reps[static_cast<std::size_t>(i)])];
        auto [v, idx] = scan_min(mu_bar);
        p_best = p;
        value = v;
        worst_idx = idx;
        if (v >= t - 1e-9 * std::max(1.0, std::abs(t))) break;
        if (std::find(active.begin(), active.end(), idx) != active.end()) break;
        active.push_back(idx);
    }

    BruteForceResult out;
    out.value = value;
    out.worst_weight = cand.points[static_cast<std::size_t>(worst_idx)];
    out.mu = Eigen::VectorXd::Zero(mdp.k());
    for (int i = 0; i < n; ++i) {
        if (p_best(i) > 1e-10) {
            out.policy.weights.push_back(p_best(i));
            out.policy.components.push_back(
                policies[static_cast<std::size_t>(reps[static_cast<std::size_t>(i)])]);
        }
        out.mu += p_best(i) * mus[static_cast<std::size_t>(reps[static_cast<std::size_t>(i)])];
    }
    double wsum = 0.0;
    for (double wgt : out.policy.weights) wsum += wgt;
    for (double& wgt : out.policy.weights) wgt /= wsum;
    return out;
}

} // namespace maxmin
