#include "maxmin/fpl.hpp"

#include "maxmin/errors.hpp"
#include "maxmin/rng.hpp"

#include <cmath>
#include <map>

namespace maxmin {

double regret_bound(int k, int T, double xi) {
    if (k < 1 || T < 1) throw ValidationError("regret bound needs k >= 1 and T >= 1");
    if (!(xi > 0.0 && xi < 1.0)) throw ValidationError("confidence level must lie in (0,1)");
    const double kk = static_cast<double>(k);
    return kk * kk * (6.0 + 4.0 * std::sqrt(std::log(1.0 / xi))) / std::sqrt(double(T));
}

namespace {

Eigen::VectorXd draw_uniform(std::uint64_t seed, int t, int stream, int k, double hi) {
    CounterRng rng(CounterRng::derive(seed, static_cast<std::uint64_t>(t),
                                      static_cast<std::uint64_t>(stream)));
    Eigen::VectorXd v(k);
    for (int j = 0; j < k; ++j) v(j) = rng.uniform(0.0, hi);
    return v;
}

MixedPolicy tail_mixture(const Mdp& mdp, const std::vector<std::vector<int>>& actions, int from) {
    // Uniform over the tail, identical policies merged.
    std::map<std::vector<int>, double> weight;
    const int n = static_cast<int>(actions.size());
    const double share = 1.0 / static_cast<double>(n - from);
    for (int t = from; t < n; ++t) weight[actions[static_cast<std::size_t>(t)]] += share;

    MixedPolicy mix;
    for (const auto& [acts, wgt] : weight) {
        mix.weights.push_back(wgt);
        mix.components.push_back(Policy::from_actions(acts, mdp.n_actions));
    }
    return mix;
}

void check_config(const Mdp& mdp, const RewardSpec& spec, const FplConfig& cfg) {
    mdp.validate();
    spec.validate();
    if (spec.k != mdp.k())
        throw ValidationError("reward spec dimension differs from the task's feature dimension");
    if (cfg.T < 1) throw ValidationError("fpl horizon must be at least 1");
    if (cfg.tail_window < 0 || cfg.tail_window > cfg.T)
        throw ValidationError("tail window must lie in [0, T]");
    if (!(cfg.inner_eps > 0.0)) throw ValidationError("inner eps must be positive");
}

} // namespace

FplResult fpl_solve(const Mdp& mdp, const RewardSpec& spec, const FplConfig& cfg) {
    check_config(mdp, spec, cfg);
    const int k = mdp.k();
    const double delta = cfg.delta > 0.0 ? cfg.delta : 1.0 / (k * std::sqrt(double(cfg.T)));
    const double hi = 1.0 / delta;

    Planner planner(mdp);
    RewardOracle reward(spec);

    Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd mu_sum = Eigen::VectorXd::Zero(k);
    std::vector<std::vector<int>> round_actions;
    round_actions.reserve(static_cast<std::size_t>(cfg.T));
    Eigen::VectorXd mu_total = Eigen::VectorXd::Zero(k);

    FplResult out;
    long inner_calls = 0;

    const int tail = cfg.tail_window > 0 ? cfg.tail_window : cfg.T;
    const int from = cfg.T - tail;
    Eigen::VectorXd tail_mu = Eigen::VectorXd::Zero(k);

    for (int t = 1; t <= cfg.T; ++t) {
        Eigen::VectorXd p = draw_uniform(cfg.seed, t, 0, k, hi);
        SolveResult learner = planner.solve(w_sum + p);
        mu_sum += learner.mu;

        Eigen::VectorXd q = draw_uniform(cfg.seed, t, 1, k, hi);
        MinOverRewardResult inner =
            min_over_reward(reward, mu_sum + q, cfg.inner_eps, cfg.method);
        w_sum += inner.w;
        inner_calls += inner.report.oracle_calls;

        round_actions.push_back(learner.policy.actions());
        if (t - 1 >= from) tail_mu += learner.mu;

        if (cfg.record_trace) {
            FplIterate it;
            it.t = t;
            it.p = std::move(p);
            it.q = std::move(q);
            it.mu = learner.mu;
            it.w = inner.w;
            it.policy = round_actions.back();
            it.inner_value = inner.value;
            out.trace.iterates.push_back(std::move(it));
        }
    }

    out.mixture = tail_mixture(mdp, round_actions, from);
    out.mixture_mu = tail_mu / static_cast<double>(tail);
    out.regret_bound_value = regret_bound(k, cfg.T, cfg.xi);
    out.inner_oracle_calls = inner_calls;
    out.planner_solves = planner.solve_calls();
    return out;
}

FplResult fpl_solve_approx(const Mdp& mdp, const RewardSpec& spec, const FplConfig& cfg, double c,
                           const ApproxSolver& solver) {
    check_config(mdp, spec, cfg);
    if (spec.kind != RewardSpecKind::expert_additive)
        throw ValidationError("approximate iteration needs a single additive expert spec");
    if (!(c > 0.0)) throw ValidationError("suboptimality budget c must be positive");
    const int k = mdp.k();
    const double T = static_cast<double>(cfg.T);
    const double epsilon = spec.experts.front().epsilon;
    if (!(2.0 * k * k * T > c))
        throw ValidationError("approximate iteration needs 2 k^2 T > c");

    const double eta1 = c / (2.0 * T);
    const double eta2 = c * epsilon / (2.0 * k * k * T - c);
    const double divisor = cfg.step_divisor > 0.0 ? cfg.step_divisor : 2.0 * T;

    const double delta = cfg.delta > 0.0 ? cfg.delta : 1.0 / (k * std::sqrt(double(cfg.T)));
    const double hi = 1.0 / delta;

    Eigen::VectorXd w_sum = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd mu_sum = Eigen::VectorXd::Zero(k);
    std::vector<std::vector<int>> round_actions;
    round_actions.reserve(static_cast<std::size_t>(cfg.T));

    FplResult out;
    long planner_calls = 0;
    long inner_calls = 0;

    const int tail = cfg.tail_window > 0 ? cfg.tail_window : cfg.T;
    const int from = cfg.T - tail;
    Eigen::VectorXd tail_mu = Eigen::VectorXd::Zero(k);

    WsoConfig wso;
    wso.eta = eta2;

    for (int t = 1; t <= cfg.T; ++t) {
        Eigen::VectorXd p = draw_uniform(cfg.seed, t, 0, k, hi);
        SolveResult learner = solver(mdp, (w_sum + p) / divisor, eta1);
        ++planner_calls;
        mu_sum += learner.mu;

        Eigen::VectorXd q = draw_uniform(cfg.seed, t, 1, k, hi);
        MinOverRewardResult inner =
            min_over_reward_approx(spec, mu_sum + q, wso, solver, cfg.inner_eps);
        w_sum += inner.w;
        inner_calls += inner.report.oracle_calls;

        round_actions.push_back(learner.policy.actions());
        if (t - 1 >= from) tail_mu += learner.mu;

        if (cfg.record_trace) {
            FplIterate it;
            it.t = t;
            it.p = std::move(p);
            it.q = std::move(q);
            it.mu = learner.mu;
            it.w = inner.w;
            it.policy = round_actions.back();
            it.inner_value = inner.value;
            out.trace.iterates.push_back(std::move(it));
        }
    }

    out.mixture = tail_mixture(mdp, round_actions, from);
    out.mixture_mu = tail_mu / static_cast<double>(tail);
    out.regret_bound_value = regret_bound(k, cfg.T, cfg.xi);
    out.inner_oracle_calls = inner_calls;
    out.planner_solves = planner_calls;
    return out;
}

WorstCaseResult evaluate_worst_case(const Mdp& mdp, const RewardSpec& spec,
                                    const MixedPolicy& mixture, double eps) {
    mdp.validate();
    mixture.validate();
    FeatureExpectation mu = mixed_feature_expectation(mdp, mixture);
    MinOverRewardResult inner = min_over_reward(spec, mu, eps);
    WorstCaseResult out;
    out.value = inner.value;
    out.worst_weight = inner.w;
    return out;
}

} // namespace maxmin
