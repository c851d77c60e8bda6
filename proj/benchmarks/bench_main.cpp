#include "maxmin/convex.hpp"
#include "maxmin/fpl.hpp"
#include "maxmin/maxmin.hpp"
#include "maxmin/planning.hpp"
#include "maxmin/reward_polytope.hpp"
#include "maxmin/rng.hpp"

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

namespace {

using namespace maxmin;

Mdp random_mdp(std::uint64_t seed, int n_states, int n_actions, int k, double gamma) {
    CounterRng rng(seed);
    Mdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.gamma = gamma;
    m.initial_dist = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
    m.transitions.assign(static_cast<std::size_t>(n_actions),
                         Eigen::MatrixXd::Zero(n_states, n_states));
    for (int a = 0; a < n_actions; ++a)
        for (int s = 0; s < n_states; ++s) {
            Eigen::VectorXd row(n_states);
            for (int t = 0; t < n_states; ++t) row(t) = 0.1 + rng.next_double();
            row.head(n_states - 1) /= row.sum();
            row(n_states - 1) = 1.0 - row.head(n_states - 1).sum();
            m.transitions[static_cast<std::size_t>(a)].row(s) = row.transpose();
        }
    m.features.resize(n_states, k);
    for (int s = 0; s < n_states; ++s)
        for (int i = 0; i < k; ++i) m.features(s, i) = rng.next_double();
    m.validate();
    return m;
}

RewardSpec box_spec(int k) {
    RewardSpec spec;
    spec.k = k;
    spec.kind = RewardSpecKind::explicit_only;
    return spec;
}

void BM_SolveMdp(benchmark::State& state) {
    const int n_states = static_cast<int>(state.range(0));
    Mdp mdp = random_mdp(7, n_states, 4, 3, 0.95);
    CounterRng rng(11);
    for (auto _ : state) {
        Eigen::VectorXd w(3);
        for (int i = 0; i < 3; ++i) w(i) = rng.uniform(-1.0, 1.0);
        benchmark::DoNotOptimize(solve_mdp(mdp, w));
    }
}
BENCHMARK(BM_SolveMdp)->Arg(16)->Arg(64)->Arg(256);

void BM_EllipsoidFeasibility(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    Eigen::VectorXd center = Eigen::VectorXd::Constant(dim, 0.6);
    SeparationOracle ball = [&](const Eigen::VectorXd& x) {
        if ((x - center).norm() <= 0.05) return SeparationResponse::ok();
        Halfspace h;
        h.normal = (x - center).normalized();
        h.offset = h.normal.dot(x);
        return SeparationResponse::separate(std::move(h));
    };
    for (auto _ : state) benchmark::DoNotOptimize(ellipsoid_feasibility(ball, dim, 2.0));
}
BENCHMARK(BM_EllipsoidFeasibility)->Arg(2)->Arg(5)->Arg(10);

void BM_AccpmMinimize(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    SeparationOracle oracle = [&](const Eigen::VectorXd& x) {
        if (x.sum() >= 1.0) return SeparationResponse::ok();
        Halfspace h;
        h.normal = Eigen::VectorXd::Constant(x.size(), -1.0);
        h.offset = -1.0;
        return SeparationResponse::separate(std::move(h));
    };
    Eigen::VectorXd c = Eigen::VectorXd::Ones(dim);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, -1.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(accpm_minimize(oracle, c, lo, hi, 1e-5));
}
BENCHMARK(BM_AccpmMinimize)->Arg(2)->Arg(5);

void BM_MinOverReward(benchmark::State& state) {
    RewardSpec spec = box_spec(3);
    CounterRng rng(3);
    Eigen::VectorXd n1(3), n2(3);
    for (int i = 0; i < 3; ++i) {
        n1(i) = rng.uniform(-1.0, 1.0);
        n2(i) = rng.uniform(-1.0, 1.0);
    }
    spec.halfspaces.push_back({n1.normalized(), 0.4});
    spec.halfspaces.push_back({n2.normalized(), 0.4});
    for (auto _ : state) {
        Eigen::VectorXd d(3);
        for (int i = 0; i < 3; ++i) d(i) = rng.uniform(-1.0, 1.0);
        benchmark::DoNotOptimize(min_over_reward(spec, d, 1e-5));
    }
}
BENCHMARK(BM_MinOverReward);

void BM_FplRounds(benchmark::State& state) {
    const int T = static_cast<int>(state.range(0));
    Mdp mdp = random_mdp(19, 6, 2, 3, 0.9);
    RewardSpec spec = box_spec(3);
    for (auto _ : state) {
        FplConfig cfg;
        cfg.T = T;
        cfg.seed = 1;
        cfg.record_trace = false;
        benchmark::DoNotOptimize(fpl_solve(mdp, spec, cfg));
    }
}
BENCHMARK(BM_FplRounds)->Arg(10)->Arg(50);

} // namespace

BENCHMARK_MAIN();
