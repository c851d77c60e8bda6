#include "fixtures.hpp"
#include "maxmin/errors.hpp"
#include "maxmin/fpl.hpp"
#include "maxmin/maxmin.hpp"
#include "maxmin/planning.hpp"

#include <doctest/doctest.h>

#include <cmath>

using namespace maxmin;
using testutil::two_route_mdp;
using testutil::two_route_spec;

TEST_CASE("regret bound formula") {
    // k^2 (6 + 4 sqrt(ln 1/xi)) / sqrt(T), frozen reference values.
    CHECK(regret_bound(2, 400, 0.05) == doctest::Approx(2.584654706081828).epsilon(1e-12));
    CHECK(regret_bound(2, 25, 0.05) == doctest::Approx(10.338618824327312).epsilon(1e-12));
    CHECK(regret_bound(2, 100, 0.05) == doctest::Approx(5.169309412163656).epsilon(1e-12));
    CHECK(regret_bound(2, 1600, 0.05) == doctest::Approx(1.292327353040914).epsilon(1e-12));
    CHECK(regret_bound(3, 400, 0.05) == doctest::Approx(5.815473088684113).epsilon(1e-12));

    CHECK(regret_bound(2, 1600, 0.05) < regret_bound(2, 400, 0.05));
    CHECK_THROWS_AS(regret_bound(0, 100, 0.05), ValidationError);
    CHECK_THROWS_AS(regret_bound(2, 0, 0.05), ValidationError);
    CHECK_THROWS_AS(regret_bound(2, 100, 0.0), ValidationError);
    CHECK_THROWS_AS(regret_bound(2, 100, 1.0), ValidationError);
}

TEST_CASE("perturbed-leader loop on the triangle instance") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0);

    FplConfig cfg;
    cfg.T = 60;
    cfg.seed = 7;
    FplResult r = fpl_solve(m, spec, cfg);

    CHECK_NOTHROW(r.mixture.validate());
    CHECK(r.trace.iterates.size() == 60);
    CHECK(r.planner_solves == 60);
    CHECK(r.regret_bound_value == doctest::Approx(regret_bound(2, 60, 0.05)).epsilon(1e-12));

    // Perturbations stay inside [0, 1/delta] with the default density.
    const double hi = 2.0 * std::sqrt(60.0);
    for (const auto& it : r.trace.iterates) {
        CHECK(it.p.minCoeff() >= 0.0);
        CHECK(it.p.maxCoeff() <= hi);
        CHECK(it.q.minCoeff() >= 0.0);
        CHECK(it.q.maxCoeff() <= hi);
        // Every adversary pick is a member of the consistent set.
        CHECK(so_reward(spec, it.w, 1e-6).inside());
        // Every learner response is one of the two routes.
        CHECK((it.mu - testutil::mu_top()).norm() * (it.mu - testutil::mu_bottom()).norm() <
              1e-6);
    }

    // The tail average reported for the mixture matches the trace.
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& it : r.trace.iterates) mean += it.mu;
    mean /= 60.0;
    CHECK((r.mixture_mu - Eigen::VectorXd(mean)).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK((mixed_feature_expectation(m, r.mixture) - r.mixture_mu).lpNorm<Eigen::Infinity>() <
          1e-7);

    // No mixture can beat the maxmin value of 90.
    WorstCaseResult wc = evaluate_worst_case(m, spec, r.mixture);
    CHECK(wc.value <= 90.0 + 1e-4);
}

TEST_CASE("perturbed-leader runs are reproducible bit for bit") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0);
    FplConfig cfg;
    cfg.T = 30;
    cfg.seed = 11;

    FplResult a = fpl_solve(m, spec, cfg);
    FplResult b = fpl_solve(m, spec, cfg);
    REQUIRE(a.trace.iterates.size() == b.trace.iterates.size());
    for (std::size_t i = 0; i < a.trace.iterates.size(); ++i) {
        CHECK((a.trace.iterates[i].p - b.trace.iterates[i].p).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK((a.trace.iterates[i].w - b.trace.iterates[i].w).lpNorm<Eigen::Infinity>() == 0.0);
        CHECK(a.trace.iterates[i].policy == b.trace.iterates[i].policy);
    }
    CHECK(a.mixture.weights == b.mixture.weights);

    FplConfig other = cfg;
    other.seed = 12;
    FplResult c = fpl_solve(m, spec, other);
    bool any_diff = false;
    for (std::size_t i = 0; i < c.trace.iterates.size(); ++i)
        if ((a.trace.iterates[i].p - c.trace.iterates[i].p).lpNorm<Eigen::Infinity>() > 0.0)
            any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("tail window restricts the mixture support") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0);
    FplConfig cfg;
    cfg.T = 40;
    cfg.seed = 5;
    cfg.tail_window = 10;

    FplResult r = fpl_solve(m, spec, cfg);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int t = 30; t < 40; ++t) mean += r.trace.iterates[static_cast<std::size_t>(t)].mu;
    mean /= 10.0;
    CHECK((r.mixture_mu - Eigen::VectorXd(mean)).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(r.mixture.size() <= 10);

    FplConfig bad = cfg;
    bad.tail_window = 41;
    CHECK_THROWS_AS(fpl_solve(m, spec, bad), ValidationError);
}

TEST_CASE("iterative mixture approaches the maxmin value at moderate horizons") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0);

    FplConfig cfg;
    cfg.T = 400;
    cfg.record_trace = false;
    const double bound = regret_bound(2, 400, 0.05);

    int hits = 0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        cfg.seed = seed;
        FplResult r = fpl_solve(m, spec, cfg);
        WorstCaseResult wc = evaluate_worst_case(m, spec, r.mixture);
        CHECK(wc.value <= 90.0 + 1e-4);
        if (wc.value >= 90.0 - bound) ++hits;
    }
    CHECK(hits >= 4);
}

TEST_CASE("empty reward set surfaces through the iterative path") {
    Mdp m = two_route_mdp();
    FplConfig cfg;
    cfg.T = 5;
    CHECK_THROWS_AS(fpl_solve(m, testutil::empty_spec(), cfg), EmptyPolytopeError);
}

TEST_CASE("worst-case evaluation of pure mixtures") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0);

    MixedPolicy top = MixedPolicy::pure(Policy::from_actions({0, 0, 0}, 2));
    WorstCaseResult wt = evaluate_worst_case(m, spec, top);
    CHECK(wt.value == doctest::Approx(70.0).epsilon(1e-6));
    CHECK(std::abs(wt.worst_weight.dot(Eigen::VectorXd(testutil::mu_top())) - wt.value) <= 1e-7);

    MixedPolicy bottom = MixedPolicy::pure(Policy::from_actions({1, 0, 0}, 2));
    WorstCaseResult wb = evaluate_worst_case(m, spec, bottom);
    CHECK(wb.value == doctest::Approx(90.0).epsilon(1e-6));
}

TEST_CASE("approximate-path preconditions") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0, false);
    FplConfig cfg;
    cfg.T = 20;
    ApproxSolver exact = make_exact_approx_solver();

    CHECK_THROWS_AS(fpl_solve_approx(m, testutil::empty_spec(), cfg, 0.5, exact),
                    ValidationError);
    CHECK_THROWS_AS(fpl_solve_approx(m, spec, cfg, 0.0, exact), ValidationError);
    CHECK_THROWS_AS(fpl_solve_approx(m, spec, cfg, -1.0, exact), ValidationError);

    FplConfig tiny = cfg;
    tiny.T = 1;
    CHECK_THROWS_AS(fpl_solve_approx(m, spec, tiny, 9.0, exact), ValidationError);
}

TEST_CASE("approximate path with the exact solver stays consistent") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0, false);

    FplConfig cfg;
    cfg.T = 40;
    cfg.seed = 17;
    cfg.inner_eps = 0.05;
    cfg.record_trace = true;
    FplResult r = fpl_solve_approx(m, spec, cfg, 0.5, make_exact_approx_solver());

    CHECK(r.trace.iterates.size() == 40);
    for (const auto& it : r.trace.iterates)
        CHECK(so_reward(spec, it.w, 1e-6).inside());

    WorstCaseResult wc = evaluate_worst_case(m, spec, r.mixture);
    CHECK(wc.value <= -170.0 + 1e-3);
}

TEST_CASE("approximate path with the runner-up solver audits its picks") {
    Mdp m = two_route_mdp();
    RewardSpec spec = two_route_spec(25.0, false);

    FplConfig cfg;
    cfg.T = 100;
    cfg.seed = 3;
    cfg.inner_eps = 0.05;
    cfg.record_trace = true;
    const double c = 0.5;
    FplResult r = fpl_solve_approx(m, spec, cfg, c, make_second_best_solver());

    for (const auto& it : r.trace.iterates)
        CHECK(so_reward(spec, it.w, 1e-6).inside());

    WorstCaseResult wc = evaluate_worst_case(m, spec, r.mixture);
    CHECK(wc.value <= -170.0 + 1e-3);
    CHECK(wc.value >= -170.0 - regret_bound(2, 100, 0.05) - 4.0 * c);
}
