#include "fixtures.hpp"
#include "maxmin/lp.hpp"
#include "maxmin/rng.hpp"

#include <doctest/doctest.h>

#include <cmath>
#include <limits>

using namespace maxmin;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("bounded maximization over inequality rows") {
    // max x + y  s.t.  x <= 1, y <= 2, x,y >= 0
    LpProblem lp;
    lp.A_ub.resize(2, 2);
    lp.A_ub << 1, 0, 0, 1;
    lp.b_ub.resize(2);
    lp.b_ub << 1, 2;
    lp.c.resize(2);
    lp.c << 1, 1;
    lp.maximize = true;

    LpResult r = dense_lp_solve(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.x(1) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("minimization with free variables and explicit bounds") {
    // min x - y  s.t.  x + y <= 4, -3 <= x <= 3, -3 <= y <= 3
    LpProblem lp;
    lp.A_ub.resize(1, 2);
    lp.A_ub << 1, 1;
    lp.b_ub.resize(1);
    lp.b_ub << 4;
    lp.c.resize(2);
    lp.c << 1, -1;
    lp.lo = Eigen::Vector2d(-3, -3);
    lp.hi = Eigen::Vector2d(3, 3);

    LpResult r = dense_lp_solve(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(-6.0).epsilon(1e-10));
    CHECK(r.x(0) == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(r.x(1) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("equality constrained transportation toy") {
    // min 2a + b  s.t.  a + b = 1, a,b >= 0
    LpProblem lp;
    lp.A_eq.resize(1, 2);
    lp.A_eq << 1, 1;
    lp.b_eq.resize(1);
    lp.b_eq << 1;
    lp.c.resize(2);
    lp.c << 2, 1;

    LpResult r = dense_lp_solve(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(r.x(0) == doctest::Approx(0.0));
    CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("unbounded detection") {
    // max x with only x >= 0
    LpProblem lp;
    lp.c.resize(1);
    lp.c << 1;
    lp.maximize = true;
    lp.lo = Eigen::VectorXd::Zero(1);
    lp.hi = Eigen::VectorXd::Constant(1, kInf);

    LpResult r = dense_lp_solve(lp);
    CHECK(r.status == LpStatus::unbounded);
}

TEST_CASE("infeasible inequality system") {
    // x <= -1 with x >= 0
    LpProblem lp;
    lp.A_ub.resize(1, 1);
    lp.A_ub << 1;
    lp.b_ub.resize(1);
    lp.b_ub << -1;
    lp.c.resize(1);
    lp.c << 1;

    LpResult r = dense_lp_solve(lp);
    CHECK(r.status == LpStatus::infeasible);
}

TEST_CASE("farkas certificate for standard form infeasibility") {
    // {x1 + x2 = -1, x >= 0} is empty; {x1 - x2 = 3, x1 + x2 = 1, x >= 0} too.
    SUBCASE("negative right-hand side") {
        LpProblem lp;
        lp.A_eq.resize(1, 2);
        lp.A_eq << 1, 1;
        lp.b_eq.resize(1);
        lp.b_eq << -1;
        lp.c = Eigen::VectorXd::Zero(2);

        LpResult r = dense_lp_solve(lp);
        REQUIRE(r.status == LpStatus::infeasible);
        REQUIRE(r.farkas.size() == 1);
        Eigen::VectorXd yA = r.farkas.transpose() * lp.A_eq;
        CHECK(yA.maxCoeff() <= 1e-7);
        CHECK(r.farkas.dot(lp.b_eq) > 1e-9);
        CHECK(r.farkas.lpNorm<Eigen::Infinity>() == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("conflicting rows") {
        LpProblem lp;
        lp.A_eq.resize(2, 2);
        lp.A_eq << 1, -1, 1, 1;
        lp.b_eq.resize(2);
        lp.b_eq << 3, 1;
        lp.c = Eigen::VectorXd::Zero(2);

        LpResult r = dense_lp_solve(lp);
        REQUIRE(r.status == LpStatus::infeasible);
        REQUIRE(r.farkas.size() == 2);
        Eigen::VectorXd yA = r.farkas.transpose() * lp.A_eq;
        CHECK(yA.maxCoeff() <= 1e-7);
        CHECK(r.farkas.dot(lp.b_eq) > 1e-9);
    }
    SUBCASE("no certificate outside standard form") {
        LpProblem lp;
        lp.A_ub.resize(1, 1);
        lp.A_ub << 1;
        lp.b_ub.resize(1);
        lp.b_ub << -1;
        lp.c.resize(1);
        lp.c << 0;

        LpResult r = dense_lp_solve(lp);
        REQUIRE(r.status == LpStatus::infeasible);
        CHECK(r.farkas.size() == 0);
    }
}

TEST_CASE("degenerate rows do not cycle") {
    // Classic Beale-style degeneracy; Bland's rule must terminate.
    LpProblem lp;
    lp.A_ub.resize(3, 4);
    lp.A_ub << 0.25, -8, -1, 9, 0.5, -12, -0.5, 3, 0, 0, 1, 0;
    lp.b_ub.resize(3);
    lp.b_ub << 0, 0, 1;
    lp.c.resize(4);
    lp.c << 0.75, -20, 0.5, -6;
    lp.maximize = true;

    LpResult r = dense_lp_solve(lp);
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(1.25).epsilon(1e-9));
}

TEST_CASE("random boxed LPs: solver beats rejection sampling") {
    CounterRng rng(CounterRng::derive(2024, 5));
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3;
        const int m = 4;
        LpProblem lp;
        lp.A_ub.resize(m, n);
        lp.b_ub.resize(m);
        Eigen::VectorXd interior(n);
        for (int j = 0; j < n; ++j) interior(j) = rng.uniform(-0.5, 0.5);
        for (int i = 0; i < m; ++i) {
            Eigen::VectorXd a(n);
            for (int j = 0; j < n; ++j) a(j) = rng.uniform(-1.0, 1.0);
            if (a.norm() < 1e-3) a(0) = 1.0;
            a.normalize();
            lp.A_ub.row(i) = a.transpose();
            lp.b_ub(i) = a.dot(interior) + rng.uniform(0.05, 0.4);
        }
        lp.c.resize(n);
        for (int j = 0; j < n; ++j) lp.c(j) = rng.uniform(-1.0, 1.0);
        lp.lo = Eigen::VectorXd::Constant(n, -1.0);
        lp.hi = Eigen::VectorXd::Constant(n, 1.0);

        LpResult r = dense_lp_solve(lp);
        REQUIRE(r.status == LpStatus::optimal);
        // The optimum is feasible.
        CHECK((lp.A_ub * r.x - lp.b_ub).maxCoeff() <= 1e-8);
        CHECK(r.x.minCoeff() >= -1.0 - 1e-9);
        CHECK(r.x.maxCoeff() <= 1.0 + 1e-9);
        // No sampled feasible point does better.
        for (int probe = 0; probe < 300; ++probe) {
            Eigen::VectorXd z(n);
            for (int j = 0; j < n; ++j) z(j) = rng.uniform(-1.0, 1.0);
            if ((lp.A_ub * z - lp.b_ub).maxCoeff() > 0.0) continue;
            CHECK(lp.c.dot(z) >= r.objective - 1e-8);
        }
    }
}

TEST_CASE("solver output is deterministic") {
    LpProblem lp;
    lp.A_ub.resize(2, 2);
    lp.A_ub << 1, 2, 3, 1;
    lp.b_ub.resize(2);
    lp.b_ub << 4, 6;
    lp.c.resize(2);
    lp.c << 1, 1;
    lp.maximize = true;

    LpResult a = dense_lp_solve(lp);
    LpResult b = dense_lp_solve(lp);
    REQUIRE(a.status == LpStatus::optimal);
    CHECK(a.objective == b.objective);
    CHECK((a.x - b.x).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(a.pivots == b.pivots);
}
