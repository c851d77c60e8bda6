#include "fixtures.hpp"
#include "maxmin/errors.hpp"
#include "maxmin/gridworld.hpp"
#include "maxmin/planning.hpp"

#include <doctest/doctest.h>

#include <cmath>
#include <deque>
#include <numeric>

using namespace maxmin;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.width = 2;
    g.height = 2;
    g.n_terrain = 2;
    g.terrain = {0, 1, 1, 0};
    g.goal_cell = 3;
    g.slip = 0.0;
    g.gamma = 0.9;
    return g;
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.demo_size = 4;
    cfg.test_size = 5;
    cfg.demo_terrain = 2;
    cfg.n_terrain = 3;
    cfg.fpl_T = 40;
    cfg.inner_eps = 1e-3;
    cfg.seeds = {1, 2};
    return cfg;
}

// Independent reachability check: goal to every start cell through cells
// that are not of the avoided terrain.
bool reaches_all_starts(const GridSpec& g) {
    const int avoid = g.n_terrain - 1;
    std::vector<char> seen(static_cast<std::size_t>(g.cells()), 0);
    std::deque<int> queue{g.goal_cell};
    seen[static_cast<std::size_t>(g.goal_cell)] = 1;
    auto push = [&](int c) {
        if (!seen[static_cast<std::size_t>(c)] && g.terrain[static_cast<std::size_t>(c)] != avoid) {
            seen[static_cast<std::size_t>(c)] = 1;
            queue.push_back(c);
        }
    };
    while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        const int r = c / g.width, col = c % g.width;
        if (r > 0) push(c - g.width);
        if (r < g.height - 1) push(c + g.width);
        if (col > 0) push(c - 1);
        if (col < g.width - 1) push(c + 1);
    }
    for (int s : g.start_cells)
        if (!seen[static_cast<std::size_t>(s)]) return false;
    return true;
}

} // namespace

TEST_CASE("grid spec validation") {
    CHECK_NOTHROW(small_grid().validate());

    SUBCASE("terrain list length") {
        GridSpec g = small_grid();
        g.terrain.pop_back();
        CHECK_THROWS_AS(g.validate(), ValidationError);
    }
    SUBCASE("terrain id range") {
        GridSpec g = small_grid();
        g.terrain[0] = 5;
        CHECK_THROWS_AS(g.validate(), ValidationError);
    }
    SUBCASE("goal range") {
        GridSpec g = small_grid();
        g.goal_cell = 4;
        CHECK_THROWS_AS(g.validate(), ValidationError);
    }
    SUBCASE("start on the goal") {
        GridSpec g = small_grid();
        g.start_cells = {3};
        CHECK_THROWS_AS(g.validate(), ValidationError);
    }
    SUBCASE("slip range") {
        GridSpec g = small_grid();
        g.slip = 1.5;
        CHECK_THROWS_AS(g.validate(), ValidationError);
    }
}

TEST_CASE("grid MDP construction") {
    GridSpec g = small_grid();
    Mdp m = build_grid_mdp(g);

    CHECK(m.n_states == 5); // four cells plus the absorbing sink
    CHECK(m.n_actions == 4);
    CHECK(m.k() == 3);

    SUBCASE("deterministic moves clamp at the border") {
        // Cell 0 is the top-left corner: up and left stay put.
        CHECK(m.transitions[0](0, 0) == doctest::Approx(1.0));
        CHECK(m.transitions[2](0, 0) == doctest::Approx(1.0));
        // Down reaches cell 2, right reaches cell 1.
        CHECK(m.transitions[1](0, 2) == doctest::Approx(1.0));
        CHECK(m.transitions[3](0, 1) == doctest::Approx(1.0));
    }
    SUBCASE("goal feeds the absorbing sink under every action") {
        for (int a = 0; a < 4; ++a) {
            CHECK(m.transitions[static_cast<std::size_t>(a)](3, 4) == doctest::Approx(1.0));
            CHECK(m.transitions[static_cast<std::size_t>(a)](4, 4) == doctest::Approx(1.0));
        }
    }
    SUBCASE("features are terrain one-hots with a goal flag") {
        CHECK(m.features(0, 0) == doctest::Approx(1.0));
        CHECK(m.features(1, 1) == doctest::Approx(1.0));
        CHECK(m.features(3, 0) == doctest::Approx(1.0)); // goal keeps its terrain
        CHECK(m.features(3, 2) == doctest::Approx(1.0)); // and raises the flag
        CHECK(m.features(4, 2) == doctest::Approx(0.0)); // the sink is featureless
        CHECK(m.features.row(4).sum() == doctest::Approx(0.0));
    }
    SUBCASE("default start support is uniform over non-goal cells") {
        CHECK(m.initial_dist(0) == doctest::Approx(1.0 / 3.0));
        CHECK(m.initial_dist(3) == doctest::Approx(0.0));
        CHECK(m.initial_dist(4) == doctest::Approx(0.0));
    }
    SUBCASE("slip mixes in uniformly random moves") {
        GridSpec s = small_grid();
        s.slip = 0.4;
        Mdp ms = build_grid_mdp(s);
        // From cell 0 with "right": 0.6 to the intended cell 1, plus 0.1 per
        // random direction (up/left fold back onto cell 0).
        CHECK(ms.transitions[3](0, 1) == doctest::Approx(0.7));
        CHECK(ms.transitions[3](0, 0) == doctest::Approx(0.2));
        CHECK(ms.transitions[3](0, 2) == doctest::Approx(0.1));
    }
}

TEST_CASE("expert bundles are reproducible and well formed") {
    ExperimentConfig cfg = tiny_config();

    ExpertBundle a = make_expert(cfg, 1);
    ExpertBundle b = make_expert(cfg, 1);
    CHECK(a.grid.terrain == b.grid.terrain);
    CHECK(a.grid.goal_cell == b.grid.goal_cell);
    CHECK((a.true_weights - b.true_weights).lpNorm<Eigen::Infinity>() == 0.0);

    ExpertBundle c = make_expert(cfg, 2);
    CHECK(a.grid.terrain != c.grid.terrain);

    // Demo terrain ids stay below demo_terrain; weights respect the ranges.
    for (int t : a.grid.terrain) CHECK(t < cfg.demo_terrain);
    for (int j = 0; j < cfg.demo_terrain; ++j) {
        CHECK(a.true_weights(j) >= cfg.terrain_lo / cfg.reward_unit - 1e-12);
        CHECK(a.true_weights(j) <= cfg.terrain_hi / cfg.reward_unit + 1e-12);
    }
    for (int j = cfg.demo_terrain; j < cfg.n_terrain; ++j)
        CHECK(a.true_weights(j) == 0.0);
    CHECK(a.true_weights(cfg.n_terrain) == 1.0);

    // The stored expectation is the expert policy's exact one.
    CHECK((a.mu_e - feature_expectation(a.mdp, a.policy)).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("test maps admit safe routes from every start cell") {
    ExperimentConfig cfg = tiny_config();
    const int avoid = cfg.n_terrain - 1;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        GridSpec g = make_test_grid(cfg, seed);
        CHECK(g.width == cfg.test_size);
        CHECK_FALSE(g.start_cells.empty());
        CHECK(g.terrain[static_cast<std::size_t>(g.goal_cell)] != avoid);
        for (int s : g.start_cells) {
            CHECK(s != g.goal_cell);
            CHECK(g.terrain[static_cast<std::size_t>(s)] != avoid);
        }
        CHECK(reaches_all_starts(g));

        GridSpec again = make_test_grid(cfg, seed);
        CHECK(g.terrain == again.terrain);
        CHECK(g.goal_cell == again.goal_cell);
    }
}

TEST_CASE("experiment reward set accepts the demonstration weights") {
    ExperimentConfig cfg = tiny_config();
    ExpertBundle expert = make_expert(cfg, 3);
    RewardSpec spec = make_experiment_reward_spec(cfg, expert);

    CHECK(spec.k == cfg.n_terrain + 1);
    CHECK(spec.kind == RewardSpecKind::expert_additive);
    REQUIRE(spec.pinned.size() == 1);
    CHECK(spec.pinned.front().first == spec.k - 1);
    CHECK(spec.pinned.front().second == doctest::Approx(1.0));
    CHECK(spec.experts.front().epsilon ==
          doctest::Approx(cfg.epsilon / cfg.reward_unit).epsilon(1e-12));
    REQUIRE(spec.halfspaces.size() == static_cast<std::size_t>(2 * cfg.demo_terrain));

    CHECK(so_reward(spec, expert.true_weights, 1e-9).inside());

    // Demonstrated types are held to their sampling range.
    Eigen::VectorXd deep_seen = expert.true_weights;
    deep_seen(0) = 2.0 * cfg.terrain_lo / cfg.reward_unit;
    CHECK_FALSE(so_reward(spec, deep_seen, 1e-9).inside());

    // The never-demonstrated type is free down to the norm-box floor.
    Eigen::VectorXd deep_unseen = expert.true_weights;
    deep_unseen(cfg.n_terrain - 1) = -1.0;
    CHECK(so_reward(spec, deep_unseen, 1e-9).inside());
}

TEST_CASE("terrain fractions form a distribution over visited terrain") {
    ExperimentConfig cfg = tiny_config();
    ExpertBundle expert = make_expert(cfg, 4);
    MixedPolicy mix = MixedPolicy::pure(expert.policy);

    std::vector<double> frac = terrain_fractions(expert.grid, expert.mdp, mix);
    REQUIRE(frac.size() == static_cast<std::size_t>(cfg.n_terrain));
    double sum = std::accumulate(frac.begin(), frac.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (double f : frac) CHECK(f >= 0.0);
    // Unseen terrains never appear on the demo map.
    CHECK(frac[static_cast<std::size_t>(cfg.n_terrain - 1)] == doctest::Approx(0.0));
}

TEST_CASE("trajectory rendering marks the map") {
    ExperimentConfig cfg = tiny_config();
    ExpertBundle expert = make_expert(cfg, 5);
    MixedPolicy mix = MixedPolicy::pure(expert.policy);

    std::string render = render_trajectory(expert.grid, expert.mdp, mix, 9);
    CHECK(render.find('G') != std::string::npos);
    CHECK(render.find('*') != std::string::npos);
    // height lines of width characters.
    std::size_t lines = 0;
    for (char ch : render)
        if (ch == '\n') ++lines;
    CHECK(lines == static_cast<std::size_t>(expert.grid.height));

    CHECK(render == render_trajectory(expert.grid, expert.mdp, mix, 9));
}

TEST_CASE("experiment seeds produce complete outcomes") {
    ExperimentConfig cfg = tiny_config();
    SeedOutcome o = run_experiment_seed(cfg, 1);

    CHECK(o.seed == 1);
    CHECK(o.regret_bound_value ==
          doctest::Approx(regret_bound(cfg.n_terrain + 1, cfg.fpl_T, 0.05)).epsilon(1e-12));
    CHECK(o.fpl_distinct_policies >= 1);
    REQUIRE(o.maxmin.terrain_fraction.size() == static_cast<std::size_t>(cfg.n_terrain));
    REQUIRE(o.baseline.terrain_fraction.size() == static_cast<std::size_t>(cfg.n_terrain));
    CHECK_FALSE(o.maxmin.render.empty());
    CHECK_FALSE(o.baseline.render.empty());
    CHECK_FALSE(o.expert.render.empty());
    CHECK(std::isfinite(o.maxmin.worst_case));
    CHECK(std::isfinite(o.baseline.worst_case));

    // Unseen-terrain draws live inside the configured range.
    for (int j = cfg.demo_terrain; j < cfg.n_terrain; ++j) {
        CHECK(o.actual_weights(j) >= cfg.baseline_lo / cfg.reward_unit - 1e-12);
        CHECK(o.actual_weights(j) <= cfg.baseline_hi / cfg.reward_unit + 1e-12);
    }
    // The baseline is optimal for the realized weights, so it scores at least
    // as well as the robust mixture under them.
    CHECK(o.baseline.value_actual >= o.maxmin.value_actual - 1e-8);
}

TEST_CASE("experiment runs are independent of the job count") {
    ExperimentConfig cfg = tiny_config();

    ExperimentReport serial = run_experiment(cfg);
    ExperimentConfig par = cfg;
    par.jobs = 2;
    ExperimentReport parallel = run_experiment(par);

    REQUIRE(serial.outcomes.size() == parallel.outcomes.size());
    for (std::size_t i = 0; i < serial.outcomes.size(); ++i) {
        CHECK(serial.outcomes[i].maxmin.worst_case == parallel.outcomes[i].maxmin.worst_case);
        CHECK(serial.outcomes[i].maxmin.render == parallel.outcomes[i].maxmin.render);
    }
    CHECK(serial.aggregate.mean_maxmin_last_terrain ==
          parallel.aggregate.mean_maxmin_last_terrain);
}

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg = tiny_config();
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("demo terrain exceeding the palette") {
        cfg.demo_terrain = 4;
        cfg.n_terrain = 3;
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
    }
    SUBCASE("empty seed list") {
        cfg.seeds.clear();
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
    }
    SUBCASE("horizon too short") {
        cfg.fpl_T = 1;
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
    }
    SUBCASE("negative reward unit") {
        cfg.reward_unit = -1.0;
        CHECK_THROWS_AS(cfg.validate(), ValidationError);
    }
}
