#include "maxmin/gridworld.hpp"

#include "maxmin/errors.hpp"
#include "maxmin/planning.hpp"
#include "maxmin/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <string>
#include <thread>

namespace maxmin {

namespace {

// Stream tags for the experiment's independent draws. FPL uses round indices
// as tags, so these sit far above any horizon.
constexpr std::uint64_t kDemoStream = 1u << 20;
constexpr std::uint64_t kTestStream = 2u << 20;
constexpr std::uint64_t kBaselineStream = 3u << 20;
constexpr std::uint64_t kRenderStream = 4u << 20;

int row_of(const GridSpec& g, int cell) { return cell / g.width; }
int col_of(const GridSpec& g, int cell) { return cell % g.width; }

int step_cell(const GridSpec& g, int cell, int action) {
    int r = row_of(g, cell);
    int c = col_of(g, cell);
    switch (action) {
    case 0: r = std::max(0, r - 1); break;
    case 1: r = std::min(g.height - 1, r + 1); break;
    case 2: c = std::max(0, c - 1); break;
    case 3: c = std::min(g.width - 1, c + 1); break;
    default: throw ValidationError("grid action out of range");
    }
    return r * g.width + c;
}

} // namespace

void GridSpec::validate() const {
    if (width < 1 || height < 1) throw ValidationError("grid needs positive width and height");
    if (n_terrain < 1) throw ValidationError("grid needs at least one terrain type");
    if (static_cast<int>(terrain.size()) != cells())
        throw ValidationError("terrain list does not cover the grid");
    for (std::size_t i = 0; i < terrain.size(); ++i)
        if (terrain[i] < 0 || terrain[i] >= n_terrain)
            throw ValidationError("terrain id at cell " + std::to_string(i) + " out of range");
    if (goal_cell < 0 || goal_cell >= cells())
        throw ValidationError("goal cell out of range");
    if (!(slip >= 0.0 && slip <= 1.0)) throw ValidationError("slip must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0,1)");
    for (int s : start_cells) {
        if (s < 0 || s >= cells()) throw ValidationError("start cell out of range");
        if (s == goal_cell) throw ValidationError("goal cell cannot be a start cell");
    }
}

Mdp build_grid_mdp(const GridSpec& grid) {
    grid.validate();
    const int C = grid.cells();
    const int S = C + 1; // absorbing state last
    const int A = 4;
    const int k = grid.n_terrain + 1;

    Mdp mdp;
    mdp.n_states = S;
    mdp.n_actions = A;
    mdp.gamma = grid.gamma;

    mdp.transitions.assign(A, Eigen::MatrixXd::Zero(S, S));
    for (int a = 0; a < A; ++a) {
        Eigen::MatrixXd& P = mdp.transitions[static_cast<std::size_t>(a)];
        for (int c = 0; c < C; ++c) {
            if (c == grid.goal_cell) {
                P(c, C) = 1.0;
                continue;
            }
            P(c, step_cell(grid, c, a)) += 1.0 - grid.slip;
            for (int d = 0; d < 4; ++d) P(c, step_cell(grid, c, d)) += grid.slip / 4.0;
        }
        P(C, C) = 1.0;
    }

    mdp.features = Eigen::MatrixXd::Zero(S, k);
    for (int c = 0; c < C; ++c) mdp.features(c, grid.terrain[static_cast<std::size_t>(c)]) = 1.0;
    mdp.features(grid.goal_cell, k - 1) = 1.0;

    mdp.initial_dist = Eigen::VectorXd::Zero(S);
    if (grid.start_cells.empty()) {
        const double share = 1.0 / static_cast<double>(C - 1);
        for (int c = 0; c < C; ++c)
            if (c != grid.goal_cell) mdp.initial_dist(c) = share;
    } else {
        const double share = 1.0 / static_cast<double>(grid.start_cells.size());
        for (int s : grid.start_cells) mdp.initial_dist(s) += share;
    }

    mdp.validate();
    return mdp;
}

void ExperimentConfig::validate() const {
    if (demo_size < 2 || test_size < 2) throw ValidationError("grid sizes must be at least 2");
    if (demo_terrain < 1 || n_terrain < demo_terrain)
        throw ValidationError("need 1 <= demo_terrain <= n_terrain");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0,1)");
    if (!(slip >= 0.0 && slip <= 1.0)) throw ValidationError("slip must lie in [0,1]");
    if (!(reward_unit > 0.0)) throw ValidationError("reward unit must be positive");
    if (!(epsilon >= 0.0)) throw ValidationError("epsilon must be nonnegative");
    if (!(terrain_lo <= terrain_hi && std::abs(terrain_lo) <= reward_unit))
        throw ValidationError("terrain reward range invalid");
    if (!(baseline_lo <= baseline_hi && std::abs(baseline_lo) <= reward_unit))
        throw ValidationError("baseline reward range invalid");
    if (fpl_T < 2) throw ValidationError("experiment horizon too short");
    if (tail_window < 0 || tail_window > fpl_T)
        throw ValidationError("tail window must lie in [0, T]");
    if (seeds.empty()) throw ValidationError("experiment needs at least one seed");
    if (jobs < 1) throw ValidationError("jobs must be at least 1");
}

ExpertBundle make_expert(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int k = cfg.n_terrain + 1;

    CounterRng rng(CounterRng::derive(seed, kDemoStream));
    GridSpec g;
    g.width = cfg.demo_size;
    g.height = cfg.demo_size;
    g.n_terrain = cfg.n_terrain;
    g.slip = cfg.slip;
    g.gamma = cfg.gamma;
    g.terrain.resize(static_cast<std::size_t>(g.cells()));
    for (auto& t : g.terrain) t = static_cast<int>(rng.next_below(cfg.demo_terrain));
    g.goal_cell = static_cast<int>(rng.next_below(g.cells()));

    ExpertBundle bundle;
    bundle.true_weights = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < cfg.demo_terrain; ++j)
        bundle.true_weights(j) = rng.uniform(cfg.terrain_lo, cfg.terrain_hi) / cfg.reward_unit;
    bundle.true_weights(k - 1) = 1.0;

    bundle.grid = g;
    bundle.mdp = build_grid_mdp(g);
    SolveResult sr = solve_mdp(bundle.mdp, bundle.true_weights);
    bundle.policy = sr.policy;
    bundle.mu_e = sr.mu;
    return bundle;
}

namespace {

// Every start cell must reach the goal through cells below the last terrain.
bool start_support_connected(const GridSpec& g) {
    const int avoid = g.n_terrain - 1;
    std::vector<char> seen(static_cast<std::size_t>(g.cells()), 0);
    std::deque<int> queue;
    if (g.terrain[static_cast<std::size_t>(g.goal_cell)] == avoid) return false;
    seen[static_cast<std::size_t>(g.goal_cell)] = 1;
    queue.push_back(g.goal_cell);
    while (!queue.empty()) {
        int c = queue.front();
        queue.pop_front();
        for (int a = 0; a < 4; ++a) {
            int n = step_cell(g, c, a);
            if (seen[static_cast<std::size_t>(n)]) continue;
            if (g.terrain[static_cast<std::size_t>(n)] == avoid) continue;
            seen[static_cast<std::size_t>(n)] = 1;
            queue.push_back(n);
        }
    }
    for (int s : g.start_cells)
        if (!seen[static_cast<std::size_t>(s)]) return false;
    return true;
}

} // namespace

GridSpec make_test_grid(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    for (int attempt = 0; attempt < 100; ++attempt) {
        CounterRng rng(CounterRng::derive(seed, kTestStream + static_cast<std::uint64_t>(attempt)));
        GridSpec g;
        g.width = cfg.test_size;
        g.height = cfg.test_size;
        g.n_terrain = cfg.n_terrain;
        g.slip = cfg.slip;
        g.gamma = cfg.gamma;
        g.terrain.resize(static_cast<std::size_t>(g.cells()));
        for (auto& t : g.terrain) t = static_cast<int>(rng.next_below(cfg.n_terrain));
        g.goal_cell = static_cast<int>(rng.next_below(g.cells()));

        const int avoid = cfg.n_terrain - 1;
        for (int c = 0; c < g.cells(); ++c)
            if (c != g.goal_cell && g.terrain[static_cast<std::size_t>(c)] != avoid)
                g.start_cells.push_back(c);
        if (g.start_cells.empty()) continue;
        if (!start_support_connected(g)) continue;
        g.validate();
        return g;
    }
    throw ValidationError("no admissible test map found within the resampling budget");
}

RewardSpec make_experiment_reward_spec(const ExperimentConfig& cfg, const ExpertBundle& expert) {
    RewardSpec spec;
    spec.k = cfg.n_terrain + 1;
    spec.kind = RewardSpecKind::expert_additive;
    ExpertTerm term;
    term.task = expert.mdp;
    term.mu_e = expert.mu_e;
    term.epsilon = cfg.epsilon / cfg.reward_unit;
    spec.experts.push_back(std::move(term));
    spec.pinned.emplace_back(spec.k - 1, 1.0);
    // Demonstrated terrain types keep their known sampling range as explicit
    // rows. Demonstrations alone cannot bound how bad a terrain might be: on
    // goal-dominated maps every near-shortest expert stays near-optimal when
    // all terrain weights sink together, so without these rows the worst case
    // treats familiar terrain as harshly as the never-demonstrated type, whose
    // weight stays free down to the norm-box floor.
    for (int j = 0; j < cfg.demo_terrain; ++j) {
        Halfspace up;
        up.normal = Eigen::VectorXd::Zero(spec.k);
        up.normal(j) = 1.0;
        up.offset = cfg.terrain_hi / cfg.reward_unit;
        Halfspace down;
        down.normal = -up.normal;
        down.offset = -cfg.terrain_lo / cfg.reward_unit;
        spec.halfspaces.push_back(std::move(up));
        spec.halfspaces.push_back(std::move(down));
    }
    return spec;
}

std::vector<double> terrain_fractions(const GridSpec& grid, const Mdp& mdp,
                                      const MixedPolicy& mixture) {
    OccupancyMeasure occ = mixed_occupancy_measure(mdp, mixture);
    Eigen::VectorXd y = occ.state_occupancy();
    std::vector<double> fraction(static_cast<std::size_t>(grid.n_terrain), 0.0);
    double total = 0.0;
    for (int c = 0; c < grid.cells(); ++c) total += y(c);
    if (total <= 0.0) return fraction;
    for (int c = 0; c < grid.cells(); ++c)
        fraction[static_cast<std::size_t>(grid.terrain[static_cast<std::size_t>(c)])] +=
            y(c) / total;
    return fraction;
}

std::string render_trajectory(const GridSpec& grid, const Mdp& mdp, const MixedPolicy& mixture,
                              std::uint64_t seed, int max_steps) {
    grid.validate();
    mixture.validate();
    CounterRng rng(CounterRng::derive(seed, kRenderStream));

    // One component drives the whole rollout.
    double pick = rng.next_double();
    std::size_t comp = 0;
    for (; comp + 1 < mixture.components.size(); ++comp) {
        pick -= mixture.weights[comp];
        if (pick < 0.0) break;
    }
    const Policy& pol = mixture.components[comp];

    auto sample = [&rng](const Eigen::VectorXd& dist) {
        double u = rng.next_double();
        for (int i = 0; i < dist.size(); ++i) {
            u -= dist(i);
            if (u < 0.0) return i;
        }
        return static_cast<int>(dist.size()) - 1;
    };

    std::vector<char> visited(static_cast<std::size_t>(grid.cells()), 0);
    int s = sample(mdp.initial_dist);
    for (int step = 0; step < max_steps && s < grid.cells(); ++step) {
        visited[static_cast<std::size_t>(s)] = 1;
        int a = sample(pol.probs.row(s).transpose());
        s = sample(mdp.transitions[static_cast<std::size_t>(a)].row(s).transpose());
    }

    std::string out;
    out.reserve(static_cast<std::size_t>((grid.width + 1) * grid.height));
    for (int r = 0; r < grid.height; ++r) {
        for (int c = 0; c < grid.width; ++c) {
            const int cell = r * grid.width + c;
            char ch = static_cast<char>('1' + grid.terrain[static_cast<std::size_t>(cell)]);
            if (visited[static_cast<std::size_t>(cell)]) ch = '*';
            if (cell == grid.goal_cell) ch = 'G';
            out.push_back(ch);
        }
        out.push_back('\n');
    }
    return out;
}

namespace {

GridPolicyStats policy_stats(const GridSpec& grid, const Mdp& mdp, const RewardSpec& spec,
                             const MixedPolicy& mixture, const Eigen::VectorXd& actual_weights,
                             double inner_eps, std::uint64_t seed) {
    GridPolicyStats stats;
    stats.terrain_fraction = terrain_fractions(grid, mdp, mixture);
    WorstCaseResult wc = evaluate_worst_case(mdp, spec, mixture, inner_eps);
    stats.worst_case = wc.value;
    stats.value_actual = mixed_feature_expectation(mdp, mixture).dot(actual_weights);
    stats.render = render_trajectory(grid, mdp, mixture, seed);
    return stats;
}

} // namespace

SeedOutcome run_experiment_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int k = cfg.n_terrain + 1;

    SeedOutcome out;
    out.seed = seed;

    ExpertBundle expert = make_expert(cfg, seed);
    out.demo_grid = expert.grid;
    out.true_weights = expert.true_weights;
    out.mu_e = expert.mu_e;

    GridSpec test = make_test_grid(cfg, seed);
    out.test_grid = test;
    Mdp test_mdp = build_grid_mdp(test);

    RewardSpec spec = make_experiment_reward_spec(cfg, expert);

    // Environment weights realized in the test world: demo terrains keep their
    // true rewards, unseen terrains draw from the pessimistic range.
    out.actual_weights = expert.true_weights;
    CounterRng base_rng(CounterRng::derive(seed, kBaselineStream));
    for (int j = cfg.demo_terrain; j < cfg.n_terrain; ++j)
        out.actual_weights(j) = base_rng.uniform(cfg.baseline_lo, cfg.baseline_hi) / cfg.reward_unit;

    FplConfig fpl;
    fpl.T = cfg.fpl_T;
    fpl.seed = seed;
    fpl.tail_window = cfg.tail_window > 0 ? cfg.tail_window : cfg.fpl_T / 2;
    fpl.inner_eps = cfg.inner_eps;
    fpl.record_trace = false;
    // Perturbations sized to the unit-box weight increments, not the solver
    // default 1/(k sqrt(T)). With draws of range k*sqrt(T) the leader farms
    // perturbation pockets (a one-off terrain penalty against a perpetual
    // gamma/(1-gamma)-scaled differential) deep into the tail; at range
    // sqrt(T)/k the accumulated signal dominates every pocket by mid-run.
    fpl.delta = static_cast<double>(k) / std::sqrt(static_cast<double>(cfg.fpl_T));
    FplResult run = fpl_solve(test_mdp, spec, fpl);
    out.regret_bound_value = run.regret_bound_value;
    out.fpl_distinct_policies = static_cast<int>(run.mixture.components.size());

    SolveResult base = solve_mdp(test_mdp, out.actual_weights);
    MixedPolicy baseline_mix = MixedPolicy::pure(base.policy);
    MixedPolicy expert_mix = MixedPolicy::pure(expert.policy);

    out.maxmin = policy_stats(test, test_mdp, spec, run.mixture, out.actual_weights,
                              cfg.inner_eps, seed);
    out.baseline = policy_stats(test, test_mdp, spec, baseline_mix, out.actual_weights,
                                cfg.inner_eps, seed);

    // The expert is reported in its own world, under the demo's true weights.
    out.expert.terrain_fraction = terrain_fractions(expert.grid, expert.mdp, expert_mix);
    out.expert.value_actual = expert.mu_e.dot(expert.true_weights);
    out.expert.worst_case = evaluate_worst_case(expert.mdp, spec, expert_mix, cfg.inner_eps).value;
    out.expert.render = render_trajectory(expert.grid, expert.mdp, expert_mix, seed);

    
    return out;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport report;
    report.config = cfg;
    report.outcomes.resize(cfg.seeds.size());

    const int jobs = std::min<int>(cfg.jobs, static_cast<int>(cfg.seeds.size()));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
            report.outcomes[i] = run_experiment_seed(cfg, cfg.seeds[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back([&, j] {
                try {
                    for (;;) {
                        const std::size_t i = next.fetch_add(1);
                        if (i >= cfg.seeds.size()) return;
                        report.outcomes[i] = run_experiment_seed(cfg, cfg.seeds[i]);
                    }
                } catch (...) {
                    errors[static_cast<std::size_t>(j)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    const double n = static_cast<double>(report.outcomes.size());
    const std::size_t last = static_cast<std::size_t>(cfg.n_terrain - 1);
    for (const auto& o : report.outcomes) {
        report.aggregate.mean_maxmin_last_terrain += o.maxmin.terrain_fraction[last] / n;
        report.aggregate.mean_baseline_last_terrain += o.baseline.terrain_fraction[last] / n;
        report.aggregate.mean_maxmin_worst_case += o.maxmin.worst_case / n;
        report.aggregate.mean_baseline_worst_case += o.baseline.worst_case / n;
    }
    return report;
}

} // namespace maxmin
