#pragma once

#include "maxmin/fpl.hpp"
#include "maxmin/mdp.hpp"
#include "maxmin/reward_polytope.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace maxmin {

// Rectangular gridworld. Cells are row-major; the built MDP appends one
// absorbing state entered from the goal.
struct GridSpec {
    int width = 0;
    int height = 0;
    int n_terrain = 5;             // feature dimension is n_terrain + 1
    std::vector<int> terrain;      // terrain id per cell
    int goal_cell = 0;
    double slip = 0.0;             // chance the move is replaced by a random one
    double gamma = 0.95;
    std::vector<int> start_cells;  // uniform support; empty = every non-goal cell

    int cells() const { return width * height; }
    void validate() const;
};

// Actions: 0 up, 1 down, 2 left, 3 right. Walking off the edge stays put.
Mdp build_grid_mdp(const GridSpec& grid);

struct ExperimentConfig {
    int demo_size = 10;
    int test_size = 15;
    int demo_terrain = 4;           // terrain ids used on the demo grid
    int n_terrain = 5;              // terrain ids available on the test grid
    double gamma = 0.95;
    double slip = 0.0;
    double reward_unit = 10.0;      // goal reward; weights are stored /reward_unit
    double epsilon = 0.5;           // consistency slack, in reward_unit terms
    double terrain_lo = -0.5, terrain_hi = 0.0;   // demo terrain reward range
    double baseline_lo = -1.0, baseline_hi = 0.0; // unseen terrain reward range
    int fpl_T = 500;
    int tail_window = 0;            // 0 = last half
    double inner_eps = 1e-4;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int jobs = 1;

    void validate() const;
};

struct ExpertBundle {
    GridSpec grid;
    Mdp mdp;
    Eigen::VectorXd true_weights; // scaled by 1/reward_unit
    Policy policy;
    FeatureExpectation mu_e;
};

// Demo world and the expert's exact feature expectation for one seed.
ExpertBundle make_expert(const ExperimentConfig& cfg, std::uint64_t seed);

// Test world: all terrains in play, start support avoids the last terrain,
// and every start cell reaches the goal without touching it. Resamples the
// map a bounded number of times to satisfy the filter.
GridSpec make_test_grid(const ExperimentConfig& cfg, std::uint64_t seed);

// Consistency set for the experiment: additive expert term from the demo,
// goal weight pinned to 1.
RewardSpec make_experiment_reward_spec(const ExperimentConfig& cfg, const ExpertBundle& expert);

struct GridPolicyStats {
    std::vector<double> terrain_fraction; // share of cell occupancy per terrain
    double worst_case = 0.0;
    double value_actual = 0.0;            // under the realized test weights
    std::string render;
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    GridSpec demo_grid;
    GridSpec test_grid;
    Eigen::VectorXd true_weights;   // demo world, scaled
    Eigen::VectorXd actual_weights; // test world incl. drawn unseen terrain, scaled
    FeatureExpectation mu_e;
    double regret_bound_value = 0.0;
    int fpl_distinct_policies = 0;
    GridPolicyStats expert;   // on the demo world
    GridPolicyStats maxmin;   // robust mixture on the test world
    GridPolicyStats baseline; // optimal under actual_weights on the test world
};

struct ExperimentAggregates {
    double mean_maxmin_last_terrain = 0.0;
    double mean_baseline_last_terrain = 0.0;
    double mean_maxmin_worst_case = 0.0;
    double mean_baseline_worst_case = 0.0;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<SeedOutcome> outcomes; // in the order cfg.seeds lists them
    ExperimentAggregates aggregate;
};

SeedOutcome run_experiment_seed(const ExperimentConfig& cfg, std::uint64_t seed);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Seeded rollout drawn as the terrain map ('1'..) with '*' on visited cells
// and 'G' on the goal.
std::string render_trajectory(const GridSpec& grid, const Mdp& mdp, const MixedPolicy& mixture,
                              std::uint64_t seed, int max_steps = 400);

// Cell occupancy shares per terrain id (absorbing state excluded).
std::vector<double> terrain_fractions(const GridSpec& grid, const Mdp& mdp,
                                      const MixedPolicy& mixture);

} // namespace maxmin
