#pragma once

#include "maxmin/fpl.hpp"
#include "maxmin/gridworld.hpp"
#include "maxmin/maxmin.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace maxmin {

// All readers throw ValidationError on malformed input, naming the offending
// file and field. All writers are atomic (temp file + rename) and produce
// byte-stable output for identical inputs.

Mdp load_mdp(const std::filesystem::path& file);
void save_mdp(const Mdp& mdp, const std::filesystem::path& file);

// Expert tasks may be inlined or referenced by path (relative to the spec
// file); expert feature expectations may be given directly or via a policy
// file evaluated on the task.
RewardSpec load_reward_spec(const std::filesystem::path& file);
void save_reward_spec(const RewardSpec& spec, const std::filesystem::path& file);

MixedPolicy load_policy(const std::filesystem::path& file);
void save_policy(const MixedPolicy& policy, const std::filesystem::path& file);

void save_maxmin_solution(const MaxminSolution& sol, const std::filesystem::path& file);

void save_fpl_result(const FplResult& result, const FplConfig& cfg,
                     const WorstCaseResult& worst, const std::filesystem::path& file);
void save_fpl_trace(const FplTrace& trace, const std::filesystem::path& file); // JSON lines

ExperimentConfig load_experiment_config(const std::filesystem::path& file);
void save_experiment_report(const ExperimentReport& report, const std::filesystem::path& file);

struct EvalOutcome {
    double value = 0.0;
    Eigen::VectorXd worst_weight;
    FeatureExpectation mu;
};
void save_eval_outcome(const EvalOutcome& outcome, const std::filesystem::path& file);

// Provenance sidecar written next to every CLI output. Wall time is the only
// nondeterministic field.
struct RunManifest {
    std::vector<std::string> command;
    std::string version;
    std::vector<std::string> outputs;
    double wall_time_ms = 0.0;
};
void save_manifest(const RunManifest& manifest, const std::filesystem::path& file);

} // namespace maxmin
