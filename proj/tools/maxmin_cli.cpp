// Command line front end: exact and iterative maxmin solvers, the gridworld
// experiment, and policy evaluation. Every output file gets a manifest
// sidecar; wall time lives only there.

#include "maxmin/errors.hpp"
#include "maxmin/fpl.hpp"
#include "maxmin/gridworld.hpp"
#include "maxmin/json_io.hpp"
#include "maxmin/maxmin.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

using Clock = std::chrono::steady_clock;

struct ManifestWriter {
    std::vector<std::string> command;
    Clock::time_point started = Clock::now();

    void write(const std::string& primary, std::vector<std::string> outputs) const {
        maxmin::RunManifest m;
        m.command = command;
        m.outputs = std::move(outputs);
        m.wall_time_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - started).count();
        maxmin::save_manifest(m, primary + ".manifest.json");
    }
};

maxmin::InnerMethod parse_method(const std::string& name) {
    if (name == "accpm") return maxmin::InnerMethod::accpm;
    if (name == "ellipsoid") return maxmin::InnerMethod::ellipsoid;
    throw maxmin::ValidationError("unknown inner method '" + name + "'");
}

int run_solve_exact(const std::string& mdp_file, const std::string& reward_file,
                    const std::string& out, double eps, const std::string& method,
                    const ManifestWriter& manifest) {
    maxmin::Mdp mdp = maxmin::load_mdp(mdp_file);
    maxmin::RewardSpec spec = maxmin::load_reward_spec(reward_file);
    maxmin::MaxminSolution sol =
        maxmin::solve_maxmin_exact(mdp, spec, eps, parse_method(method));
    maxmin::save_maxmin_solution(sol, out);
    manifest.write(out, {out});
    std::cout << "value " << sol.value << "\n"
              << "recovered_worst_case " << sol.recovered_worst_case << "\n"
              << "output " << out << "\n";
    return 0;
}

int run_solve_fpl(const std::string& mdp_file, const std::string& reward_file,
                  const std::string& out, const std::string& trace_file,
                  maxmin::FplConfig cfg, double approx_eta, const std::string& method,
                  const ManifestWriter& manifest) {
    cfg.method = parse_method(method);
    cfg.record_trace = !trace_file.empty();
    maxmin::Mdp mdp = maxmin::load_mdp(mdp_file);
    maxmin::RewardSpec spec = maxmin::load_reward_spec(reward_file);

    maxmin::FplResult result;
    if (approx_eta > 0.0) {
        result = maxmin::fpl_solve_approx(mdp, spec, cfg, approx_eta,
                                          maxmin::make_second_best_solver());
    } else {
        result = maxmin::fpl_solve(mdp, spec, cfg);
    }
    maxmin::WorstCaseResult worst = maxmin::evaluate_worst_case(mdp, spec, result.mixture);

    maxmin::save_fpl_result(result, cfg, worst, out);
    std::vector<std::string> outputs = {out};
    if (!trace_file.empty()) {
        maxmin::save_fpl_trace(result.trace, trace_file);
        outputs.push_back(trace_file);
    }
    manifest.write(out, outputs);
    std::cout << "worst_case " << worst.value << "\n"
              << "regret_bound " << result.regret_bound_value << "\n"
              << "mixture_components " << result.mixture.components.size() << "\n"
              << "output " << out << "\n";
    return 0;
}

int run_gridworld(const std::string& config_file, const std::string& out,
                  const std::vector<std::uint64_t>& seeds, int jobs, bool paper_scale,
                  double slip, bool slip_set, const ManifestWriter& manifest) {
    maxmin::ExperimentConfig cfg;
    if (!config_file.empty()) cfg = maxmin::load_experiment_config(config_file);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (jobs > 0) cfg.jobs = jobs;
    if (slip_set) cfg.slip = slip;
    if (paper_scale) {
        cfg.test_size = 50;
        cfg.fpl_T = 5000;
    }
    maxmin::ExperimentReport report = maxmin::run_experiment(cfg);
    maxmin::save_experiment_report(report, out);
    manifest.write(out, {out});
    std::cout << "seeds " << report.outcomes.size() << "\n"
              << "mean_maxmin_last_terrain " << report.aggregate.mean_maxmin_last_terrain << "\n"
              << "mean_baseline_last_terrain " << report.aggregate.mean_baseline_last_terrain
              << "\n"
              << "mean_maxmin_worst_case " << report.aggregate.mean_maxmin_worst_case << "\n"
              << "mean_baseline_worst_case " << report.aggregate.mean_baseline_worst_case << "\n"
              << "output " << out << "\n";
    return 0;
}

int run_eval(const std::string& mdp_file, const std::string& reward_file,
             const std::string& policy_file, const std::string& out, double eps,
             const ManifestWriter& manifest) {
    maxmin::Mdp mdp = maxmin::load_mdp(mdp_file);
    maxmin::RewardSpec spec = maxmin::load_reward_spec(reward_file);
    maxmin::MixedPolicy policy = maxmin::load_policy(policy_file);
    maxmin::WorstCaseResult worst = maxmin::evaluate_worst_case(mdp, spec, policy, eps);
    maxmin::EvalOutcome outcome;
    outcome.value = worst.value;
    outcome.worst_weight = worst.worst_weight;
    outcome.mu = maxmin::mixed_feature_expectation(mdp, policy);
    maxmin::save_eval_outcome(outcome, out);
    manifest.write(out, {out});
    std::cout << "worst_case " << worst.value << "\n"
              << "output " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"maxmin-robust policies for tabular MDPs with uncertain reward weights"};
    app.require_subcommand(1);

    ManifestWriter manifest;
    for (int i = 0; i < argc; ++i) manifest.command.emplace_back(argv[i]);

    std::string mdp_file, reward_file, policy_file, config_file, trace_file, method = "accpm";
    std::string out;
    double eps = 1e-5;

    auto* exact = app.add_subcommand("solve-exact", "cutting-plane maxmin solve");
    exact->add_option("--mdp", mdp_file, "task MDP json")->required();
    exact->add_option("--reward", reward_file, "reward set json")->required();
    exact->add_option("--out", out, "solution output path")->capture_default_str();
    exact->add_option("--eps", eps, "additive accuracy")->capture_default_str();
    exact->add_option("--method", method, "inner minimization engine: accpm|ellipsoid")
        ->capture_default_str();

    maxmin::FplConfig fpl_cfg;
    double approx_eta = 0.0;
    auto* fpl = app.add_subcommand("solve-fpl", "iterative maxmin via perturbed best responses");
    fpl->add_option("--mdp", mdp_file, "task MDP json")->required();
    fpl->add_option("--reward", reward_file, "reward set json")->required();
    fpl->add_option("--out", out, "result output path")->capture_default_str();
    fpl->add_option("--T", fpl_cfg.T, "rounds")->capture_default_str();
    fpl->add_option("--seed", fpl_cfg.seed, "perturbation seed")->capture_default_str();
    fpl->add_option("--delta", fpl_cfg.delta, "perturbation density; 0 = 1/(k sqrt(T))")
        ->capture_default_str();
    fpl->add_option("--tail", fpl_cfg.tail_window, "tail window; 0 = all rounds")
        ->capture_default_str();
    fpl->add_option("--eps", fpl_cfg.inner_eps, "inner minimization accuracy")
        ->capture_default_str();
    fpl->add_option("--xi", fpl_cfg.xi, "confidence level for the quoted bound")
        ->capture_default_str();
    fpl->add_option("--method", method, "inner minimization engine: accpm|ellipsoid")
        ->capture_default_str();
    fpl->add_option("--trace", trace_file, "per-round trace output (json lines)");
    fpl->add_option("--approx-eta", approx_eta,
                    "run the approximate path with this suboptimality budget c")
        ->capture_default_str();
    fpl->add_option("--step-divisor", fpl_cfg.step_divisor,
                    "approximate path planner input divisor; 0 = 2T")
        ->capture_default_str();

    std::vector<std::uint64_t> seeds;
    int jobs = 0;
    bool paper_scale = false;
    double slip = 0.0;
    auto* grid = app.add_subcommand("gridworld", "demonstration-to-test transfer experiment");
    grid->add_option("--config", config_file, "experiment config json");
    grid->add_option("--out", out, "report output path")->capture_default_str();
    grid->add_option("--seed", seeds, "seed (repeatable; overrides config)");
    grid->add_option("--jobs", jobs, "parallel seeds");
    grid->add_flag("--paper-scale", paper_scale, "50x50 test grid, 5000 rounds");
    auto* slip_opt = grid->add_option("--slip", slip, "slip probability override");

    auto* eval = app.add_subcommand("eval", "worst-case value of a policy file");
    eval->add_option("--mdp", mdp_file, "task MDP json")->required();
    eval->add_option("--reward", reward_file, "reward set json")->required();
    eval->add_option("--policy", policy_file, "policy json")->required();
    eval->add_option("--out", out, "evaluation output path")->capture_default_str();
    eval->add_option("--eps", eps, "inner minimization accuracy")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (exact->parsed()) {
            if (out.empty()) out = "maxmin_solution.json";
            return run_solve_exact(mdp_file, reward_file, out, eps, method, manifest);
        }
        if (fpl->parsed()) {
            if (out.empty()) out = "fpl_result.json";
            return run_solve_fpl(mdp_file, reward_file, out, trace_file, fpl_cfg, approx_eta,
                                 method, manifest);
        }
        if (grid->parsed()) {
            if (out.empty()) out = "gridworld_report.json";
            return run_gridworld(config_file, out, seeds, jobs, paper_scale, slip,
                                 slip_opt->count() > 0, manifest);
        }
        if (eval->parsed()) {
            if (out.empty()) out = "eval_result.json";
            return run_eval(mdp_file, reward_file, policy_file, out, eps, manifest);
        }
    } catch (const maxmin::EmptyPolytopeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const maxmin::SolverBreakdownError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const maxmin::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
