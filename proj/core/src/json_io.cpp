#include "maxmin/json_io.hpp"

#include "maxmin/errors.hpp"
#include "maxmin/planning.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace maxmin {

namespace {

using nlohmann::json;

constexpr char kVersion[] = "1.0.0";

[[noreturn]] void fail(const std::filesystem::path& file, const std::string& what) {
    throw ValidationError(file.string() + ": " + what);
}

json parse_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) fail(file, "cannot open file");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(file, std::string("parse error: ") + e.what());
    }
}

const json& require(const json& j, const char* key, const std::filesystem::path& file) {
    auto it = j.find(key);
    if (it == j.end()) fail(file, std::string("missing field '") + key + "'");
    return *it;
}

Eigen::VectorXd to_vector(const json& j, const std::filesystem::path& file,
                          const std::string& what) {
    if (!j.is_array()) fail(file, what + " must be an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) fail(file, what + " must hold numbers");
        v(static_cast<int>(i)) = j[i].get<double>();
    }
    return v;
}

json from_vector(const Eigen::VectorXd& v) {
    json a = json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json from_matrix(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows(); ++r) rows.push_back(from_vector(m.row(r).transpose()));
    return rows;
}

void atomic_write(const std::filesystem::path& file, const std::string& text) {
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(file, "cannot open file for writing");
        out << text;
        if (!out) fail(file, "write failed");
    }
    std::filesystem::rename(tmp, file);
}

void write_json(const json& j, const std::filesystem::path& file) {
    atomic_write(file, j.dump(2) + "\n");
}

json policy_to_json(const Policy& p) {
    json j;
    if (p.is_deterministic()) {
        j["type"] = "deterministic";
        j["n_actions"] = p.probs.cols();
        j["actions"] = p.actions();
    } else {
        j["type"] = "stochastic";
        j["probs"] = from_matrix(p.probs);
    }
    return j;
}

Policy policy_from_json(const json& j, const std::filesystem::path& file) {
    const std::string type = require(j, "type", file).get<std::string>();
    if (type == "deterministic") {
        const json& acts = require(j, "actions", file);
        const int n_actions = require(j, "n_actions", file).get<int>();
        std::vector<int> actions;
        for (const auto& a : acts) actions.push_back(a.get<int>());
        return Policy::from_actions(actions, n_actions);
    }
    if (type == "stochastic") {
        const json& probs = require(j, "probs", file);
        if (!probs.is_array() || probs.empty()) fail(file, "probs must be a nonempty array");
        Policy p;
        p.probs.resize(static_cast<int>(probs.size()), static_cast<int>(probs[0].size()));
        for (std::size_t s = 0; s < probs.size(); ++s) {
            Eigen::VectorXd row = to_vector(probs[s], file, "probs row");
            if (row.size() != p.probs.cols()) fail(file, "ragged probs rows");
            p.probs.row(static_cast<int>(s)) = row.transpose();
        }
        return p;
    }
    fail(file, "unknown policy type '" + type + "'");
}

json mixed_to_json(const MixedPolicy& mix) {
    if (mix.components.size() == 1) return policy_to_json(mix.components.front());
    json j;
    j["type"] = "mixed";
    j["weights"] = mix.weights;
    json comps = json::array();
    for (const auto& p : mix.components) comps.push_back(policy_to_json(p));
    j["components"] = comps;
    return j;
}

json halfspace_to_json(const Halfspace& h) {
    json j;
    j["normal"] = from_vector(h.normal);
    j["offset"] = h.offset;
    return j;
}

json stats_to_json(const MaxminStats& s) {
    json j;
    j["outer_iterations"] = s.outer_iterations;
    j["outer_oracle_calls"] = s.outer_oracle_calls;
    j["feature_lp_calls"] = s.feature_lp_calls;
    j["inner_minimizations"] = s.inner_minimizations;
    j["pool_cut_hits"] = s.pool_cut_hits;
    j["expert_solves"] = s.expert_solves;
    return j;
}

json grid_to_json(const GridSpec& g) {
    json j;
    j["width"] = g.width;
    j["height"] = g.height;
    j["n_terrain"] = g.n_terrain;
    j["terrain"] = g.terrain;
    j["goal_cell"] = g.goal_cell;
    j["slip"] = g.slip;
    j["gamma"] = g.gamma;
    j["start_cells"] = g.start_cells;
    return j;
}

json grid_stats_to_json(const GridPolicyStats& s) {
    json j;
    j["terrain_fraction"] = s.terrain_fraction;
    j["worst_case"] = s.worst_case;
    j["value_actual"] = s.value_actual;
    j["render"] = s.render;
    return j;
}

Mdp mdp_from_json(const json& j, const std::filesystem::path& file) {
    Mdp mdp;
    mdp.n_states = require(j, "n_states", file).get<int>();
    mdp.n_actions = require(j, "n_actions", file).get<int>();
    mdp.gamma = require(j, "gamma", file).get<double>();
    if (mdp.n_states < 1 || mdp.n_actions < 1) fail(file, "state and action counts must be positive");
    mdp.initial_dist = to_vector(require(j, "initial_dist", file), file, "initial_dist");

    const json& trans = require(j, "transitions", file);
    if (static_cast<int>(trans.size()) != mdp.n_states)
        fail(file, "transitions must have one entry per state");
    mdp.transitions.assign(static_cast<std::size_t>(mdp.n_actions),
                           Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_states));
    for (int s = 0; s < mdp.n_states; ++s) {
        const json& per_action = trans[static_cast<std::size_t>(s)];
        if (static_cast<int>(per_action.size()) != mdp.n_actions)
            fail(file, "transitions[" + std::to_string(s) + "] must have one row per action");
        for (int a = 0; a < mdp.n_actions; ++a) {
            Eigen::VectorXd row = to_vector(per_action[static_cast<std::size_t>(a)], file,
                                            "transitions[" + std::to_string(s) + "][" +
                                                std::to_string(a) + "]");
            if (row.size() != mdp.n_states)
                fail(file, "transitions[" + std::to_string(s) + "][" + std::to_string(a) +
                               "] must list one probability per successor state");
            mdp.transitions[static_cast<std::size_t>(a)].row(s) = row.transpose();
        }
    }

    const json& feats = require(j, "features", file);
    if (static_cast<int>(feats.size()) != mdp.n_states)
        fail(file, "features must have one row per state");
    Eigen::VectorXd first = to_vector(feats[0], file, "features[0]");
    mdp.features.resize(mdp.n_states, first.size());
    mdp.features.row(0) = first.transpose();
    for (int s = 1; s < mdp.n_states; ++s) {
        Eigen::VectorXd row =
            to_vector(feats[static_cast<std::size_t>(s)], file, "features[" + std::to_string(s) + "]");
        if (row.size() != mdp.features.cols()) fail(file, "ragged feature rows");
        mdp.features.row(s) = row.transpose();
    }

    try {
        mdp.validate();
    } catch (const ValidationError& e) {
        fail(file, e.what());
    }
    return mdp;
}

} // namespace

Mdp load_mdp(const std::filesystem::path& file) {
    return mdp_from_json(parse_file(file), file);
}

void save_mdp(const Mdp& mdp, const std::filesystem::path& file) {
    json j;
    j["n_states"] = mdp.n_states;
    j["n_actions"] = mdp.n_actions;
    j["gamma"] = mdp.gamma;
    j["initial_dist"] = from_vector(mdp.initial_dist);
    json trans = json::array();
    for (int s = 0; s < mdp.n_states; ++s) {
        json per_action = json::array();
        for (int a = 0; a < mdp.n_actions; ++a)
            per_action.push_back(
                from_vector(mdp.transitions[static_cast<std::size_t>(a)].row(s).transpose()));
        trans.push_back(per_action);
    }
    j["transitions"] = trans;
    j["features"] = from_matrix(mdp.features);
    write_json(j, file);
}

RewardSpec load_reward_spec(const std::filesystem::path& file) {
    json j = parse_file(file);
    RewardSpec spec;
    spec.k = require(j, "k", file).get<int>();

    const std::string type = require(j, "type", file).get<std::string>();
    if (type == "explicit") spec.kind = RewardSpecKind::explicit_only;
    else if (type == "expert_additive") spec.kind = RewardSpecKind::expert_additive;
    else if (type == "expert_multiplicative") spec.kind = RewardSpecKind::expert_multiplicative;
    else if (type == "multi_expert") spec.kind = RewardSpecKind::multi_expert;
    else fail(file, "unknown reward spec type '" + type + "'");

    if (j.contains("halfspaces")) {
        for (const auto& h : j["halfspaces"]) {
            Halfspace hs;
            hs.normal = to_vector(require(h, "normal", file), file, "halfspace normal");
            hs.offset = require(h, "offset", file).get<double>();
            spec.halfspaces.push_back(std::move(hs));
        }
    }
    if (j.contains("pinned")) {
        for (const auto& p : j["pinned"])
            spec.pinned.emplace_back(require(p, "index", file).get<int>(),
                                     require(p, "value", file).get<double>());
    }
    if (j.contains("experts")) {
        for (const auto& e : j["experts"]) {
            ExpertTerm term;
            const json& task = require(e, "task", file);
            if (task.is_string()) {
                term.task = load_mdp(file.parent_path() / task.get<std::string>());
            } else if (task.is_object()) {
                term.task = mdp_from_json(task, file);
            } else {
                fail(file, "expert task must be a path string or an inline object");
            }
            term.epsilon = require(e, "epsilon", file).get<double>();
            if (e.contains("mu_e")) {
                term.mu_e = to_vector(e["mu_e"], file, "mu_e");
            } else if (e.contains("policy_file")) {
                MixedPolicy pol =
                    load_policy(file.parent_path() / e["policy_file"].get<std::string>());
                term.mu_e = mixed_feature_expectation(term.task, pol);
            } else {
                fail(file, "expert needs either mu_e or policy_file");
            }
            spec.experts.push_back(std::move(term));
        }
    }
    try {
        spec.validate();
    } catch (const ValidationError& e) {
        fail(file, e.what());
    }
    return spec;
}

void save_reward_spec(const RewardSpec& spec, const std::filesystem::path& file) {
    json j;
    j["k"] = spec.k;
    switch (spec.kind) {
    case RewardSpecKind::explicit_only: j["type"] = "explicit"; break;
    case RewardSpecKind::expert_additive: j["type"] = "expert_additive"; break;
    case RewardSpecKind::expert_multiplicative: j["type"] = "expert_multiplicative"; break;
    case RewardSpecKind::multi_expert: j["type"] = "multi_expert"; break;
    }
    if (!spec.halfspaces.empty()) {
        json hs = json::array();
        for (const auto& h : spec.halfspaces) hs.push_back(halfspace_to_json(h));
        j["halfspaces"] = hs;
    }
    if (!spec.pinned.empty()) {
        json ps = json::array();
        for (const auto& [idx, val] : spec.pinned) {
            json p;
            p["index"] = idx;
            p["value"] = val;
            ps.push_back(p);
        }
        j["pinned"] = ps;
    }
    if (!spec.experts.empty()) {
        json es = json::array();
        for (std::size_t i = 0; i < spec.experts.size(); ++i) {
            const auto& term = spec.experts[i];
            const std::string task_name =
                file.stem().string() + "_task" + std::to_string(i) + ".json";
            save_mdp(term.task, file.parent_path() / task_name);
            json e;
            e["task"] = task_name;
            e["mu_e"] = from_vector(term.mu_e);
            e["epsilon"] = term.epsilon;
            es.push_back(e);
        }
        j["experts"] = es;
    }
    write_json(j, file);
}

MixedPolicy load_policy(const std::filesystem::path& file) {
    json j = parse_file(file);
    const std::string type = require(j, "type", file).get<std::string>();
    MixedPolicy mix;
    if (type == "mixed") {
        const json& weights = require(j, "weights", file);
        const json& comps = require(j, "components", file);
        if (weights.size() != comps.size() || weights.empty())
            fail(file, "mixed policy needs matching nonempty weights and components");
        for (std::size_t i = 0; i < comps.size(); ++i) {
            mix.weights.push_back(weights[i].get<double>());
            mix.components.push_back(policy_from_json(comps[i], file));
        }
    } else {
        mix = MixedPolicy::pure(policy_from_json(j, file));
    }
    try {
        mix.validate();
    } catch (const ValidationError& e) {
        fail(file, e.what());
    }
    return mix;
}

void save_policy(const MixedPolicy& policy, const std::filesystem::path& file) {
    write_json(mixed_to_json(policy), file);
}

void save_maxmin_solution(const MaxminSolution& sol, const std::filesystem::path& file) {
    json j;
    j["value"] = sol.value;
    j["mu_star"] = from_vector(sol.mu_star);
    j["worst_weight"] = from_vector(sol.worst_weight);
    j["recovered_worst_case"] = sol.recovered_worst_case;
    j["policy"] = policy_to_json(sol.policy);
    j["stats"] = stats_to_json(sol.stats);
    write_json(j, file);
}

void save_fpl_result(const FplResult& result, const FplConfig& cfg,
                     const WorstCaseResult& worst, const std::filesystem::path& file) {
    json j;
    j["T"] = cfg.T;
    j["delta"] = cfg.delta;
    j["seed"] = cfg.seed;
    j["tail_window"] = cfg.tail_window;
    j["method"] = cfg.method == InnerMethod::accpm ? "accpm" : "ellipsoid";
    j["inner_eps"] = cfg.inner_eps;
    j["xi"] = cfg.xi;
    j["mixture"] = mixed_to_json(result.mixture);
    j["mixture_mu"] = from_vector(result.mixture_mu);
    j["regret_bound"] = result.regret_bound_value;
    j["worst_case"] = worst.value;
    j["worst_weight"] = from_vector(worst.worst_weight);
    j["inner_oracle_calls"] = result.inner_oracle_calls;
    j["planner_solves"] = result.planner_solves;
    write_json(j, file);
}

void save_fpl_trace(const FplTrace& trace, const std::filesystem::path& file) {
    std::string text;
    for (const auto& it : trace.iterates) {
        json j;
        j["t"] = it.t;
        j["p"] = from_vector(it.p);
        j["q"] = from_vector(it.q);
        j["mu"] = from_vector(it.mu);
        j["w"] = from_vector(it.w);
        j["policy"] = it.policy;
        j["inner_value"] = it.inner_value;
        text += j.dump() + "\n";
    }
    atomic_write(file, text);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
    json j = parse_file(file);
    ExperimentConfig cfg;
    auto opt_int = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = j[key].get<int>();
    };
    auto opt_double = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = j[key].get<double>();
    };
    opt_int("demo_size", cfg.demo_size);
    opt_int("test_size", cfg.test_size);
    opt_int("demo_terrain", cfg.demo_terrain);
    opt_int("n_terrain", cfg.n_terrain);
    opt_double("gamma", cfg.gamma);
    opt_double("slip", cfg.slip);
    opt_double("reward_unit", cfg.reward_unit);
    opt_double("epsilon", cfg.epsilon);
    opt_double("terrain_lo", cfg.terrain_lo);
    opt_double("terrain_hi", cfg.terrain_hi);
    opt_double("baseline_lo", cfg.baseline_lo);
    opt_double("baseline_hi", cfg.baseline_hi);
    opt_int("fpl_T", cfg.fpl_T);
    opt_int("tail_window", cfg.tail_window);
    opt_double("inner_eps", cfg.inner_eps);
    opt_int("jobs", cfg.jobs);
    if (j.contains("seeds")) {
        cfg.seeds.clear();
        for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
    }
    try {
        cfg.validate();
    } catch (const ValidationError& e) {
        fail(file, e.what());
    }
    return cfg;
}

namespace {

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["demo_size"] = cfg.demo_size;
    j["test_size"] = cfg.test_size;
    j["demo_terrain"] = cfg.demo_terrain;
    j["n_terrain"] = cfg.n_terrain;
    j["gamma"] = cfg.gamma;
    j["slip"] = cfg.slip;
    j["reward_unit"] = cfg.reward_unit;
    j["epsilon"] = cfg.epsilon;
    j["terrain_lo"] = cfg.terrain_lo;
    j["terrain_hi"] = cfg.terrain_hi;
    j["baseline_lo"] = cfg.baseline_lo;
    j["baseline_hi"] = cfg.baseline_hi;
    j["fpl_T"] = cfg.fpl_T;
    j["tail_window"] = cfg.tail_window;
    j["inner_eps"] = cfg.inner_eps;
    j["seeds"] = cfg.seeds;
    j["jobs"] = cfg.jobs;
    return j;
}

} // namespace

void save_experiment_report(const ExperimentReport& report, const std::filesystem::path& file) {
    json j;
    j["config"] = config_to_json(report.config);
    json outs = json::array();
    for (const auto& o : report.outcomes) {
        json s;
        s["seed"] = o.seed;
        s["demo_grid"] = grid_to_json(o.demo_grid);
        s["test_grid"] = grid_to_json(o.test_grid);
        s["true_weights"] = from_vector(o.true_weights);
        s["actual_weights"] = from_vector(o.actual_weights);
        s["mu_e"] = from_vector(o.mu_e);
        s["regret_bound"] = o.regret_bound_value;
        s["fpl_distinct_policies"] = o.fpl_distinct_policies;
        s["expert"] = grid_stats_to_json(o.expert);
        s["maxmin"] = grid_stats_to_json(o.maxmin);
        s["baseline"] = grid_stats_to_json(o.baseline);
        outs.push_back(s);
    }
    j["outcomes"] = outs;
    json agg;
    agg["mean_maxmin_last_terrain"] = report.aggregate.mean_maxmin_last_terrain;
    agg["mean_baseline_last_terrain"] = report.aggregate.mean_baseline_last_terrain;
    agg["mean_maxmin_worst_case"] = report.aggregate.mean_maxmin_worst_case;
    agg["mean_baseline_worst_case"] = report.aggregate.mean_baseline_worst_case;
    j["aggregate"] = agg;
    write_json(j, file);
}

void save_eval_outcome(const EvalOutcome& outcome, const std::filesystem::path& file) {
    json j;
    j["value"] = outcome.value;
    j["worst_weight"] = from_vector(outcome.worst_weight);
    j["mu"] = from_vector(outcome.mu);
    write_json(j, file);
}

void save_manifest(const RunManifest& manifest, const std::filesystem::path& file) {
    json j;
    j["command"] = manifest.command;
    j["version"] = manifest.version.empty() ? kVersion : manifest.version;
    j["outputs"] = manifest.outputs;
    j["wall_time_ms"] = manifest.wall_time_ms;
    write_json(j, file);
}

} // namespace maxmin
