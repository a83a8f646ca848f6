#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "rlstpa/analysis.hpp"
#include "rlstpa/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rlstpa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAnalysis = 1;  // validation or analysis failure
constexpr int kExitConfig = 2;    // I/O or config error

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunConfig {
    analysis::ScenarioSpec scenario;
    std::string policy_selector = "baseline";
    std::string model_path;  // empty = built-in drone model
    std::vector<perturb::GridAxis> axes;
    perturb::PerturbationSpec base_spec;
    int replicates = 0;  // fixed-replicates mode when > 0
    int pilot = 4;
    int budget = 0;
    int min_replicates = 5;
    std::uint64_t base_seed = 1;
    double threshold = 0.95;
    std::string out_dir = ".";
    std::string config_hash;
};

perturb::PerturbationSpec parse_spec(const json& j) {
    perturb::PerturbationSpec s;
    if (j.contains("sensor_noise_sigma")) s.sensor_noise_sigma = j["sensor_noise_sigma"];
    if (j.contains("occlusion_fraction")) s.occlusion_fraction = j["occlusion_fraction"];
    if (j.contains("sensor_delay_frames")) s.sensor_delay_frames = j["sensor_delay_frames"];
    if (j.contains("actuator_lag_steps")) s.actuator_lag_steps = j["actuator_lag_steps"];
    if (j.contains("actuator_noise_sigma")) s.actuator_noise_sigma = j["actuator_noise_sigma"];
    if (j.contains("wind_speed")) s.wind_speed = j["wind_speed"];
    if (j.contains("wind_direction"))
        s.wind_direction = {j["wind_direction"].at(0), j["wind_direction"].at(1)};
    if (j.contains("fog_density")) s.fog_density = j["fog_density"];
    if (j.contains("dynamic_obstacle_speed"))
        s.dynamic_obstacle_speed = j["dynamic_obstacle_speed"];
    const auto violations = perturb::validate_spec(s);
    if (!violations.empty())
        throw std::runtime_error("perturbation config: " + violations.front());
    return s;
}

RunConfig load_run_config(const std::string& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }

    RunConfig cfg;
    cfg.config_hash = report::fnv1a_hex(text);
    if (j.contains("scenario")) {
        if (j["scenario"].is_string())
            cfg.scenario = analysis::load_scenario_file(j["scenario"]);
        else
            cfg.scenario = analysis::load_scenario(j["scenario"].dump());
    } else if (j.contains("subtask")) {
        analysis::ScenarioParams p;
        if (j.contains("distance")) p.distance = j["distance"];
        if (j.contains("tree_count")) p.tree_count = j["tree_count"];
        cfg.scenario =
            analysis::make_scenario(analysis::subtask_from_string(j["subtask"]), p);
    } else {
        cfg.scenario = analysis::make_scenario(analysis::SubtaskKind::ObstacleAvoidance);
    }
    if (j.contains("policy")) cfg.policy_selector = j["policy"];
    if (j.contains("model")) cfg.model_path = j["model"];
    if (j.contains("perturbation")) cfg.base_spec = parse_spec(j["perturbation"]);
    if (j.contains("axes")) {
        for (const auto& aj : j["axes"]) {
            perturb::GridAxis axis;
            axis.name = aj.at("name");
            for (double v : aj.at("levels")) axis.levels.push_back(v);
            cfg.axes.push_back(std::move(axis));
        }
    }
    if (j.contains("replicates")) cfg.replicates = j["replicates"];
    if (j.contains("pilot")) cfg.pilot = j["pilot"];
    if (j.contains("budget")) cfg.budget = j["budget"];
    if (j.contains("min_replicates")) cfg.min_replicates = j["min_replicates"];
    if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("threshold")) cfg.threshold = j["threshold"];
    if (j.contains("out")) cfg.out_dir = j["out"];
    if (cfg.threshold <= 0.0 || cfg.threshold > 1.0)
        throw std::runtime_error("config: threshold must be in (0, 1]");
    return cfg;
}

stpa::StpaModel load_model_or_default(const std::string& path) {
    return path.empty() ? stpa::default_drone_model() : stpa::load_model_file(path);
}

int cmd_validate(const std::string& model_path) {
    stpa::StpaModel model;
    try {
        model = stpa::load_model_file(model_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    const auto violations = stpa::validate_model(model);
    for (const auto& v : violations) std::cout << v.message << "\n";
    if (violations.empty()) {
        std::cout << "model valid: " << model.losses.size() << " losses, "
                  << model.hazards.size() << " hazards, " << model.constraints.size()
                  << " constraints, " << model.uca_definitions.size() << " UCAs\n";
        return kExitOk;
    }
    return kExitAnalysis;
}

int cmd_trace(const std::string& model_path, const std::string& hazard_id) {
    stpa::StpaModel model;
    try {
        model = stpa::load_model_file(model_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const auto rec = stpa::trace(model, hazard_id);
        std::cout << rec.hazard_id << "\n  losses:";
        for (const auto& id : rec.upstream_losses) std::cout << ' ' << id;
        std::cout << "\n  constraints:";
        for (const auto& id : rec.downstream_constraints) std::cout << ' ' << id;
        std::cout << "\n  ucas:";
        for (const auto& id : rec.downstream_ucas) std::cout << ' ' << id;
        std::cout << "\n";
        return kExitOk;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAnalysis;
    }
}

int cmd_rollout(const RunConfig& cfg, bool plots) {
    const auto model = load_model_or_default(cfg.model_path);
    auto policy = policy::make_policy(cfg.policy_selector, cfg.scenario.lidar,
                                      cfg.scenario.params);
    auto [traj, result] =
        analysis::run_episode(cfg.scenario, *policy, cfg.base_spec, cfg.base_seed, model);

    fs::create_directories(cfg.out_dir);
    const report::Provenance prov{cfg.config_hash, cfg.base_seed};
    report::write_file(cfg.out_dir + "/trajectory.jsonl", report::trajectory_jsonl(traj));
    report::write_file(cfg.out_dir + "/summary.txt",
                       report::episode_summary(result, prov));
    if (plots)
        report::write_file(cfg.out_dir + "/trajectory.svg",
                           report::trajectory_svg(traj, cfg.scenario));
    std::cout << report::episode_summary(result, prov);
    std::cout << "seed for reproduction: " << cfg.base_seed << "\n";
    return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, int jobs, bool plots, bool logs) {
    const auto model = load_model_or_default(cfg.model_path);
    auto policy = policy::make_policy(cfg.policy_selector, cfg.scenario.lidar,
                                      cfg.scenario.params);
    const auto grid = perturb::build_grid(cfg.axes, cfg.base_spec);

    perturb::ReplicatePlan plan;
    if (cfg.replicates > 0) {
        plan.counts.assign(grid.size(), cfg.replicates);
        plan.budget = cfg.replicates * static_cast<int>(grid.size());
    } else {
        // Pilot pass, then variance-proportional allocation of the budget.
        std::vector<perturb::PilotResult> pilot(grid.size());
        perturb::ReplicatePlan pilot_plan;
        pilot_plan.counts.assign(grid.size(), cfg.pilot);
        pilot_plan.budget = cfg.pilot * static_cast<int>(grid.size());
        analysis::SweepOptions popts;
        popts.jobs = jobs;
        const auto pilot_sweep =
            analysis::run_sweep(cfg.scenario, *policy, cfg.axes, grid, pilot_plan,
                                mix_seed(cfg.base_seed, 0x70696c6f74ull), model, popts);
        for (std::size_t c = 0; c < grid.size(); ++c)
            pilot[c] = {pilot_sweep.cells[c].successes, cfg.pilot};
        plan = perturb::allocate_replicates(pilot, cfg.budget, cfg.min_replicates);
    }

    analysis::SweepOptions opts;
    opts.jobs = jobs;
    opts.keep_trajectories = logs;
    const auto sweep = analysis::run_sweep(cfg.scenario, *policy, cfg.axes, grid, plan,
                                           cfg.base_seed, model, opts);

    fs::create_directories(cfg.out_dir);
    const report::Provenance prov{cfg.config_hash, cfg.base_seed};
    const std::string csv = report::sweep_csv(sweep, prov);
    report::write_file(cfg.out_dir + "/sweep.csv", csv);
    std::cout << csv;

    if (logs) {
        std::ostringstream all;
        for (const auto& log : sweep.trajectory_logs) all << log;
        report::write_file(cfg.out_dir + "/episodes.jsonl", all.str());
    }
    if (plots) {
        for (std::size_t c = 0; c < grid.size(); ++c) {
            auto p = policy->clone();
            auto [traj, result] = analysis::run_episode(
                cfg.scenario, *p, grid[c].spec, episode_seed(cfg.base_seed, c, 0),
                model);
            report::write_file(cfg.out_dir + "/cell" + std::to_string(c) + ".svg",
                               report::trajectory_svg(traj, cfg.scenario));
        }
    }
    return kExitOk;
}

int cmd_envelope(const std::string& csv_path, double threshold,
                 const std::string& out_path) {
    const std::string text = read_file(csv_path);
    const auto sweep = report::parse_sweep_csv(text);
    const auto env = analysis::derive_envelope(sweep, threshold);
    const report::Provenance prov{report::fnv1a_hex(text), sweep.base_seed};
    const std::string doc = report::envelope_document(env, sweep, prov);
    if (!out_path.empty()) report::write_file(out_path, doc);
    std::cout << doc;
    return kExitOk;
}

int cmd_plan(const std::string& csv_path, const std::string& model_path,
             double threshold, const std::string& out_path) {
    const std::string text = read_file(csv_path);
    const auto sweep = report::parse_sweep_csv(text);
    const auto model = load_model_or_default(model_path);
    const auto env = analysis::derive_envelope(sweep, threshold);
    const auto plan = analysis::recommend_countermeasures(sweep, env, model);
    const report::Provenance prov{report::fnv1a_hex(text), sweep.base_seed};
    const std::string doc = report::plan_document(plan, env, model, prov);
    if (!out_path.empty()) report::write_file(out_path, doc);
    std::cout << doc;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rlstpa: simulator-backed hazard analysis for black-box control policies"};
    app.require_subcommand(1);

    std::string model_path, hazard_id, config_path, csv_path, out_path;
    std::string policy_override, seed_override;
    double threshold = 0.95;
    int jobs = 0;
    bool plots = false, logs = false;

    auto* validate = app.add_subcommand("validate", "check an STPA model file");
    validate->add_option("model", model_path, "model JSON file")->required();

    auto* trace = app.add_subcommand("trace", "trace a hazard through the model");
    trace->add_option("model", model_path, "model JSON file")->required();
    trace->add_option("hazard", hazard_id, "hazard id, e.g. H-1")->required();

    auto* rollout = app.add_subcommand("rollout", "run a single episode");
    rollout->add_option("--config", config_path, "run config JSON")->required();
    rollout->add_option("--policy", policy_override, "baseline | mlp:<weights>");
    rollout->add_option("--seed", seed_override, "episode seed");
    rollout->add_option("--out", out_path, "output directory");
    rollout->add_flag("--plots", plots, "write SVG trajectory plot");

    auto* sweep = app.add_subcommand("sweep", "run a perturbation sweep");
    sweep->add_option("--config", config_path, "run config JSON")->required();
    sweep->add_option("--policy", policy_override, "baseline | mlp:<weights>");
    sweep->add_option("--seed", seed_override, "base seed");
    sweep->add_option("--jobs", jobs, "worker threads (0 = all cores)");
    sweep->add_option("--out", out_path, "output directory");
    sweep->add_flag("--plots", plots, "write one SVG per grid cell");
    sweep->add_flag("--logs", logs, "write per-episode trajectory logs");

    auto* envelope = app.add_subcommand("envelope", "derive the safety envelope");
    envelope->add_option("csv", csv_path, "sweep CSV report")->required();
    envelope->add_option("--threshold", threshold, "success-rate threshold");
    envelope->add_option("--out", out_path, "output file");

    auto* plan = app.add_subcommand("plan", "emit a countermeasure plan");
    plan->add_option("csv", csv_path, "sweep CSV report")->required();
    plan->add_option("--model", model_path, "STPA model file (default: built-in)");
    plan->add_option("--threshold", threshold, "success-rate threshold");
    plan->add_option("--out", out_path, "output file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(model_path);
        if (trace->parsed()) return cmd_trace(model_path, hazard_id);

        if (rollout->parsed() || sweep->parsed()) {
            RunConfig cfg = load_run_config(config_path);
            if (!policy_override.empty()) cfg.policy_selector = policy_override;
            if (!seed_override.empty()) cfg.base_seed = std::stoull(seed_override);
            if (!out_path.empty()) cfg.out_dir = out_path;
            if (rollout->parsed()) return cmd_rollout(cfg, plots);
            if (cfg.replicates <= 0 &&
                cfg.budget < static_cast<int>(perturb::build_grid(cfg.axes).size()) *
                                 cfg.min_replicates) {
                std::cerr << "error: insufficient budget for the grid\n";
                return kExitConfig;
            }
            return cmd_sweep(cfg, jobs, plots, logs);
        }
        if (envelope->parsed()) {
            if (threshold <= 0.0 || threshold > 1.0) {
                std::cerr << "error: threshold must be in (0, 1]\n";
                return kExitConfig;
            }
            return cmd_envelope(csv_path, threshold, out_path);
        }
        if (plan->parsed()) return cmd_plan(csv_path, model_path, threshold, out_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAnalysis;
    }
    return kExitConfig;
}
