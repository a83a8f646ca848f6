#include "rlstpa/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rlstpa::report {

using nlohmann::json;

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setfill('0') << std::setw(16) << h;
    return os.str();
}

namespace {

json vec3_json(const Vec3& v) { return json{v.x, v.y, v.z}; }

std::string fmt(double v, int precision = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

std::string fmt_exact(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

std::string trajectory_jsonl(const analysis::Trajectory& traj) {
    std::ostringstream os;
    os << json{{"format", "rlstpa-trajectory-v1"},
               {"dt", traj.dt},
               {"steps", traj.steps.size()}}
              .dump()
       << '\n';
    for (const auto& s : traj.steps) {
        json j;
        j["t"] = s.time;
        j["pos"] = vec3_json(s.state.position);
        j["vel"] = vec3_json(s.state.velocity);
        j["cmd"] = vec3_json(s.commanded.accel_command);
        j["exec"] = vec3_json(s.executed.accel_command);
        j["lidar"] = s.observation.lidar_ranges;
        j["min_sep"] = s.min_separation;
        j["d_lidar"] = s.d_lidar;
        j["penalty"] = s.penalty;
        j["reward"] = s.reward;
        os << j.dump() << '\n';
    }
    return os.str();
}

std::string episode_summary(const analysis::EpisodeResult& r, const Provenance& prov) {
    std::ostringstream os;
    os << "episode summary\n";
    os << "  config_hash: " << prov.config_hash << "\n";
    os << "  base_seed: " << prov.base_seed << "\n";
    os << "  episode_seed: " << r.seed << "\n";
    os << "  success: " << (r.success ? "true" : "false") << "\n";
    os << "  termination: " << analysis::to_string(r.termination) << "\n";
    os << "  min_separation_m: " << fmt(r.min_separation) << "\n";
    os << "  max_acceleration_mps2: " << fmt(r.max_acceleration) << "\n";
    os << "  control_smoothness_mps2: " << fmt(r.control_smoothness) << "\n";
    os << "  discounted_return: " << fmt(r.discounted_return) << "\n";
    os << "  separation_violations: " << r.violations.size() << "\n";
    for (const auto& v : r.violations)
        os << "    steps " << v.start_step << ".." << v.end_step
           << " min_separation " << fmt(v.min_separation) << "\n";
    os << "  uca_events: " << r.uca_events.size() << "\n";
    for (const auto& u : r.uca_events)
        os << "    " << u.uca_id << " t=[" << fmt(u.t_start, 2) << ", "
           << fmt(u.t_end, 2) << "] " << u.evidence << "\n";
    return os.str();
}

namespace {

std::vector<std::string> uca_columns(const analysis::SweepResult& sweep) {
    std::set<std::string> ids;
    for (const auto& cell : sweep.cells)
        for (const auto& [id, count] : cell.uca_counts) ids.insert(id);
    return {ids.begin(), ids.end()};
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

std::string sweep_csv(const analysis::SweepResult& sweep, const Provenance& prov) {
    std::ostringstream os;
    os << "# rlstpa-sweep-v1\n";
    os << "# config_hash " << prov.config_hash << "\n";
    os << "# base_seed " << sweep.base_seed << "\n";
    for (const auto& axis : sweep.axes) {
        os << "# axis " << axis.name;
        for (double v : axis.levels) os << ' ' << fmt_exact(v);
        os << "\n";
    }
    os << "# plan";
    for (int c : sweep.plan.counts) os << ' ' << c;
    os << "\n";

    const auto ucas = uca_columns(sweep);
    for (const auto& axis : sweep.axes) os << axis.name << ',';
    os << "replicates,successes,collisions,success_rate,wilson_lo,wilson_hi,"
          "mean_min_separation,violation_episodes";
    for (const auto& id : ucas) os << ",uca_" << id;
    os << "\n";

    for (const auto& cell : sweep.cells) {
        for (std::size_t a = 0; a < sweep.axes.size(); ++a)
            os << fmt_exact(sweep.axes[a].levels[cell.level_indices[a]]) << ',';
        os << cell.replicates << ',' << cell.successes << ',' << cell.collisions << ','
           << fmt(cell.rate.rate) << ',' << fmt(cell.rate.lo) << ','
           << fmt(cell.rate.hi) << ',' << fmt(cell.mean_min_separation) << ','
           << cell.violation_episodes;
        for (const auto& id : ucas) {
            const auto it = cell.uca_counts.find(id);
            os << ',' << (it == cell.uca_counts.end() ? 0 : it->second);
        }
        os << "\n";
    }
    return os.str();
}

analysis::SweepResult parse_sweep_csv(const std::string& text) {
    analysis::SweepResult sweep;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    bool saw_magic = false;

    auto fail = [](const std::string& msg) -> void {
        throw std::runtime_error("sweep CSV parse error: " + msg);
    };

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tag;
            ls >> tag;
            if (tag == "rlstpa-sweep-v1") {
                saw_magic = true;
            } else if (tag == "base_seed") {
                ls >> sweep.base_seed;
            } else if (tag == "axis") {
                perturb::GridAxis axis;
                ls >> axis.name;
                double v;
                while (ls >> v) axis.levels.push_back(v);
                sweep.axes.push_back(std::move(axis));
            } else if (tag == "plan") {
                int c;
                while (ls >> c) sweep.plan.counts.push_back(c);
            }
            continue;
        }
        if (!saw_magic) fail("missing rlstpa-sweep-v1 marker");
        if (header.empty()) {
            header = split(line, ',');
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() != header.size()) fail("row width mismatch: " + line);

        analysis::CellStats cell;
        std::size_t f = 0;
        try {
            for (std::size_t a = 0; a < sweep.axes.size(); ++a, ++f) {
                const double v = std::stod(fields[f]);
                const auto& levels = sweep.axes[a].levels;
                const auto it = std::find(levels.begin(), levels.end(), v);
                if (it == levels.end()) fail("level value not on axis: " + fields[f]);
                cell.level_indices.push_back(
                    static_cast<int>(it - levels.begin()));
                perturb::set_axis_value(cell.spec, sweep.axes[a].name, v);
            }
            cell.replicates = std::stoi(fields[f++]);
            cell.successes = std::stoi(fields[f++]);
            cell.collisions = std::stoi(fields[f++]);
            f += 3;  // recompute the rate and interval from the counts
            cell.rate = analysis::wilson_interval(cell.successes, cell.replicates);
            cell.mean_min_separation = std::stod(fields[f++]);
            cell.violation_episodes = std::stoi(fields[f++]);
            for (; f < fields.size(); ++f) {
                const std::string& col = header[f];
                if (col.rfind("uca_", 0) != 0) fail("unexpected column: " + col);
                cell.uca_counts[col.substr(4)] = std::stoi(fields[f]);
            }
        } catch (const std::invalid_argument&) {
            fail("bad numeric field in row: " + line);
        } catch (const std::out_of_range&) {
            fail("numeric field out of range in row: " + line);
        }
        sweep.cells.push_back(std::move(cell));
    }
    if (!saw_magic) fail("not a sweep CSV");
    if (sweep.cells.empty()) fail("no data rows");
    for (std::size_t i = 1; i < sweep.axes.size(); ++i) {
        std::size_t expected = 1;
        for (const auto& axis : sweep.axes) expected *= axis.levels.size();
        if (sweep.cells.size() != expected) fail("cell count does not match axes");
        break;
    }
    sweep.plan.budget = 0;
    for (int c : sweep.plan.counts) sweep.plan.budget += c;
    return sweep;
}

std::string envelope_document(const analysis::SafetyEnvelope& env,
                              const analysis::SweepResult& sweep,
                              const Provenance& prov) {
    auto axis_level = [&](const std::string& name, int lvl) {
        for (const auto& axis : sweep.axes)
            if (axis.name == name) return axis.levels[lvl];
        return 0.0;
    };
    std::ostringstream os;
    os << "operational safety envelope\n";
    os << "  config_hash: " << prov.config_hash << "\n";
    os << "  base_seed: " << sweep.base_seed << "\n";
    os << "  success_threshold: " << fmt(env.threshold, 2) << "\n";
    os << "  coverage: grid cells executed = " << sweep.cells.size() << "\n";
    if (env.axes.empty()) os << "  (no perturbation axes; baseline-only sweep)\n";
    for (const auto& bound : env.axes) {
        if (bound.bound_index < 0) {
            os << "  " << bound.axis
               << ": no validated level (baseline fails the threshold) [FLAGGED]\n";
        } else {
            os << "  " << bound.axis << " <= " << fmt_exact(bound.bound_value)
               << " (validated through level " << bound.bound_index
               << ", success rate " << fmt(bound.rate_at_bound, 2) << ")\n";
        }
        for (int lvl : bound.failing_levels)
            os << "    level " << lvl << " ("
               << fmt_exact(axis_level(bound.axis, lvl))
               << ") outside envelope\n";
    }
    return os.str();
}

std::string plan_document(const analysis::CountermeasurePlan& plan,
                          const analysis::SafetyEnvelope& env,
                          const stpa::StpaModel& model, const Provenance& prov) {
    std::ostringstream os;
    os << "countermeasure plan\n";
    os << "  config_hash: " << prov.config_hash << "\n";
    os << "  base_seed: " << prov.base_seed << "\n";
    os << "  success_threshold: " << fmt(env.threshold, 2) << "\n";
    if (plan.satisfied) {
        os << "  status: safety requirements satisfied, iterative process terminates\n";
        return os.str();
    }
    os << "  status: countermeasures required\n";
    os << "  curriculum_stages: " << plan.stages.size() << "\n";
    for (const auto& stage : plan.stages) {
        os << "    stage: train at " << stage.axis << " = "
           << fmt_exact(stage.level_value) << " for " << stage.training_steps
           << " time steps\n";
        if (!stage.uca_ids.empty()) {
            os << "      targets:";
            for (const auto& id : stage.uca_ids) os << ' ' << id;
            os << " (hazards:";
            for (const auto& id : stage.hazard_ids) os << ' ' << id;
            os << ")\n";
        }
    }
    if (plan.min_separation_penalty) {
        os << "  reward_shaping: strengthen the minimum-separation penalty term "
              "(-5*(d_thresh - d_lidar)/d_thresh) so separation breaches are "
              "penalized during training\n";
        if (!plan.penalty_uca_ids.empty()) {
            os << "      targets:";
            for (const auto& id : plan.penalty_uca_ids) os << ' ' << id;
            os << " (hazards:";
            for (const auto& id : plan.penalty_hazard_ids) os << ' ' << id;
            os << ")\n";
        }
        for (const auto& hid : plan.penalty_hazard_ids) {
            if (const auto* h = model.find_hazard(hid)) {
                os << "      " << hid << ": " << h->description << " (losses:";
                for (const auto& lid : h->linked_losses) os << ' ' << lid;
                os << ")\n";
            }
        }
    }
    return os.str();
}

std::string trajectory_svg(const analysis::Trajectory& traj,
                           const analysis::ScenarioSpec& scenario) {
    // Fit the scene into a fixed viewport with a small margin.
    double min_x = scenario.start.x, max_x = scenario.start.x;
    double min_y = scenario.start.y, max_y = scenario.start.y;
    auto grow = [&](double x, double y, double pad) {
        min_x = std::min(min_x, x - pad);
        max_x = std::max(max_x, x + pad);
        min_y = std::min(min_y, y - pad);
        max_y = std::max(max_y, y + pad);
    };
    grow(scenario.target.x, scenario.target.y, 1.0);
    for (const auto& s : traj.steps) grow(s.state.position.x, s.state.position.y, 0.0);
    for (const auto& o : scenario.obstacles)
        grow(o.center_xy.x, o.center_xy.y, o.radius + scenario.d_thresh);
    min_x -= 1.0;
    min_y -= 1.0;
    max_x += 1.0;
    max_y += 1.0;

    const double view = 600.0;
    const double scale = view / std::max(max_x - min_x, max_y - min_y);
    auto sx = [&](double x) { return (x - min_x) * scale; };
    auto sy = [&](double y) { return view - (y - min_y) * scale; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" "
          "viewBox=\"0 0 600 600\">\n";
    os << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
    for (const auto& o : scenario.obstacles) {
        os << "<circle cx=\"" << fmt(sx(o.center_xy.x), 1) << "\" cy=\""
           << fmt(sy(o.center_xy.y), 1) << "\" r=\"" << fmt(o.radius * scale, 1)
           << "\" fill=\"#567d46\"/>\n";
        os << "<circle cx=\"" << fmt(sx(o.center_xy.x), 1) << "\" cy=\""
           << fmt(sy(o.center_xy.y), 1) << "\" r=\""
           << fmt((o.radius + scenario.d_thresh) * scale, 1)
           << "\" fill=\"none\" stroke=\"#c0392b\" stroke-dasharray=\"4 3\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"#2b6cb0\" stroke-width=\"1.5\" points=\"";
    for (const auto& s : traj.steps)
        os << fmt(sx(s.state.position.x), 1) << ',' << fmt(sy(s.state.position.y), 1)
           << ' ';
    os << "\"/>\n";
    os << "<circle cx=\"" << fmt(sx(scenario.start.x), 1) << "\" cy=\""
       << fmt(sy(scenario.start.y), 1) << "\" r=\"4\" fill=\"#2b6cb0\"/>\n";
    os << "<circle cx=\"" << fmt(sx(scenario.target.x), 1) << "\" cy=\""
       << fmt(sy(scenario.target.y), 1) << "\" r=\""
       << fmt(scenario.success_radius * scale, 1)
       << "\" fill=\"none\" stroke=\"#d69e2e\" stroke-width=\"2\"/>\n";
    os << "</svg>\n";
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

}  // namespace rlstpa::report
