#include "rlstpa/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rlstpa::analysis {

using nlohmann::json;

std::string to_string(SubtaskKind k) {
    switch (k) {
        case SubtaskKind::TakeoffNavigate: return "TakeoffNavigate";
        case SubtaskKind::ObstacleAvoidance: return "ObstacleAvoidance";
        case SubtaskKind::DescentLanding: return "DescentLanding";
    }
    throw std::logic_error("bad SubtaskKind");
}

SubtaskKind subtask_from_string(const std::string& s) {
    if (s == "TakeoffNavigate") return SubtaskKind::TakeoffNavigate;
    if (s == "ObstacleAvoidance") return SubtaskKind::ObstacleAvoidance;
    if (s == "DescentLanding") return SubtaskKind::DescentLanding;
    throw std::runtime_error("unknown subtask kind: " + s);
}

ScenarioSpec make_scenario(SubtaskKind kind, const ScenarioParams& p) {
    if (p.distance <= 0.0)
        throw std::invalid_argument("make_scenario: distance must be positive");

    ScenarioSpec s;
    s.kind = kind;
    switch (kind) {
        case SubtaskKind::ObstacleAvoidance: {
            s.start = {-p.distance, 0.0, p.altitude};
            s.target = {p.distance, 0.0, p.altitude};
            if (p.tree_count == 3) {
                // Equilateral triangle, 2 m sides, centered on the origin.
                const double r = 2.0 / std::sqrt(3.0);  // circumradius
                for (int i = 0; i < 3; ++i) {
                    const double a = 3.14159265358979323846 * (0.5 + 2.0 * i / 3.0);
                    s.obstacles.push_back(
                        {{r * std::cos(a), r * std::sin(a)}, p.tree_radius,
                         p.tree_height, {}});
                }
            } else {
                s.obstacles.push_back({{0.0, 0.0}, p.tree_radius, p.tree_height, {}});
            }
            break;
        }
        case SubtaskKind::TakeoffNavigate:
            s.start = {0.0, 0.0, 0.0};
            s.target = {p.distance, 0.0, p.altitude};
            break;
        case SubtaskKind::DescentLanding:
            s.start = {0.0, 0.0, p.altitude + p.distance};
            s.target = {0.0, 0.0, 0.0};
            break;
    }
    return s;
}

namespace {

json vec3_to_json(const Vec3& v) { return json{v.x, v.y, v.z}; }
Vec3 vec3_from_json(const json& j) { return {j.at(0), j.at(1), j.at(2)}; }

}  // namespace

std::string save_scenario(const ScenarioSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    j["start"] = vec3_to_json(s.start);
    j["target"] = vec3_to_json(s.target);
    j["d_thresh"] = s.d_thresh;
    j["success_radius"] = s.success_radius;
    j["touchdown_speed"] = s.touchdown_speed;
    j["step_cap"] = s.step_cap;
    j["dt"] = s.dt;
    j["bounds_radius"] = s.bounds_radius;
    j["lidar"] = {{"ray_count", s.lidar.ray_count},
                  {"max_range", s.lidar.max_range},
                  {"angle_offset", s.lidar.angle_offset}};
    j["params"] = {{"v_max", s.params.v_max},
                   {"a_max", s.params.a_max},
                   {"drag_coeff", s.params.drag_coeff}};
    j["obstacles"] = json::array();
    for (const auto& o : s.obstacles)
        j["obstacles"].push_back({{"center", {o.center_xy.x, o.center_xy.y}},
                                  {"radius", o.radius},
                                  {"height", o.height},
                                  {"velocity", {o.velocity_xy.x, o.velocity_xy.y}}});
    return j.dump(2) + "\n";
}

ScenarioSpec load_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("scenario parse error: ") + e.what());
    }
    try {
        ScenarioSpec s;
        s.kind = subtask_from_string(j.at("kind"));
        s.start = vec3_from_json(j.at("start"));
        s.target = vec3_from_json(j.at("target"));
        s.d_thresh = j.at("d_thresh");
        s.success_radius = j.at("success_radius");
        s.touchdown_speed = j.value("touchdown_speed", 1.0);
        s.step_cap = j.at("step_cap");
        s.dt = j.at("dt");
        s.bounds_radius = j.value("bounds_radius", 100.0);
        const auto& lj = j.at("lidar");
        s.lidar = {lj.at("ray_count"), lj.at("max_range"), lj.at("angle_offset")};
        const auto& pj = j.at("params");
        s.params = {pj.at("v_max"), pj.at("a_max"), pj.at("drag_coeff")};
        for (const auto& oj : j.at("obstacles")) {
            sim::Obstacle o;
            o.center_xy = {oj.at("center").at(0), oj.at("center").at(1)};
            o.radius = oj.at("radius");
            o.height = oj.at("height");
            o.velocity_xy = {oj.at("velocity").at(0), oj.at("velocity").at(1)};
            s.obstacles.push_back(o);
        }
        if (s.d_thresh <= 0.0 || s.success_radius <= 0.0)
            throw std::runtime_error("scenario: d_thresh and success_radius must be positive");
        return s;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("scenario schema error: ") + e.what());
    }
}

ScenarioSpec load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
}

void save_scenario_file(const ScenarioSpec& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path);
    out << save_scenario(s);
}

}  // namespace rlstpa::analysis
