#pragma once

#include <string>
#include <vector>

#include "rlstpa/sim.hpp"

namespace rlstpa::analysis {

enum class SubtaskKind {
    TakeoffNavigate,
    ObstacleAvoidance,
    DescentLanding,
};

std::string to_string(SubtaskKind k);
SubtaskKind subtask_from_string(const std::string& s);

struct ScenarioSpec {
    SubtaskKind kind = SubtaskKind::ObstacleAvoidance;
    std::vector<sim::Obstacle> obstacles;
    Vec3 start;
    Vec3 target;
    double d_thresh = 0.25;        // m, minimum-separation requirement
    double success_radius = 0.5;   // m, delivery tolerance
    double touchdown_speed = 1.0;  // m/s, landing-only success bound
    int step_cap = 600;
    double dt = 0.05;              // s
    sim::LidarConfig lidar;
    sim::SimParams params;
    double bounds_radius = 100.0;  // m, |x|,|y| or z beyond this -> OutOfBounds

    bool operator==(const ScenarioSpec&) const = default;
};

struct ScenarioParams {
    double distance = 10.0;      // m, start/target offset from the obstacle
    double altitude = 2.0;       // m, cruise height
    double tree_radius = 0.5;    // m
    double tree_height = 10.0;   // m
    int tree_count = 1;          // 1 or 3 (triangle cluster, 2 m spacing)
};

// Canned subtask layouts. ObstacleAvoidance: start at (-D, 0, h), target at
// (+D, 0, h), tree(s) at the origin; the 3-tree cluster is an equilateral
// triangle with 2 m sides centered on the origin, one vertex on +y.
// Throws std::invalid_argument for non-positive distance.
ScenarioSpec make_scenario(SubtaskKind kind, const ScenarioParams& params = {});

std::string save_scenario(const ScenarioSpec& s);
ScenarioSpec load_scenario(const std::string& json_text);
ScenarioSpec load_scenario_file(const std::string& path);
void save_scenario_file(const ScenarioSpec& s, const std::string& path);

}  // namespace rlstpa::analysis
