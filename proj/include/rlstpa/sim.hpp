#pragma once

#include <vector>

#include "rlstpa/geometry.hpp"
#include "rlstpa/rng.hpp"

namespace rlstpa::sim {

struct DroneState {
    Vec3 position;   // m
    Vec3 velocity;   // m/s
    double time = 0.0;  // s

    bool operator==(const DroneState&) const = default;
};

// Finite vertical cylinder, base on the ground plane. velocity_xy nonzero for
// dynamic obstacles (constant-velocity drift).
struct Obstacle {
    Vec2 center_xy;
    double radius = 0.5;   // m, > 0
    double height = 10.0;  // m, > 0
    Vec2 velocity_xy;      // m/s

    bool operator==(const Obstacle&) const = default;
};

struct WindField {
    Vec3 mean;                     // m/s
    double turbulence_sigma = 0.0; // m/s, per-axis gust std

    bool operator==(const WindField&) const = default;
};

struct Observation {
    std::vector<double> lidar_ranges;  // m, each in (0, max_range]
    Vec3 gps_position;                 // m
    Vec3 imu_velocity;                 // m/s
    Vec3 target_relative;              // m

    bool operator==(const Observation&) const = default;
};

struct ControlAction {
    Vec3 accel_command;  // m/s^2, |.| <= a_max

    bool operator==(const ControlAction&) const = default;
};

struct SimParams {
    double v_max = 15.0;      // m/s, operating requirement
    double a_max = 10.0;      // m/s^2
    double drag_coeff = 0.3;  // 1/s, linear drag relative to air velocity

    bool operator==(const SimParams&) const = default;
};

struct LidarConfig {
    int ray_count = 36;       // horizontal fan
    double max_range = 10.0;  // m
    // Mounting offset of ray 0 from +x, radians. Nonzero so the fan is not
    // mirror-symmetric about the flight axis in the canned scenarios.
    double angle_offset = 0.05;

    bool operator==(const LidarConfig&) const = default;
};

// Unit direction of ray i in the horizontal fan.
Vec3 lidar_ray_direction(const LidarConfig& cfg, int i);

// Semi-implicit Euler with speed clamp and ground plane:
//   wind_inst = mean + gust;  v' = clamp_norm(v + (a - c*(v - wind_inst))*dt, v_max)
//   p' = p + v'*dt;  z clamped to >= 0 with zero vertical velocity.
// Throws std::invalid_argument on non-finite state/action or dt <= 0.
DroneState step(const DroneState& state, const ControlAction& action,
                const WindField& wind, const SimParams& params, double dt, Rng& rng);

// Exact analytic ray vs finite-cylinder (side + caps) intersection; each entry
// is the distance to the nearest surface hit along the ray, else max_range.
std::vector<double> raycast_lidar(const DroneState& state,
                                  const std::vector<Obstacle>& obstacles,
                                  const std::vector<Vec3>& ray_directions,
                                  double max_range);

// Euclidean distance from the drone point to the nearest solid cylinder
// surface; 0 when inside an obstacle. +inf with no obstacles.
double min_separation(const DroneState& state, const std::vector<Obstacle>& obstacles);

double point_cylinder_distance(const Vec3& p, const Obstacle& obstacle);

}  // namespace rlstpa::sim
