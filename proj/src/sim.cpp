#include "rlstpa/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rlstpa::sim {

Vec3 lidar_ray_direction(const LidarConfig& cfg, int i) {
    const double theta =
        cfg.angle_offset + 2.0 * 3.14159265358979323846 * i / cfg.ray_count;
    return {std::cos(theta), std::sin(theta), 0.0};
}

DroneState step(const DroneState& state, const ControlAction& action,
                const WindField& wind, const SimParams& params, double dt, Rng& rng) {
    if (dt <= 0.0) throw std::invalid_argument("step: dt must be positive");
    if (!state.position.finite() || !state.velocity.finite() ||
        !action.accel_command.finite() || !wind.mean.finite())
        throw std::invalid_argument("step: non-finite state, action, or wind");

    Vec3 wind_inst = wind.mean;
    if (wind.turbulence_sigma > 0.0) {
        wind_inst += Vec3{rng.gaussian(0.0, wind.turbulence_sigma),
                          rng.gaussian(0.0, wind.turbulence_sigma),
                          rng.gaussian(0.0, wind.turbulence_sigma)};
    }

    const Vec3 drag = (state.velocity - wind_inst) * (-params.drag_coeff);
    DroneState next;
    next.velocity =
        clamp_norm(state.velocity + (action.accel_command + drag) * dt, params.v_max);
    next.position = state.position + next.velocity * dt;
    next.time = state.time + dt;

    if (next.position.z < 0.0) {
        next.position.z = 0.0;
        next.velocity.z = 0.0;
    }
    return next;
}

namespace {

constexpr double kRayEps = 1e-9;

// Nearest positive hit distance of ray o + t*d against one capped cylinder,
// or +inf. d need not be horizontal.
double ray_cylinder(const Vec3& o, const Vec3& d, const Obstacle& c) {
    double best = std::numeric_limits<double>::infinity();

    // Side: 2D quadratic in the xy plane.
    const double ox = o.x - c.center_xy.x;
    const double oy = o.y - c.center_xy.y;
    const double a = d.x * d.x + d.y * d.y;
    const double b = 2.0 * (ox * d.x + oy * d.y);
    const double cc = ox * ox + oy * oy - c.radius * c.radius;
    if (a > 0.0) {
        const double disc = b * b - 4.0 * a * cc;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (t > kRayEps) {
                    const double z = o.z + t * d.z;
                    if (z >= 0.0 && z <= c.height) best = std::min(best, t);
                }
            }
        }
    }

    // Caps at z = 0 and z = height.
    if (std::abs(d.z) > 0.0) {
        for (double plane : {0.0, c.height}) {
            const double t = (plane - o.z) / d.z;
            if (t > kRayEps) {
                const double px = ox + t * d.x;
                const double py = oy + t * d.y;
                if (px * px + py * py <= c.radius * c.radius) best = std::min(best, t);
            }
        }
    }
    return best;
}

}  // namespace

std::vector<double> raycast_lidar(const DroneState& state,
                                  const std::vector<Obstacle>& obstacles,
                                  const std::vector<Vec3>& ray_directions,
                                  double max_range) {
    std::vector<double> ranges;
    ranges.reserve(ray_directions.size());
    for (const Vec3& d : ray_directions) {
        double best = max_range;
        for (const Obstacle& c : obstacles)
            best = std::min(best, ray_cylinder(state.position, d, c));
        ranges.push_back(std::max(best, kRayEps));
    }
    return ranges;
}

double point_cylinder_distance(const Vec3& p, const Obstacle& c) {
    const double dx = p.x - c.center_xy.x;
    const double dy = p.y - c.center_xy.y;
    const double radial = std::sqrt(dx * dx + dy * dy) - c.radius;
    double axial = 0.0;
    if (p.z > c.height)
        axial = p.z - c.height;
    else if (p.z < 0.0)
        axial = -p.z;

    if (radial <= 0.0 && axial <= 0.0) return 0.0;  // inside the solid
    if (radial <= 0.0) return axial;                // above/below, within footprint
    if (axial <= 0.0) return radial;                // beside, within height band
    return std::sqrt(radial * radial + axial * axial);
}

double min_separation(const DroneState& state, const std::vector<Obstacle>& obstacles) {
    double best = std::numeric_limits<double>::infinity();
    for (const Obstacle& c : obstacles)
        best = std::min(best, point_cylinder_distance(state.position, c));
    return best;
}

}  // namespace rlstpa::sim
