#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "rlstpa/rng.hpp"
#include "rlstpa/sim.hpp"

namespace rlstpa::perturb {

// One point in the perturbation grid. All-zero (the default, except the wind
// direction unit vector) means unperturbed.
struct PerturbationSpec {
    double sensor_noise_sigma = 0.0;    // [0, 0.5] fraction of max_range; meters on GPS
    double occlusion_fraction = 0.0;    // [0, 0.5] of field of view
    int sensor_delay_frames = 0;        // {0..5}
    int actuator_lag_steps = 0;         // {0..5}
    double actuator_noise_sigma = 0.0;  // [0, 0.5] fraction of a_max
    double wind_speed = 0.0;            // [0, 18.0] m/s
    Vec2 wind_direction{1.0, 0.0};      // unit vector
    double fog_density = 0.0;           // [0, 1]
    double dynamic_obstacle_speed = 0.0;  // >= 0 m/s

    bool operator==(const PerturbationSpec&) const = default;
};

// Empty = all fields within range. One message per violated bound.
std::vector<std::string> validate_spec(const PerturbationSpec& spec);

// Applied in order: delay -> fog -> occlusion -> noise.
//   delay: substitute the raw observation from sensor_delay_frames ago
//          (frame_buffer holds raw observations, current one last; with short
//          history the oldest frame is used);
//   fog: lidar saturates at max_range*(1 - fog_density);
//   occlusion: floor(occlusion_fraction * R) contiguous rays starting at
//              occlusion_start_ray (fixed per episode) read the effective max;
//   noise: Gaussian(0, sigma*max_range) per ray clamped to (0, effective max],
//          Gaussian(0, sigma) meters per GPS axis.
sim::Observation perturb_observation(const PerturbationSpec& spec, Rng& rng,
                                     const std::deque<sim::Observation>& frame_buffer,
                                     int occlusion_start_ray,
                                     const sim::LidarConfig& lidar);

// Lag first (action commanded actuator_lag_steps ago; zero before enough
// history), then Gaussian(0, sigma*a_max) per axis, clamped to a_max.
// action_buffer holds commanded actions, current one last.
sim::ControlAction perturb_action(const PerturbationSpec& spec, Rng& rng,
                                  const std::deque<sim::ControlAction>& action_buffer,
                                  double a_max);

int occluded_ray_count(const PerturbationSpec& spec, int ray_count);

struct GridAxis {
    std::string name;            // a PerturbationSpec field name
    std::vector<double> levels;  // strictly increasing; levels[0] unperturbed

    bool operator==(const GridAxis&) const = default;
};

struct GridCell {
    PerturbationSpec spec;
    std::vector<int> level_indices;  // one per axis, in axis order
};

// Cartesian product, lexicographic by axis order then level index; cell 0 is
// all-unperturbed. Throws std::invalid_argument on duplicate axis names,
// unknown field names, out-of-range or non-increasing levels.
std::vector<GridCell> build_grid(const std::vector<GridAxis>& axes,
                                 const PerturbationSpec& base = {});

// Sets one named field; throws std::invalid_argument on unknown name or
// out-of-range value.
void set_axis_value(PerturbationSpec& spec, const std::string& name, double value);

struct PilotResult {
    int successes = 0;
    int episodes = 0;
};

struct ReplicatePlan {
    std::vector<int> counts;  // per cell, each >= min_replicates
    int budget = 0;           // sum of counts == budget

    bool operator==(const ReplicatePlan&) const = default;
};

// Variance-proportional allocation: each cell gets min_replicates, then the
// remaining budget is split proportionally to p_hat*(1-p_hat) + 0.01 by
// largest remainder. Throws std::invalid_argument when
// budget < cells*min_replicates or any cell has < 2 pilot episodes.
ReplicatePlan allocate_replicates(const std::vector<PilotResult>& pilot_results,
                                  int budget, int min_replicates);

}  // namespace rlstpa::perturb
