#include "rlstpa/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace rlstpa::perturb {

namespace {

constexpr double kMinRange = 1e-6;

void check(bool ok, const char* msg, std::vector<std::string>& out) {
    if (!ok) out.emplace_back(msg);
}

}  // namespace

std::vector<std::string> validate_spec(const PerturbationSpec& s) {
    std::vector<std::string> out;
    check(s.sensor_noise_sigma >= 0.0 && s.sensor_noise_sigma <= 0.5,
          "sensor_noise_sigma outside [0, 0.5]", out);
    check(s.occlusion_fraction >= 0.0 && s.occlusion_fraction <= 0.5,
          "occlusion_fraction outside [0, 0.5]", out);
    check(s.sensor_delay_frames >= 0 && s.sensor_delay_frames <= 5,
          "sensor_delay_frames outside {0..5}", out);
    check(s.actuator_lag_steps >= 0 && s.actuator_lag_steps <= 5,
          "actuator_lag_steps outside {0..5}", out);
    check(s.actuator_noise_sigma >= 0.0 && s.actuator_noise_sigma <= 0.5,
          "actuator_noise_sigma outside [0, 0.5]", out);
    check(s.wind_speed >= 0.0 && s.wind_speed <= 18.0, "wind_speed outside [0, 18]",
          out);
    check(std::abs(s.wind_direction.norm() - 1.0) < 1e-6,
          "wind_direction is not a unit vector", out);
    check(s.fog_density >= 0.0 && s.fog_density <= 1.0, "fog_density outside [0, 1]",
          out);
    check(s.dynamic_obstacle_speed >= 0.0, "dynamic_obstacle_speed negative", out);
    return out;
}

int occluded_ray_count(const PerturbationSpec& spec, int ray_count) {
    return static_cast<int>(std::floor(spec.occlusion_fraction * ray_count));
}

sim::Observation perturb_observation(const PerturbationSpec& spec, Rng& rng,
                                     const std::deque<sim::Observation>& frame_buffer,
                                     int occlusion_start_ray,
                                     const sim::LidarConfig& lidar) {
    if (frame_buffer.empty())
        throw std::invalid_argument("perturb_observation: empty frame buffer");

    // 1. Delay: index from the newest frame, saturating at the oldest.
    const std::size_t newest = frame_buffer.size() - 1;
    const std::size_t idx =
        spec.sensor_delay_frames >= static_cast<int>(newest)
            ? 0
            : newest - static_cast<std::size_t>(spec.sensor_delay_frames);
    sim::Observation obs = frame_buffer[idx];

    const int ray_count = static_cast<int>(obs.lidar_ranges.size());

    // 2. Fog shortens the effective range.
    double eff_max = lidar.max_range;
    if (spec.fog_density > 0.0) {
        eff_max = std::max(lidar.max_range * (1.0 - spec.fog_density), kMinRange);
        for (double& r : obs.lidar_ranges) r = std::min(r, eff_max);
    }

    // 3. Occlusion: a contiguous (circular) sector reads the effective max.
    const int occluded = occluded_ray_count(spec, ray_count);
    for (int k = 0; k < occluded; ++k)
        obs.lidar_ranges[(occlusion_start_ray + k) % ray_count] = eff_max;

    // 4. Noise.
    if (spec.sensor_noise_sigma > 0.0) {
        const double sigma = spec.sensor_noise_sigma * lidar.max_range;
        for (int i = 0; i < ray_count; ++i) {
            const bool is_occluded =
                occluded > 0 &&
                ((i - occlusion_start_ray) % ray_count + ray_count) % ray_count <
                    occluded;
            if (is_occluded) continue;
            obs.lidar_ranges[i] = std::clamp(
                obs.lidar_ranges[i] + rng.gaussian(0.0, sigma), kMinRange, eff_max);
        }
        obs.gps_position += Vec3{rng.gaussian(0.0, spec.sensor_noise_sigma),
                                 rng.gaussian(0.0, spec.sensor_noise_sigma),
                                 rng.gaussian(0.0, spec.sensor_noise_sigma)};
    }
    return obs;
}

sim::ControlAction perturb_action(const PerturbationSpec& spec, Rng& rng,
                                  const std::deque<sim::ControlAction>& action_buffer,
                                  double a_max) {
    sim::ControlAction out{};  // cold-start rule: zero before enough history
    if (!action_buffer.empty()) {
        const std::size_t newest = action_buffer.size() - 1;
        if (spec.actuator_lag_steps <= static_cast<int>(newest))
            out = action_buffer[newest - static_cast<std::size_t>(spec.actuator_lag_steps)];
    }
    if (spec.actuator_noise_sigma > 0.0) {
        const double sigma = spec.actuator_noise_sigma * a_max;
        out.accel_command += Vec3{rng.gaussian(0.0, sigma), rng.gaussian(0.0, sigma),
                                  rng.gaussian(0.0, sigma)};
        out.accel_command = clamp_norm(out.accel_command, a_max);
    }
    return out;
}

void set_axis_value(PerturbationSpec& spec, const std::string& name, double value) {
    if (name == "sensor_noise_sigma")
        spec.sensor_noise_sigma = value;
    else if (name == "occlusion_fraction")
        spec.occlusion_fraction = value;
    else if (name == "sensor_delay_frames")
        spec.sensor_delay_frames = static_cast<int>(value);
    else if (name == "actuator_lag_steps")
        spec.actuator_lag_steps = static_cast<int>(value);
    else if (name == "actuator_noise_sigma")
        spec.actuator_noise_sigma = value;
    else if (name == "wind_speed")
        spec.wind_speed = value;
    else if (name == "fog_density")
        spec.fog_density = value;
    else if (name == "dynamic_obstacle_speed")
        spec.dynamic_obstacle_speed = value;
    else
        throw std::invalid_argument("unknown perturbation axis: " + name);

    const auto violations = validate_spec(spec);
    if (!violations.empty())
        throw std::invalid_argument("axis " + name + " level out of range: " +
                                    violations.front());
}

std::vector<GridCell> build_grid(const std::vector<GridAxis>& axes,
                                 const PerturbationSpec& base) {
    std::set<std::string> names;
    for (const auto& axis : axes) {
        if (!names.insert(axis.name).second)
            throw std::invalid_argument("duplicate grid axis: " + axis.name);
        if (axis.levels.empty())
            throw std::invalid_argument("axis " + axis.name + " has no levels");
        for (std::size_t i = 1; i < axis.levels.size(); ++i)
            if (axis.levels[i] <= axis.levels[i - 1])
                throw std::invalid_argument("axis " + axis.name +
                                            " levels not strictly increasing");
    }

    std::vector<GridCell> cells;
    std::vector<int> idx(axes.size(), 0);
    while (true) {
        GridCell cell;
        cell.spec = base;
        cell.level_indices = idx;
        for (std::size_t a = 0; a < axes.size(); ++a)
            set_axis_value(cell.spec, axes[a].name, axes[a].levels[idx[a]]);
        cells.push_back(std::move(cell));

        // Advance lexicographically, last axis fastest.
        int a = static_cast<int>(axes.size()) - 1;
        for (; a >= 0; --a) {
            if (++idx[a] < static_cast<int>(axes[a].levels.size())) break;
            idx[a] = 0;
        }
        if (a < 0) break;
    }
    return cells;
}

ReplicatePlan allocate_replicates(const std::vector<PilotResult>& pilot_results,
                                  int budget, int min_replicates) {
    const int cells = static_cast<int>(pilot_results.size());
    if (cells == 0) throw std::invalid_argument("allocate_replicates: no cells");
    for (const auto& p : pilot_results)
        if (p.episodes < 2)
            throw std::invalid_argument(
                "allocate_replicates: every cell needs >= 2 pilot episodes");
    if (budget < cells * min_replicates)
        throw std::invalid_argument("allocate_replicates: insufficient budget (" +
                                    std::to_string(budget) + " < " +
                                    std::to_string(cells * min_replicates) + ")");

    constexpr double kEps = 0.01;  // keeps certain cells in play
    std::vector<double> weight(cells);
    double weight_sum = 0.0;
    for (int i = 0; i < cells; ++i) {
        const double p_hat =
            static_cast<double>(pilot_results[i].successes) / pilot_results[i].episodes;
        weight[i] = p_hat * (1.0 - p_hat) + kEps;
        weight_sum += weight[i];
    }

    ReplicatePlan plan;
    plan.budget = budget;
    plan.counts.assign(cells, min_replicates);
    const int remaining = budget - cells * min_replicates;

    // Largest-remainder rounding of the proportional shares.
    std::vector<double> frac(cells);
    int assigned = 0;
    for (int i = 0; i < cells; ++i) {
        const double share = remaining * weight[i] / weight_sum;
        const int whole = static_cast<int>(std::floor(share));
        plan.counts[i] += whole;
        assigned += whole;
        frac[i] = share - whole;
    }
    std::vector<int> order(cells);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    for (int k = 0; k < remaining - assigned; ++k) plan.counts[order[k]] += 1;
    return plan;
}

}  // namespace rlstpa::perturb
