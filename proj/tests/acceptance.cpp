// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Self-contained against the library; no CLI involved.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rlstpa/analysis.hpp"
#include "rlstpa/report.hpp"
#include "rlstpa/rng.hpp"
#include "synthetic_trajectories.hpp"

using namespace rlstpa;
using namespace rlstpa::analysis;

namespace {

int failures = 0;

void report_line(int index, const std::string& label, bool ok) {
    std::printf("%s  %2d. %s\n", ok ? "PASS" : "FAIL", index, label.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

// Hand-built single-axis wind sweep with prescribed success counts of 20.
SweepResult wind_sweep(const std::vector<int>& successes) {
    SweepResult sweep;
    sweep.axes = {{"wind_speed", {0.0, 2.25, 4.5, 9.0, 18.0}}};
    for (std::size_t i = 0; i < successes.size(); ++i) {
        CellStats cell;
        cell.level_indices = {static_cast<int>(i)};
        cell.replicates = 20;
        cell.successes = successes[i];
        cell.rate = wilson_interval(cell.successes, cell.replicates);
        sweep.cells.push_back(std::move(cell));
        sweep.plan.counts.push_back(20);
    }
    return sweep;
}

bool criterion_penalty() {
    if (penalty(0.25, 0.0) != -5.0) return false;
    if (std::abs(penalty(0.25, 0.125) - (-2.5)) > 1e-15) return false;
    if (penalty(0.25, 0.25) != 0.0) return false;
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
        const double d = rng.uniform(0.0, 0.25);
        const double want = -5.0 * (0.25 - d) / 0.25;
        if (std::abs(penalty(0.25, d) - want) > 1e-12) return false;
    }
    for (int i = 0; i < 1000; ++i)
        if (penalty(0.25, rng.uniform(0.25, 20.0)) != 0.0) return false;
    return true;
}

bool criterion_envelope_reproduction() {
    // Published per-level rates 1.00/1.00/0.95/0.55/0.40 over the wind ladder.
    const auto sweep = wind_sweep({20, 20, 19, 11, 8});
    const auto env = derive_envelope(sweep, 0.95);
    if (env.axes.size() != 1) return false;
    const AxisBound& b = env.axes[0];
    return b.axis == "wind_speed" && b.bound_index == 2 && b.bound_value == 4.5 &&
           b.failing_levels == std::vector<int>{3, 4};
}

SweepResult run_wind_sweep(int jobs, std::uint64_t seed, bool keep) {
    const ScenarioSpec scenario = make_scenario(SubtaskKind::ObstacleAvoidance);
    const stpa::StpaModel model = stpa::default_drone_model();
    const auto policy =
        policy::make_policy("baseline", scenario.lidar, scenario.params);
    const std::vector<perturb::GridAxis> axes{
        {"wind_speed", {0.0, 2.25, 4.5, 9.0, 18.0}}};
    const auto grid = perturb::build_grid(axes);
    perturb::ReplicatePlan plan;
    plan.counts.assign(grid.size(), 20);
    plan.budget = 100;
    SweepOptions opts;
    opts.jobs = jobs;
    opts.keep_trajectories = keep;
    return run_sweep(scenario, *policy, axes, grid, plan, seed, model, opts);
}

bool criterion_determinism() {
    const report::Provenance prov{"acceptance", 2025};
    const auto a = run_wind_sweep(1, 2025, true);
    const auto b = run_wind_sweep(4, 2025, true);
    const auto c = run_wind_sweep(4, 2025, true);
    const std::string csv_a = report::sweep_csv(a, prov);
    if (csv_a != report::sweep_csv(b, prov)) return false;
    if (csv_a != report::sweep_csv(c, prov)) return false;
    if (a.trajectory_logs != b.trajectory_logs) return false;
    return a.trajectory_logs == c.trajectory_logs;
}

bool criterion_geometry_oracle() {
    Rng rng(404);
    int ray_cases = 0;
    while (ray_cases < 1000) {
        std::vector<sim::Obstacle> obs;
        const int n = 1 + static_cast<int>(rng.next_u64() % 3);
        for (int i = 0; i < n; ++i)
            obs.push_back({{rng.uniform(-6, 6), rng.uniform(-6, 6)},
                           rng.uniform(0.3, 1.5), rng.uniform(2.0, 8.0), {}});
        const sim::DroneState drone{{rng.uniform(-8, 8), rng.uniform(-8, 8),
                                     rng.uniform(0.2, 6.0)}, {}, 0.0};
        if (sim::min_separation(drone, obs) <= 0.0) continue;
        const double az = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double el = rng.uniform(-0.6, 0.6);
        const Vec3 dir{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                       std::sin(el)};
        const double analytic = sim::raycast_lidar(drone, obs, {dir}, 10.0)[0];
        const double marched =
            oracles::raymarch_range(drone.position, dir, obs, 10.0);
        if (std::abs(analytic - marched) >= 1e-3) return false;
        ++ray_cases;
    }
    for (int i = 0; i < 500; ++i) {
        const sim::Obstacle c{{rng.uniform(-3, 3), rng.uniform(-3, 3)},
                              rng.uniform(0.3, 2.0), rng.uniform(1.0, 6.0), {}};
        const sim::DroneState drone{{rng.uniform(-6, 6), rng.uniform(-6, 6),
                                     rng.uniform(0.0, 8.0)}, {}, 0.0};
        const double exact = sim::min_separation(drone, {c});
        const double sampled = oracles::sampled_cylinder_distance(drone.position, c);
        if (std::abs(exact - sampled) >= 1e-3) return false;
    }
    return true;
}

bool criterion_uca_detectors() {
    const ScenarioSpec scenario = make_scenario(SubtaskKind::ObstacleAvoidance);
    const stpa::StpaModel model = stpa::default_drone_model();
    const auto cases = synthetic::uca_cases();
    if (cases.size() < 16) return false;

    std::map<std::string, int> labeled;
    int negatives = 0;
    bool precedence_1 = false, precedence_3 = false;
    for (const auto& c : cases) {
        std::vector<std::string> got;
        for (const auto& ev : detect_ucas(c.traj, scenario, model))
            got.push_back(ev.uca_id);
        if (got != c.expected) {
            std::fprintf(stderr, "  detector mismatch on %s\n", c.name.c_str());
            return false;
        }
        if (c.expected.empty()) ++negatives;
        for (const auto& id : c.expected) labeled[id] += 1;
        if (c.name.rfind("prec_uca1", 0) == 0) precedence_1 = true;
        if (c.name.rfind("prec_uca3", 0) == 0) precedence_3 = true;
    }
    for (const char* id : {"UCA-1", "UCA-2", "UCA-3", "UCA-4"})
        if (labeled[id] < 3) return false;
    return negatives >= 4 && precedence_1 && precedence_3;
}

bool criterion_monotone_degradation() {
    const auto sweep = run_wind_sweep(0, 2025, false);
    std::vector<double> rates;
    for (const auto& cell : sweep.cells) rates.push_back(cell.rate.rate);
    std::printf("      wind ladder success rates:");
    for (double r : rates) std::printf(" %.2f", r);
    std::printf("\n");
    if (rates.front() < 0.95) return false;
    int inversions = 0;
    for (std::size_t i = 1; i < rates.size(); ++i) {
        if (rates[i] > rates[i - 1] + 1e-12) {
            ++inversions;
            if (rates[i] - rates[i - 1] > 0.05 + 1e-12) return false;
        }
    }
    return inversions <= 1;
}

bool criterion_perturbation_stats() {
    const sim::LidarConfig lidar;
    Rng rng(555);
    for (int i = 0; i < 100; ++i) {
        sim::Observation obs;
        for (int r = 0; r < lidar.ray_count; ++r)
            obs.lidar_ranges.push_back(rng.uniform(0.5, lidar.max_range));
        obs.gps_position = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 5)};
        obs.imu_velocity = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)};
        obs.target_relative = {rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0};
        std::deque<sim::Observation> frames{obs};
        if (!(perturb::perturb_observation({}, rng, frames, 0, lidar) == obs))
            return false;
        const sim::ControlAction act{{rng.uniform(-10, 10), rng.uniform(-10, 10),
                                      rng.uniform(-10, 10)}};
        std::deque<sim::ControlAction> actions{act};
        if (!(perturb::perturb_action({}, rng, actions, 10.0) == act)) return false;
    }

    // sigma = 0.5: measure on the unclamped GPS channel, 10^4 samples.
    perturb::PerturbationSpec spec;
    spec.sensor_noise_sigma = 0.5;
    sim::Observation obs;
    obs.lidar_ranges.assign(lidar.ray_count, 5.0);
    std::deque<sim::Observation> frames{obs};
    Rng noise_rng(9999);
    std::vector<double> samples;
    samples.reserve(10000);
    for (int i = 0; i < 10000; ++i)
        samples.push_back(
            perturb::perturb_observation(spec, noise_rng, frames, 0, lidar)
                .gps_position.x);
    const double mean =
        std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    const double stddev = std::sqrt(var / (samples.size() - 1));
    return std::abs(stddev - 0.5) / 0.5 < 0.05;
}

bool criterion_allocation() {
    const std::vector<perturb::PilotResult> pilot{{4, 4}, {2, 4}, {4, 4}};
    const auto plan = perturb::allocate_replicates(pilot, 100, 5);
    const int total = std::accumulate(plan.counts.begin(), plan.counts.end(), 0);
    if (total != 100) return false;
    if (!(plan.counts[1] > plan.counts[0] && plan.counts[1] > plan.counts[2]))
        return false;
    Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const int cells = 2 + static_cast<int>(rng.next_u64() % 8);
        std::vector<perturb::PilotResult> p;
        for (int c = 0; c < cells; ++c) {
            const int n = 2 + static_cast<int>(rng.next_u64() % 6);
            p.push_back({static_cast<int>(rng.next_u64() % (n + 1)), n});
        }
        const int budget = cells * 5 + static_cast<int>(rng.next_u64() % 100);
        const auto pl = perturb::allocate_replicates(p, budget, 5);
        if (std::accumulate(pl.counts.begin(), pl.counts.end(), 0) != budget)
            return false;
    }
    return true;
}

bool criterion_stpa_model() {
    const stpa::StpaModel base = stpa::default_drone_model();
    if (!stpa::validate_model(base).empty()) return false;

    auto dangling = base;
    dangling.hazards[0].linked_losses.push_back("L-99");
    if (stpa::validate_model(dangling).size() != 1) return false;

    auto duplicate = base;
    duplicate.losses.push_back(duplicate.losses[0]);
    if (stpa::validate_model(duplicate).size() != 1) return false;

    auto empty_links = base;
    empty_links.hazards[0].linked_losses.clear();
    return stpa::validate_model(empty_links).size() == 1;
}

bool criterion_discounted_return() {
    Rng rng(31337);
    for (double gamma : {0.0, 0.5, 0.99}) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> rewards(1 + rng.next_u64() % 300);
            for (auto& r : rewards) r = rng.uniform(-5.0, 1.0);
            double want = 0.0, g = 1.0;
            for (double r : rewards) {
                want += g * r;
                g *= gamma;
            }
            if (std::abs(discounted_return(rewards, gamma) - want) > 1e-12)
                return false;
        }
    }
    return true;
}

bool criterion_countermeasure_plan() {
    auto sweep = wind_sweep({20, 20, 19, 11, 8});  // fails at 9.0 and 18.0 m/s
    sweep.cells[3].uca_counts["UCA-4"] = 3;
    sweep.cells[3].violation_episodes = 3;
    sweep.cells[4].uca_counts["UCA-1"] = 5;
    sweep.cells[4].violation_episodes = 5;
    const auto env = derive_envelope(sweep, 0.95);
    const auto plan =
        recommend_countermeasures(sweep, env, stpa::default_drone_model());
    if (plan.stages.size() != 2) return false;
    if (plan.stages[0].level_value != 9.0 || plan.stages[1].level_value != 18.0)
        return false;
    for (const auto& stage : plan.stages)
        if (stage.training_steps != 3000000) return false;
    return plan.min_separation_penalty && !plan.satisfied;
}

}  // namespace

int main() {
    report_line(1, "minimum-separation penalty formula is exact", criterion_penalty());
    report_line(2, "envelope from published wind-ladder rates bounds at 4.5 m/s",
                criterion_envelope_reproduction());
    report_line(3, "sweeps are byte-identical across reruns and thread counts",
                criterion_determinism());
    report_line(4, "raycast and clearance match brute-force geometry oracles",
                criterion_geometry_oracle());
    report_line(5, "UCA detectors agree with all hand-labeled trajectories",
                criterion_uca_detectors());
    report_line(6, "baseline success degrades monotonically over the wind ladder",
                criterion_monotone_degradation());
    report_line(7, "zero perturbation is identity; noise std matches nominal",
                criterion_perturbation_stats());
    report_line(8, "replicate allocation conserves budget, favors high variance",
                criterion_allocation());
    report_line(9, "STPA model validation catches each seeded defect exactly once",
                criterion_stpa_model());
    report_line(10, "discounted return matches the naive-loop oracle",
                criterion_discounted_return());
    report_line(11, "failing sweep yields two curriculum stages plus reward shaping",
                criterion_countermeasure_plan());

    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all 11 acceptance criteria passed\n");
    return 0;
}
