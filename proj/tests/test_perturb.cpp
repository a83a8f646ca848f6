#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rlstpa/perturb.hpp"
#include "rlstpa/rng.hpp"

using namespace rlstpa;
using namespace rlstpa::perturb;

namespace {

const sim::LidarConfig kLidar{};

sim::Observation random_obs(Rng& rng) {
    sim::Observation obs;
    for (int i = 0; i < kLidar.ray_count; ++i)
        obs.lidar_ranges.push_back(rng.uniform(0.5, kLidar.max_range));
    obs.gps_position = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 5)};
    obs.imu_velocity = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-1, 1)};
    obs.target_relative = {rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0};
    return obs;
}

}  // namespace

TEST_CASE("all-zero spec is a bit-exact identity") {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        const sim::Observation obs = random_obs(rng);
        std::deque<sim::Observation> frames{obs};
        const sim::Observation out =
            perturb_observation({}, rng, frames, 0, kLidar);
        CHECK(out == obs);

        const sim::ControlAction act{{rng.uniform(-10, 10), rng.uniform(-10, 10), 0.0}};
        std::deque<sim::ControlAction> actions{act};
        CHECK(perturb_action({}, rng, actions, 10.0) == act);
    }
}

TEST_CASE("delay substitutes the observation from k frames ago") {
    Rng rng(12);
    std::deque<sim::Observation> frames;
    std::vector<sim::Observation> history;
    for (int i = 0; i < 5; ++i) {
        history.push_back(random_obs(rng));
        frames.push_back(history.back());
    }
    PerturbationSpec spec;
    spec.sensor_delay_frames = 2;
    CHECK(perturb_observation(spec, rng, frames, 0, kLidar) == history[2]);
}

TEST_CASE("delay saturates at the oldest frame during cold start") {
    Rng rng(13);
    const sim::Observation only = random_obs(rng);
    std::deque<sim::Observation> frames{only};
    PerturbationSpec spec;
    spec.sensor_delay_frames = 5;
    CHECK(perturb_observation(spec, rng, frames, 0, kLidar) == only);
}

TEST_CASE("occlusion blanks exactly floor(fraction*R) contiguous rays") {
    Rng rng(14);
    sim::Observation obs = random_obs(rng);
    for (auto& r : obs.lidar_ranges) r = 1.0;  // all distinct from max_range
    std::deque<sim::Observation> frames{obs};
    PerturbationSpec spec;
    spec.occlusion_fraction = 0.3;
    const int expected = static_cast<int>(std::floor(0.3 * kLidar.ray_count));
    const int start = 30;  // wraps around the fan
    const auto out = perturb_observation(spec, rng, frames, start, kLidar);
    int changed = 0;
    for (int i = 0; i < kLidar.ray_count; ++i)
        if (out.lidar_ranges[i] != 1.0) {
            CHECK(out.lidar_ranges[i] == kLidar.max_range);
            ++changed;
        }
    CHECK(changed == expected);
    for (int k = 0; k < expected; ++k)
        CHECK(out.lidar_ranges[(start + k) % kLidar.ray_count] == kLidar.max_range);
}

TEST_CASE("fog never lengthens a ray, and more fog never lengthens any ray") {
    Rng rng(15);
    const sim::Observation obs = random_obs(rng);
    std::deque<sim::Observation> frames{obs};
    PerturbationSpec light, heavy;
    light.fog_density = 0.3;
    heavy.fog_density = 0.7;
    const auto a = perturb_observation(light, rng, frames, 0, kLidar);
    const auto b = perturb_observation(heavy, rng, frames, 0, kLidar);
    for (int i = 0; i < kLidar.ray_count; ++i) {
        CHECK(a.lidar_ranges[i] <= obs.lidar_ranges[i]);
        CHECK(b.lidar_ranges[i] <= a.lidar_ranges[i]);
    }
}

namespace {

double sample_std(const std::vector<double>& samples) {
    const double mean =
        std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size();
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    return std::sqrt(var / (samples.size() - 1));
}

}  // namespace

TEST_CASE("sigma=0.5 noise has the nominal std through the transformer") {
    Rng rng(2718);
    PerturbationSpec spec;
    spec.sensor_noise_sigma = 0.5;
    sim::Observation obs;
    obs.lidar_ranges.assign(kLidar.ray_count, 5.0);  // mid-range
    std::deque<sim::Observation> frames{obs};
    // GPS noise is unclamped, so its empirical std must match sigma directly.
    std::vector<double> gps;
    for (int i = 0; i < 10000; ++i)
        gps.push_back(perturb_observation(spec, rng, frames, 0, kLidar).gps_position.x);
    CHECK(sample_std(gps) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("small lidar noise matches nominal std where clamping is negligible") {
    Rng rng(2719);
    PerturbationSpec spec;
    spec.sensor_noise_sigma = 0.05;  // 0.5 m on a 10 m scale, mid-range ray
    sim::Observation obs;
    obs.lidar_ranges.assign(kLidar.ray_count, 5.0);
    std::deque<sim::Observation> frames{obs};
    std::vector<double> ray;
    for (int i = 0; i < 10000; ++i)
        ray.push_back(perturb_observation(spec, rng, frames, 0, kLidar).lidar_ranges[7]);
    CHECK(sample_std(ray) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("actuator lag shifts the executed stream by k steps") {
    Rng rng(16);
    PerturbationSpec spec;
    spec.actuator_lag_steps = 1;
    std::deque<sim::ControlAction> buffer;
    sim::ControlAction plus{{1, 0, 0}}, minus{{-1, 0, 0}};
    std::vector<sim::ControlAction> executed;
    for (int i = 0; i < 6; ++i) {
        buffer.push_back(i % 2 == 0 ? plus : minus);
        executed.push_back(perturb_action(spec, rng, buffer, 10.0));
    }
    CHECK(executed[0] == sim::ControlAction{});  // cold start
    for (int i = 1; i < 6; ++i)
        CHECK(executed[i] == ((i - 1) % 2 == 0 ? plus : minus));
}

TEST_CASE("lag=3 executes zero for the first three steps") {
    Rng rng(17);
    PerturbationSpec spec;
    spec.actuator_lag_steps = 3;
    std::deque<sim::ControlAction> buffer;
    for (int i = 0; i < 3; ++i) {
        buffer.push_back({{5, 5, 0}});
        CHECK(perturb_action(spec, rng, buffer, 10.0) == sim::ControlAction{});
    }
    buffer.push_back({{5, 5, 0}});
    CHECK(perturb_action(spec, rng, buffer, 10.0) == sim::ControlAction{{5, 5, 0}});
}

TEST_CASE("build_grid: cartesian product in lexicographic order") {
    const GridAxis wind{"wind_speed", {0.0, 2.25, 4.5, 9.0, 18.0}};
    const GridAxis noise{"sensor_noise_sigma", {0.0, 0.25, 0.5}};
    const auto grid = build_grid({wind, noise});
    REQUIRE(grid.size() == 15);
    CHECK(grid[0].spec == PerturbationSpec{});  // cell 0 unperturbed
    CHECK(grid[1].level_indices == std::vector<int>{0, 1});
    CHECK(grid[3].level_indices == std::vector<int>{1, 0});
    CHECK(grid[14].spec.wind_speed == 18.0);
    CHECK(grid[14].spec.sensor_noise_sigma == 0.5);
}

TEST_CASE("build_grid: single wind axis gives the five-cell ladder") {
    const auto grid = build_grid({{"wind_speed", {0.0, 2.25, 4.5, 9.0, 18.0}}});
    REQUIRE(grid.size() == 5);
    CHECK(grid[2].spec.wind_speed == 4.5);
}

TEST_CASE("build_grid: empty axis list yields the baseline cell") {
    const auto grid = build_grid({});
    REQUIRE(grid.size() == 1);
    CHECK(grid[0].spec == PerturbationSpec{});
}

TEST_CASE("build_grid rejects bad axes") {
    CHECK_THROWS_AS(build_grid({{"wind_speed", {0.0, 25.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid({{"wind_speed", {0.0, 2.0}},
                                {"wind_speed", {0.0, 3.0}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_grid({{"no_such_axis", {0.0, 1.0}}}), std::invalid_argument);
    CHECK_THROWS_AS(build_grid({{"wind_speed", {0.0, 2.0, 1.0}}}),
                    std::invalid_argument);
}

TEST_CASE("allocate_replicates: equal variances split evenly") {
    const std::vector<PilotResult> pilot{{4, 4}, {4, 4}, {4, 4}, {4, 4}};
    const auto plan = allocate_replicates(pilot, 100, 5);
    CHECK(std::accumulate(plan.counts.begin(), plan.counts.end(), 0) == 100);
    for (int c : plan.counts) CHECK(c == 25);
}

TEST_CASE("allocate_replicates: highest-variance cell gets the largest share") {
    // p_hat = {1.0, 0.5, 1.0}: weights {0.01, 0.26, 0.01}; remaining 85 splits
    // 3.03../78.9../3.03.. -> counts {8, 84, 8} by largest remainder.
    const std::vector<PilotResult> pilot{{4, 4}, {2, 4}, {4, 4}};
    const auto plan = allocate_replicates(pilot, 100, 5);
    CHECK(std::accumulate(plan.counts.begin(), plan.counts.end(), 0) == 100);
    CHECK(plan.counts[1] > plan.counts[0]);
    CHECK(plan.counts[1] > plan.counts[2]);
    // Exact expected counts from the stated formula.
    const double w0 = 0.01, w1 = 0.25 + 0.01;
    const double total = 2 * w0 + w1;
    const int share1 = static_cast<int>(std::floor(85.0 * w1 / total));
    CHECK(plan.counts[1] >= 5 + share1);
    for (int c : plan.counts) CHECK(c >= 5);
}

TEST_CASE("allocate_replicates: budget conservation on random pilots") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int cells = 2 + static_cast<int>(rng.next_u64() % 10);
        std::vector<PilotResult> pilot;
        for (int c = 0; c < cells; ++c) {
            const int n = 2 + static_cast<int>(rng.next_u64() % 8);
            pilot.push_back({static_cast<int>(rng.next_u64() % (n + 1)), n});
        }
        const int min_rep = 1 + static_cast<int>(rng.next_u64() % 5);
        const int budget = cells * min_rep + static_cast<int>(rng.next_u64() % 200);
        const auto plan = allocate_replicates(pilot, budget, min_rep);
        CHECK(std::accumulate(plan.counts.begin(), plan.counts.end(), 0) == budget);
        for (int c : plan.counts) CHECK(c >= min_rep);
    }
}

TEST_CASE("allocate_replicates rejects an insufficient budget") {
    const std::vector<PilotResult> pilot{{2, 2}, {2, 2}, {2, 2}};
    CHECK_THROWS_AS(allocate_replicates(pilot, 10, 5), std::invalid_argument);
}

TEST_CASE("validate_spec flags out-of-range fields") {
    PerturbationSpec s;
    CHECK(validate_spec(s).empty());
    s.fog_density = 1.5;
    s.sensor_delay_frames = 9;
    CHECK(validate_spec(s).size() == 2);
}
