#include "rlstpa/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rlstpa/report.hpp"

namespace rlstpa::analysis {

namespace {

// Clearance channel cap so logs stay finite in obstacle-free scenarios.
constexpr double kSeparationCap = 1000.0;

}  // namespace

std::string to_string(Termination t) {
    switch (t) {
        case Termination::ReachedTarget: return "ReachedTarget";
        case Termination::Collision: return "Collision";
        case Termination::StepCap: return "StepCap";
        case Termination::OutOfBounds: return "OutOfBounds";
    }
    throw std::logic_error("bad Termination");
}

double penalty(double d_thresh, double d_lidar) {
    if (d_thresh <= 0.0) throw std::domain_error("penalty: d_thresh must be positive");
    if (d_lidar >= d_thresh) return 0.0;
    return -5.0 * (d_thresh - d_lidar) / d_thresh;
}

double discounted_return(const std::vector<double>& rewards, double gamma) {
    if (gamma < 0.0 || gamma > 1.0)
        throw std::invalid_argument("discounted_return: gamma must be in [0, 1]");
    double acc = 0.0;
    double g = 1.0;
    for (double r : rewards) {
        acc += g * r;
        g *= gamma;
    }
    return acc;
}

RateWithCI wilson_interval(int successes, int total) {
    if (total <= 0) throw std::invalid_argument("wilson_interval: empty sample");
    constexpr double z = 1.959963984540054;  // 95%
    const double n = total;
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

RateWithCI success_rate(const std::vector<EpisodeResult>& results) {
    if (results.empty()) throw std::invalid_argument("success_rate: empty input");
    int s = 0;
    for (const auto& r : results) s += r.success ? 1 : 0;
    return wilson_interval(s, static_cast<int>(results.size()));
}

std::vector<PhaseSegment> segment_phases(const Trajectory& traj,
                                         const ScenarioSpec& scenario,
                                         double r_influence, double descent_radius) {
    if (traj.steps.empty())
        throw std::invalid_argument("segment_phases: empty trajectory");

    auto label = [&](const StepRecord& rec) {
        for (double r : rec.observation.lidar_ranges)
            if (r < r_influence) return SubtaskKind::ObstacleAvoidance;
        const Vec3 to_target = scenario.target - rec.state.position;
        if (to_target.norm_xy() < descent_radius && rec.state.velocity.z < 0.0)
            return SubtaskKind::DescentLanding;
        return SubtaskKind::TakeoffNavigate;
    };

    std::vector<PhaseSegment> segments;
    for (int i = 0; i < static_cast<int>(traj.steps.size()); ++i) {
        const SubtaskKind phase = label(traj.steps[i]);
        if (!segments.empty() && segments.back().phase == phase)
            segments.back().end = i + 1;
        else
            segments.push_back({phase, i, i + 1});
    }
    return segments;
}

std::vector<ViolationEvent> find_violations(const Trajectory& traj, double d_thresh) {
    std::vector<ViolationEvent> events;
    bool open = false;
    for (int i = 0; i < static_cast<int>(traj.steps.size()); ++i) {
        const double sep = traj.steps[i].min_separation;
        if (sep < d_thresh) {
            if (!open) {
                events.push_back({i, i, sep});
                open = true;
            } else {
                events.back().end_step = i;
                events.back().min_separation = std::min(events.back().min_separation, sep);
            }
        } else {
            open = false;
        }
    }
    return events;
}

namespace {

// Lateral (avoidance) component: action magnitude perpendicular to the
// current velocity. A near-hover drone has no travel direction, so the whole
// action counts.
double lateral_magnitude(const Vec3& accel, const Vec3& velocity) {
    const double speed = velocity.norm();
    if (speed < 1e-3) return accel.norm();
    const Vec3 v_hat = velocity / speed;
    const Vec3 lateral = accel - v_hat * accel.dot(v_hat);
    return lateral.norm();
}

std::string format_evidence(std::initializer_list<std::pair<const char*, double>> kv) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, v] : kv) {
        if (!first) os << ", ";
        os << k << "=" << v;
        first = false;
    }
    return os.str();
}

}  // namespace

std::vector<UcaEvent> detect_ucas(const Trajectory& traj, const ScenarioSpec& scenario,
                                  const stpa::StpaModel& model,
                                  const DetectorParams& p) {
    const int n = static_cast<int>(traj.steps.size());
    std::vector<UcaEvent> events;
    if (n == 0) return events;

    std::vector<double> lateral(n), d(n), closing(n, 0.0), min_range(n);
    for (int i = 0; i < n; ++i) {
        const StepRecord& rec = traj.steps[i];
        lateral[i] = lateral_magnitude(rec.executed.accel_command, rec.state.velocity);
        d[i] = rec.d_lidar;
        min_range[i] = rec.observation.lidar_ranges.empty()
                           ? std::numeric_limits<double>::infinity()
                           : *std::min_element(rec.observation.lidar_ranges.begin(),
                                               rec.observation.lidar_ranges.end());
        if (i > 0) closing[i] = (d[i - 1] - d[i]) / traj.dt;
    }

    auto push = [&](const std::string& id, int a, int b, std::string evidence) {
        if (!model.find_uca(id)) return;  // model without that UCA: skip the rule
        events.push_back({id, traj.steps[a].time, traj.steps[b].time,
                          std::move(evidence)});
    };

    // One primary attribution per minimum-separation violation event,
    // precedence UCA-1 > UCA-3 > UCA-4. UCA-4 is the fallback: avoidance was
    // attempted (or the approach was too brief to call it absent) and the
    // separation was violated regardless.
    for (const ViolationEvent& v : find_violations(traj, scenario.d_thresh)) {
        int w_start = v.start_step;
        while (w_start > 0 && d[w_start - 1] < p.trigger_range) --w_start;

        bool any_closing = false;
        int first_avoid = -1;
        for (int i = w_start; i <= v.end_step; ++i) {
            if (closing[i] > 0.0) any_closing = true;
            if (first_avoid < 0 && lateral[i] >= p.act_eps) first_avoid = i;
        }
        const int window_len = v.start_step - w_start + 1;

        if (first_avoid < 0 && any_closing && window_len >= p.persist) {
            push("UCA-1", w_start, v.end_step,
                 "no lateral avoidance on approach: " +
                     format_evidence({{"approach_steps", window_len},
                                      {"min_separation", v.min_separation},
                                      {"act_eps", p.act_eps}}));
        } else if (first_avoid >= 0 && closing[first_avoid] > 0.0 &&
                   d[first_avoid] / closing[first_avoid] < p.ttc_min) {
            push("UCA-3", w_start, v.end_step,
                 "avoidance began too late: " +
                     format_evidence(
                         {{"ttc_at_first_avoidance",
                           d[first_avoid] / closing[first_avoid]},
                          {"ttc_min", p.ttc_min},
                          {"min_separation", v.min_separation}}));
        } else {
            push("UCA-4", w_start, v.end_step,
                 "avoidance magnitude insufficient: " +
                     format_evidence(
                         {{"peak_lateral",
                           *std::max_element(lateral.begin() + w_start,
                                             lateral.begin() + v.end_step + 1)},
                          {"min_separation", v.min_separation},
                          {"d_thresh", scenario.d_thresh}}));
        }
    }

    // UCA-2: sustained strong maneuver with no obstacle inside trigger range.
    int run_start = -1;
    auto flush_run = [&](int end_exclusive) {
        if (run_start >= 0 && end_exclusive - run_start >= p.persist) {
            double peak = 0.0;
            for (int i = run_start; i < end_exclusive; ++i)
                peak = std::max(peak, lateral[i]);
            push("UCA-2", run_start, end_exclusive - 1,
                 "sustained maneuver in open space: " +
                     format_evidence({{"steps", end_exclusive - run_start},
                                      {"peak_lateral", peak},
                                      {"maneuver_thresh", p.maneuver_thresh}}));
        }
        run_start = -1;
    };
    for (int i = 0; i < n; ++i) {
        const bool active =
            lateral[i] >= p.maneuver_thresh && min_range[i] >= p.trigger_range;
        if (active && run_start < 0) run_start = i;
        if (!active) flush_run(i);
    }
    flush_run(n);

    return events;
}

std::pair<Trajectory, EpisodeResult> run_episode(const ScenarioSpec& scenario,
                                                 policy::Policy& policy,
                                                 const perturb::PerturbationSpec& spec,
                                                 std::uint64_t seed,
                                                 const stpa::StpaModel& model,
                                                 const EpisodeOptions& opts) {
    Rng rng(seed);
    policy.reset();

    // Episode-level draws come first so per-step streams are stable.
    const int occlusion_start =
        static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(
                                              std::max(1, scenario.lidar.ray_count)));
    const double dyn_angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

    std::vector<sim::Obstacle> obstacles = scenario.obstacles;
    if (spec.dynamic_obstacle_speed > 0.0) {
        const Vec2 dir{std::cos(dyn_angle), std::sin(dyn_angle)};
        for (auto& o : obstacles)
            o.velocity_xy = dir * spec.dynamic_obstacle_speed;
    }

    sim::WindField wind;
    wind.mean = Vec3{spec.wind_direction.x, spec.wind_direction.y, 0.0} * spec.wind_speed;
    wind.turbulence_sigma = 0.1 * spec.wind_speed;

    std::vector<Vec3> ray_dirs;
    ray_dirs.reserve(scenario.lidar.ray_count);
    for (int i = 0; i < scenario.lidar.ray_count; ++i)
        ray_dirs.push_back(sim::lidar_ray_direction(scenario.lidar, i));

    auto observe = [&](const sim::DroneState& st) {
        sim::Observation obs;
        obs.lidar_ranges =
            sim::raycast_lidar(st, obstacles, ray_dirs, scenario.lidar.max_range);
        obs.gps_position = st.position;
        obs.imu_velocity = st.velocity;
        obs.target_relative = scenario.target - st.position;
        return obs;
    };
    auto clearance = [&](const sim::DroneState& st) {
        return std::min(sim::min_separation(st, obstacles), kSeparationCap);
    };

    std::deque<sim::Observation> frame_buffer;
    std::deque<sim::ControlAction> action_buffer;
    const std::size_t buffer_cap = 6;

    sim::DroneState state{scenario.start, {}, 0.0};
    Trajectory traj;
    traj.dt = scenario.dt;
    Termination termination = Termination::StepCap;

    auto reached = [&](const sim::DroneState& st) {
        if ((st.position - scenario.target).norm() > scenario.success_radius)
            return false;
        return scenario.kind != SubtaskKind::DescentLanding ||
               st.velocity.norm() <= scenario.touchdown_speed;
    };
    auto out_of_bounds = [&](const sim::DroneState& st) {
        return std::abs(st.position.x) > scenario.bounds_radius ||
               std::abs(st.position.y) > scenario.bounds_radius ||
               st.position.z > scenario.bounds_radius;
    };

    bool terminated = false;
    for (int i = 0; i < scenario.step_cap && !terminated; ++i) {
        const sim::Observation raw = observe(state);
        frame_buffer.push_back(raw);
        if (frame_buffer.size() > buffer_cap) frame_buffer.pop_front();

        const sim::Observation seen = perturb::perturb_observation(
            spec, rng, frame_buffer, occlusion_start, scenario.lidar);

        sim::ControlAction commanded = policy.act(seen);
        commanded.accel_command =
            clamp_norm(commanded.accel_command, scenario.params.a_max);
        action_buffer.push_back(commanded);
        if (action_buffer.size() > buffer_cap) action_buffer.pop_front();

        const sim::ControlAction executed =
            perturb::perturb_action(spec, rng, action_buffer, scenario.params.a_max);

        StepRecord rec;
        rec.time = state.time;
        rec.state = state;
        rec.commanded = commanded;
        rec.executed = executed;
        rec.observation = seen;
        rec.min_separation = clearance(state);
        rec.d_lidar = seen.lidar_ranges.empty()
                          ? scenario.lidar.max_range
                          : *std::min_element(seen.lidar_ranges.begin(),
                                              seen.lidar_ranges.end());
        rec.penalty = penalty(scenario.d_thresh, rec.d_lidar);
        rec.reward = rec.penalty;
        traj.steps.push_back(std::move(rec));

        state = sim::step(state, executed, wind, scenario.params, scenario.dt, rng);
        for (auto& o : obstacles) o.center_xy = o.center_xy + o.velocity_xy * scenario.dt;

        if (reached(state)) {
            termination = Termination::ReachedTarget;
            terminated = true;
        } else if (sim::min_separation(state, obstacles) <= 0.0) {
            termination = Termination::Collision;
            terminated = true;
        } else if (out_of_bounds(state)) {
            termination = Termination::OutOfBounds;
            terminated = true;
        }
    }

    // Terminal record: final state, zero action.
    {
        const sim::Observation raw = observe(state);
        StepRecord rec;
        rec.time = state.time;
        rec.state = state;
        rec.observation = raw;
        rec.min_separation = clearance(state);
        rec.d_lidar = raw.lidar_ranges.empty()
                          ? scenario.lidar.max_range
                          : *std::min_element(raw.lidar_ranges.begin(),
                                              raw.lidar_ranges.end());
        rec.penalty = penalty(scenario.d_thresh, rec.d_lidar);
        rec.reward = rec.penalty;
        traj.steps.push_back(std::move(rec));
    }

    EpisodeResult result;
    result.seed = seed;
    result.termination = termination;
    result.success = termination == Termination::ReachedTarget;

    result.min_separation = std::numeric_limits<double>::infinity();
    std::vector<double> rewards;
    rewards.reserve(traj.steps.size());
    for (const auto& rec : traj.steps) {
        result.min_separation = std::min(result.min_separation, rec.min_separation);
        rewards.push_back(rec.reward);
    }
    const int control_steps = static_cast<int>(traj.steps.size()) - 1;
    for (int i = 0; i < control_steps; ++i)
        result.max_acceleration = std::max(
            result.max_acceleration, traj.steps[i].executed.accel_command.norm());
    if (control_steps > 1) {
        double acc = 0.0;
        for (int i = 1; i < control_steps; ++i)
            acc += (traj.steps[i].commanded.accel_command -
                    traj.steps[i - 1].commanded.accel_command)
                       .norm();
        result.control_smoothness = acc / (control_steps - 1);
    }
    result.discounted_return = discounted_return(rewards, opts.gamma);
    result.violations = find_violations(traj, scenario.d_thresh);
    result.uca_events = detect_ucas(traj, scenario, model, opts.detector);
    return {std::move(traj), std::move(result)};
}

SweepResult run_sweep(const ScenarioSpec& scenario, const policy::Policy& policy,
                      const std::vector<perturb::GridAxis>& axes,
                      const std::vector<perturb::GridCell>& grid,
                      const perturb::ReplicatePlan& plan, std::uint64_t base_seed,
                      const stpa::StpaModel& model, const SweepOptions& opts) {
    if (plan.counts.size() != grid.size())
        throw std::invalid_argument("run_sweep: plan does not cover the grid");

    struct Job {
        int cell;
        int replicate;
    };
    std::vector<Job> jobs_list;
    for (int c = 0; c < static_cast<int>(grid.size()); ++c)
        for (int r = 0; r < plan.counts[c]; ++r) jobs_list.push_back({c, r});

    std::vector<EpisodeResult> results(jobs_list.size());
    std::vector<std::string> logs(opts.keep_trajectories ? jobs_list.size() : 0);

    const int n_threads = std::max(
        1, opts.jobs > 0 ? opts.jobs
                         : static_cast<int>(std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        auto local_policy = policy.clone();
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs_list.size()) break;
            const Job job = jobs_list[k];
            const std::uint64_t seed = episode_seed(base_seed, job.cell, job.replicate);
            auto [traj, result] = run_episode(scenario, *local_policy,
                                              grid[job.cell].spec, seed, model,
                                              opts.episode);
            if (opts.keep_trajectories) logs[k] = report::trajectory_jsonl(traj);
            results[k] = std::move(result);
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Merge in deterministic cell/replicate order (jobs_list is already sorted).
    SweepResult sweep;
    sweep.axes = axes;
    sweep.plan = plan;
    sweep.base_seed = base_seed;
    sweep.trajectory_logs = std::move(logs);
    sweep.cells.resize(grid.size());
    std::size_t k = 0;
    for (int c = 0; c < static_cast<int>(grid.size()); ++c) {
        CellStats& cell = sweep.cells[c];
        cell.level_indices = grid[c].level_indices;
        cell.spec = grid[c].spec;
        cell.replicates = plan.counts[c];
        double sep_sum = 0.0;
        for (int r = 0; r < plan.counts[c]; ++r, ++k) {
            const EpisodeResult& res = results[k];
            cell.successes += res.success ? 1 : 0;
            cell.collisions += res.termination == Termination::Collision ? 1 : 0;
            cell.violation_episodes += res.violations.empty() ? 0 : 1;
            sep_sum += res.min_separation;
            for (const auto& ev : res.uca_events) cell.uca_counts[ev.uca_id] += 1;
        }
        cell.rate = wilson_interval(cell.successes, cell.replicates);
        cell.mean_min_separation = cell.replicates > 0 ? sep_sum / cell.replicates : 0.0;
    }
    return sweep;
}

namespace {

// Cells scanning one axis with every other axis at its baseline level,
// ordered by level index.
std::vector<const CellStats*> axis_scan(const SweepResult& sweep, std::size_t axis) {
    std::vector<const CellStats*> scan(sweep.axes[axis].levels.size(), nullptr);
    for (const CellStats& cell : sweep.cells) {
        bool on_axis = true;
        for (std::size_t b = 0; b < sweep.axes.size(); ++b)
            if (b != axis && cell.level_indices[b] != 0) on_axis = false;
        if (on_axis) scan[cell.level_indices[axis]] = &cell;
    }
    return scan;
}

}  // namespace

SafetyEnvelope derive_envelope(const SweepResult& sweep, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0)
        throw std::invalid_argument("derive_envelope: threshold must be in (0, 1]");

    SafetyEnvelope env;
    env.threshold = threshold;
    for (std::size_t a = 0; a < sweep.axes.size(); ++a) {
        AxisBound bound;
        bound.axis = sweep.axes[a].name;
        const auto scan = axis_scan(sweep, a);

        int k = -1;
        for (std::size_t lvl = 0; lvl < scan.size(); ++lvl) {
            const CellStats* cell = scan[lvl];
            if (!cell || cell->rate.rate < threshold || cell->collisions > 0) break;
            k = static_cast<int>(lvl);
        }
        bound.bound_index = k;
        if (k >= 0) {
            bound.bound_value = sweep.axes[a].levels[k];
            bound.rate_at_bound = scan[k]->rate.rate;
        }
        for (std::size_t lvl = k + 1; lvl < scan.size(); ++lvl) {
            const CellStats* cell = scan[lvl];
            if (!cell || cell->rate.rate < threshold || cell->collisions > 0)
                bound.failing_levels.push_back(static_cast<int>(lvl));
        }
        env.axes.push_back(std::move(bound));
    }
    return env;
}

CountermeasurePlan recommend_countermeasures(const SweepResult& sweep,
                                             const SafetyEnvelope& envelope,
                                             const stpa::StpaModel& model) {
    CountermeasurePlan plan;

    std::map<std::string, int> total_ucas;
    int total_violation_episodes = 0;
    for (const CellStats& cell : sweep.cells) {
        total_violation_episodes += cell.violation_episodes;
        for (const auto& [id, count] : cell.uca_counts) total_ucas[id] += count;
    }

    for (std::size_t a = 0; a < sweep.axes.size(); ++a) {
        const auto scan = axis_scan(sweep, a);
        for (int lvl : envelope.axes[a].failing_levels) {
            CurriculumStage stage;
            stage.axis = sweep.axes[a].name;
            stage.level_value = sweep.axes[a].levels[lvl];
            if (const CellStats* cell = scan[lvl]) {
                std::set<std::string> hazards;
                for (const auto& [id, count] : cell->uca_counts) {
                    if (count == 0) continue;
                    stage.uca_ids.push_back(id);
                    if (const auto* uca = model.find_uca(id))
                        hazards.insert(uca->linked_hazards.begin(),
                                       uca->linked_hazards.end());
                }
                stage.hazard_ids.assign(hazards.begin(), hazards.end());
            }
            plan.stages.push_back(std::move(stage));
        }
    }

    // Reward shaping: reinforce the minimum-separation penalty whenever the
    // separation requirement was breached or insufficient-magnitude avoidance
    // was observed.
    if (total_violation_episodes > 0 || total_ucas.count("UCA-4")) {
        plan.min_separation_penalty = true;
        std::set<std::string> hazards;
        for (const auto& [id, count] : total_ucas) {
            if (count == 0) continue;
            plan.penalty_uca_ids.push_back(id);
            if (const auto* uca = model.find_uca(id))
                hazards.insert(uca->linked_hazards.begin(), uca->linked_hazards.end());
        }
        plan.penalty_hazard_ids.assign(hazards.begin(), hazards.end());
    }

    plan.satisfied = plan.stages.empty() && !plan.min_separation_penalty;
    return plan;
}

}  // namespace rlstpa::analysis
