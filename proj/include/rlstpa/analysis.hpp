#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "rlstpa/perturb.hpp"
#include "rlstpa/policy.hpp"
#include "rlstpa/scenario.hpp"
#include "rlstpa/sim.hpp"
#include "rlstpa/stpa_model.hpp"

namespace rlstpa::analysis {

struct StepRecord {
    double time = 0.0;
    sim::DroneState state;          // state the action was decided in
    sim::ControlAction commanded;   // policy output
    sim::ControlAction executed;    // after actuator perturbation
    sim::Observation observation;   // what the policy saw (post-perturbation)
    double min_separation = 0.0;    // true geometric clearance
    double d_lidar = 0.0;           // min of observed lidar ranges
    double penalty = 0.0;
    double reward = 0.0;
};

// Per-step log of one episode. The last record is the terminal state with a
// zero action; metrics that concern control cover records [0, size-1).
struct Trajectory {
    std::vector<StepRecord> steps;
    double dt = 0.05;
};

enum class Termination { ReachedTarget, Collision, StepCap, OutOfBounds };
std::string to_string(Termination t);

struct ViolationEvent {
    int start_step = 0;  // record indices, inclusive
    int end_step = 0;
    double min_separation = 0.0;
};

struct UcaEvent {
    std::string uca_id;
    double t_start = 0.0;
    double t_end = 0.0;
    std::string evidence;
};

struct EpisodeResult {
    bool success = false;
    Termination termination = Termination::StepCap;
    double min_separation = 0.0;
    double max_acceleration = 0.0;
    double control_smoothness = 0.0;  // mean |delta commanded accel| per step
    double discounted_return = 0.0;
    std::vector<ViolationEvent> violations;
    std::vector<UcaEvent> uca_events;
    std::uint64_t seed = 0;
};

// Thresholds operationalizing "obstacle avoidance control action" for a
// continuous action space.
struct DetectorParams {
    double trigger_range = 3.0;     // m, obstacle considered "approaching"
    double act_eps = 0.2;           // m/s^2, minimum lateral action to count
    double maneuver_thresh = 2.0;   // m/s^2, "excessive" lateral action
    double ttc_min = 1.0;           // s, minimum safe reaction time
    int persist = 10;               // steps a condition must hold
};

// Minimum-separation penalty: -5*(d_thresh - d_lidar)/d_thresh below the
// threshold, clamped to 0 at or above it. Throws std::domain_error on
// d_thresh <= 0.
double penalty(double d_thresh, double d_lidar);

// Sum of gamma^t * r_t. Requires 0 <= gamma <= 1.
double discounted_return(const std::vector<double>& rewards, double gamma);

struct RateWithCI {
    double rate = 0.0;
    double lo = 0.0;   // Wilson 95% interval
    double hi = 0.0;
};

RateWithCI wilson_interval(int successes, int total);
RateWithCI success_rate(const std::vector<EpisodeResult>& results);  // throws on empty

struct PhaseSegment {
    SubtaskKind phase;
    int begin = 0;  // record indices, [begin, end)
    int end = 0;
};

// Contiguous phase labels covering every record exactly once. Priority:
// ObstacleAvoidance (any observed range < r_influence), then DescentLanding
// (horizontal distance to target < descent_radius and sinking), else
// TakeoffNavigate.
std::vector<PhaseSegment> segment_phases(const Trajectory& traj,
                                         const ScenarioSpec& scenario,
                                         double r_influence = 4.0,
                                         double descent_radius = 3.0);

std::vector<ViolationEvent> find_violations(const Trajectory& traj, double d_thresh);

// Rule-based UCA detection per the four guide words; one primary attribution
// per violation event with precedence UCA-1 > UCA-3 > UCA-4, UCA-2 detected
// independently of violations.
std::vector<UcaEvent> detect_ucas(const Trajectory& traj, const ScenarioSpec& scenario,
                                  const stpa::StpaModel& model,
                                  const DetectorParams& params = {});

struct EpisodeOptions {
    double gamma = 0.99;
    DetectorParams detector;
};

// One closed-loop rollout: observe -> perturb observation -> act -> perturb
// action -> step, until target reach, collision, step cap, or leaving the
// bounding box. All randomness derives from seed.
std::pair<Trajectory, EpisodeResult> run_episode(const ScenarioSpec& scenario,
                                                 policy::Policy& policy,
                                                 const perturb::PerturbationSpec& spec,
                                                 std::uint64_t seed,
                                                 const stpa::StpaModel& model,
                                                 const EpisodeOptions& opts = {});

struct CellStats {
    std::vector<int> level_indices;
    perturb::PerturbationSpec spec;
    int replicates = 0;
    int successes = 0;
    int collisions = 0;
    RateWithCI rate;
    double mean_min_separation = 0.0;
    int violation_episodes = 0;
    std::map<std::string, int> uca_counts;
};

struct SweepResult {
    std::vector<perturb::GridAxis> axes;
    std::vector<CellStats> cells;
    perturb::ReplicatePlan plan;
    std::uint64_t base_seed = 0;
    // Serialized per-episode logs in deterministic (cell, replicate) order;
    // populated only when requested.
    std::vector<std::string> trajectory_logs;
};

struct SweepOptions {
    int jobs = 0;  // 0 = hardware concurrency
    bool keep_trajectories = false;
    EpisodeOptions episode;
};

// Runs plan.counts[c] replicates per grid cell with episode seeds
// hash(base_seed, cell, replicate); aggregation order is fixed, so the result
// is identical for any jobs count.
SweepResult run_sweep(const ScenarioSpec& scenario, const policy::Policy& policy,
                      const std::vector<perturb::GridAxis>& axes,
                      const std::vector<perturb::GridCell>& grid,
                      const perturb::ReplicatePlan& plan, std::uint64_t base_seed,
                      const stpa::StpaModel& model, const SweepOptions& opts = {});

struct AxisBound {
    std::string axis;
    int bound_index = -1;        // highest validated level, -1 = none
    double bound_value = 0.0;
    double rate_at_bound = 0.0;
    std::vector<int> failing_levels;  // beyond the bound, rate < threshold or collisions
};

struct SafetyEnvelope {
    double threshold = 0.95;
    std::vector<AxisBound> axes;
};

// Per axis (other axes at baseline): the longest prefix of levels with
// success rate >= threshold and zero collisions.
SafetyEnvelope derive_envelope(const SweepResult& sweep, double threshold);

struct CurriculumStage {
    std::string axis;
    double level_value = 0.0;
    long long training_steps = 3000000;
    std::vector<std::string> uca_ids;     // UCAs observed at this level
    std::vector<std::string> hazard_ids;  // hazards those UCAs link to
};

struct CountermeasurePlan {
    bool satisfied = false;  // all safety criteria met; iteration terminates
    std::vector<CurriculumStage> stages;
    bool min_separation_penalty = false;  // reward-shaping recommendation
    std::vector<std::string> penalty_uca_ids;
    std::vector<std::string> penalty_hazard_ids;
};

CountermeasurePlan recommend_countermeasures(const SweepResult& sweep,
                                             const SafetyEnvelope& envelope,
                                             const stpa::StpaModel& model);

}  // namespace rlstpa::analysis
