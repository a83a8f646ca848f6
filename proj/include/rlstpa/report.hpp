#pragma once

#include <cstdint>
#include <string>

#include "rlstpa/analysis.hpp"

namespace rlstpa::report {

// 64-bit FNV-1a, hex-encoded; used to stamp output documents with the
// originating config.
std::string fnv1a_hex(const std::string& data);

struct Provenance {
    std::string config_hash;
    std::uint64_t base_seed = 0;
};

// One step per line, line-delimited JSON.
std::string trajectory_jsonl(const analysis::Trajectory& traj);

std::string episode_summary(const analysis::EpisodeResult& result,
                            const Provenance& prov);

// Leading '#' metadata lines (provenance, axes, plan), then a header row and
// one row per grid cell.
std::string sweep_csv(const analysis::SweepResult& sweep, const Provenance& prov);
analysis::SweepResult parse_sweep_csv(const std::string& text);  // throws on malformed input

std::string envelope_document(const analysis::SafetyEnvelope& envelope,
                              const analysis::SweepResult& sweep,
                              const Provenance& prov);

std::string plan_document(const analysis::CountermeasurePlan& plan,
                          const analysis::SafetyEnvelope& envelope,
                          const stpa::StpaModel& model, const Provenance& prov);

// Top-down SVG: flight path, obstacle footprints, d_thresh circles.
std::string trajectory_svg(const analysis::Trajectory& traj,
                           const analysis::ScenarioSpec& scenario);

void write_file(const std::string& path, const std::string& content);

}  // namespace rlstpa::report
