#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rlstpa/sim.hpp"

namespace rlstpa::policy {

// Black-box observation -> action map. act must be deterministic given the
// observation and internal episode state after reset.
class Policy {
public:
    virtual ~Policy() = default;
    virtual sim::ControlAction act(const sim::Observation& obs) = 0;
    virtual void reset() {}
    virtual std::unique_ptr<Policy> clone() const = 0;
};

struct BaselineParams {
    double k_p = 1.0;          // pull toward target
    double k_d = 2.0;          // velocity damping
    double k_rep = 2.0;        // obstacle repulsion gain
    double k_tan = 1.5;        // tangential steering gain
    double pull_sat = 6.0;     // m, pull saturates beyond this target distance
    double r_influence = 4.0;  // m, repulsion cutoff
    double a_max = 10.0;       // m/s^2
};

// Potential-field controller:
//   accel = k_p*clamp_norm(target_relative, pull_sat) - k_d*imu_velocity
//         + per-ray obstacle terms,
// where a ray with range r < r_influence and weight w = 1/r - 1/r_influence
// contributes k_rep*w/r opposite the ray plus k_tan*w along the ray rotated
// +90 deg in the horizontal plane (steers around obstacles instead of only
// braking). Clamped to a_max; saturated rays contribute nothing.
sim::ControlAction baseline_act(const sim::Observation& obs,
                                const std::vector<Vec3>& ray_directions,
                                const BaselineParams& params);

class BaselinePolicy final : public Policy {
public:
    BaselinePolicy(sim::LidarConfig lidar, BaselineParams params = {});
    sim::ControlAction act(const sim::Observation& obs) override;
    std::unique_ptr<Policy> clone() const override;

private:
    std::vector<Vec3> ray_directions_;
    BaselineParams params_;
};

enum class Activation { Tanh, Relu };

// Dense feed-forward net; hidden activations as declared, output squashed
// with tanh and scaled to a_max. Output dimension is always 3.
struct MlpWeights {
    std::vector<int> layer_dims;             // input, hidden..., 3
    std::vector<std::vector<double>> weights;  // row-major, [out x in] per layer
    std::vector<std::vector<double>> biases;
    std::vector<Activation> activations;     // one per hidden layer
    double a_max = 10.0;

    bool operator==(const MlpWeights&) const = default;
};

// Flattens the observation: lidar ranges, gps, imu velocity, target_relative.
std::vector<double> flatten_observation(const sim::Observation& obs);

// Throws std::invalid_argument on input-dimension mismatch.
sim::ControlAction mlp_act(const MlpWeights& w, const sim::Observation& obs);
std::vector<double> mlp_forward(const MlpWeights& w, const std::vector<double>& input);

// Versioned textual format ("mlpv1" header, layer dims, activations, then
// flat row-major numbers). Round-trips exactly via decimal shortest-repr.
void save_weights(const MlpWeights& w, const std::string& path);
MlpWeights load_weights(const std::string& path);  // throws std::runtime_error

// Validates the dimension chain; throws std::runtime_error when inconsistent.
void validate_weights(const MlpWeights& w);

class MlpPolicy final : public Policy {
public:
    explicit MlpPolicy(MlpWeights w) : weights_(std::move(w)) {}
    sim::ControlAction act(const sim::Observation& obs) override;
    std::unique_ptr<Policy> clone() const override;

private:
    MlpWeights weights_;
};

// "baseline" or "mlp:<weights path>"; throws std::runtime_error otherwise.
std::unique_ptr<Policy> make_policy(const std::string& selector,
                                    const sim::LidarConfig& lidar,
                                    const sim::SimParams& params);

}  // namespace rlstpa::policy
