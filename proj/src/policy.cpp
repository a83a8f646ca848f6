#include "rlstpa/policy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace rlstpa::policy {

sim::ControlAction baseline_act(const sim::Observation& obs,
                                const std::vector<Vec3>& ray_directions,
                                const BaselineParams& p) {
    Vec3 accel = clamp_norm(obs.target_relative, p.pull_sat) * p.k_p -
                 obs.imu_velocity * p.k_d;
    for (std::size_t i = 0; i < obs.lidar_ranges.size() && i < ray_directions.size();
         ++i) {
        const double r = obs.lidar_ranges[i];
        if (r < p.r_influence) {
            const double w = 1.0 / r - 1.0 / p.r_influence;
            const Vec3& dir = ray_directions[i];
            accel += dir * (-p.k_rep * w / r);
            accel += Vec3{-dir.y, dir.x, 0.0} * (p.k_tan * w);
        }
    }
    return {clamp_norm(accel, p.a_max)};
}

BaselinePolicy::BaselinePolicy(sim::LidarConfig lidar, BaselineParams params)
    : params_(params) {
    ray_directions_.reserve(lidar.ray_count);
    for (int i = 0; i < lidar.ray_count; ++i)
        ray_directions_.push_back(sim::lidar_ray_direction(lidar, i));
}

sim::ControlAction BaselinePolicy::act(const sim::Observation& obs) {
    return baseline_act(obs, ray_directions_, params_);
}

std::unique_ptr<Policy> BaselinePolicy::clone() const {
    return std::make_unique<BaselinePolicy>(*this);
}

std::vector<double> flatten_observation(const sim::Observation& obs) {
    std::vector<double> v = obs.lidar_ranges;
    for (const Vec3* f : {&obs.gps_position, &obs.imu_velocity, &obs.target_relative}) {
        v.push_back(f->x);
        v.push_back(f->y);
        v.push_back(f->z);
    }
    return v;
}

std::vector<double> mlp_forward(const MlpWeights& w, const std::vector<double>& input) {
    if (static_cast<int>(input.size()) != w.layer_dims.front())
        throw std::invalid_argument("mlp_forward: input dimension mismatch");

    std::vector<double> x = input;
    const std::size_t n_layers = w.weights.size();
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in_dim = w.layer_dims[l];
        const int out_dim = w.layer_dims[l + 1];
        std::vector<double> y(out_dim);
        for (int i = 0; i < out_dim; ++i) {
            double acc = w.biases[l][i];
            const double* row = &w.weights[l][static_cast<std::size_t>(i) * in_dim];
            for (int j = 0; j < in_dim; ++j) acc += row[j] * x[j];
            y[i] = acc;
        }
        if (l + 1 < n_layers) {
            const Activation act = w.activations[l];
            for (double& v : y)
                v = (act == Activation::Tanh) ? std::tanh(v) : std::max(v, 0.0);
        } else {
            for (double& v : y) v = std::tanh(v) * w.a_max;
        }
        x = std::move(y);
    }
    return x;
}

sim::ControlAction mlp_act(const MlpWeights& w, const sim::Observation& obs) {
    const std::vector<double> out = mlp_forward(w, flatten_observation(obs));
    return {{out[0], out[1], out[2]}};
}

void validate_weights(const MlpWeights& w) {
    if (w.layer_dims.size() < 2)
        throw std::runtime_error("weights: need at least input and output dims");
    if (w.layer_dims.back() != 3)
        throw std::runtime_error("weights: output dimension must be 3");
    const std::size_t n_layers = w.layer_dims.size() - 1;
    if (w.weights.size() != n_layers || w.biases.size() != n_layers)
        throw std::runtime_error("weights: layer count mismatch");
    if (w.activations.size() != n_layers - 1)
        throw std::runtime_error("weights: need one activation per hidden layer");
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int in_dim = w.layer_dims[l];
        const int out_dim = w.layer_dims[l + 1];
        if (in_dim <= 0 || out_dim <= 0)
            throw std::runtime_error("weights: non-positive layer dimension");
        if (w.weights[l].size() != static_cast<std::size_t>(in_dim) * out_dim)
            throw std::runtime_error("weights: matrix shape mismatch at layer " +
                                     std::to_string(l));
        if (w.biases[l].size() != static_cast<std::size_t>(out_dim))
            throw std::runtime_error("weights: bias shape mismatch at layer " +
                                     std::to_string(l));
        for (double v : w.weights[l])
            if (!std::isfinite(v)) throw std::runtime_error("weights: non-finite value");
        for (double v : w.biases[l])
            if (!std::isfinite(v)) throw std::runtime_error("weights: non-finite value");
    }
}

void save_weights(const MlpWeights& w, const std::string& path) {
    validate_weights(w);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write weights file: " + path);
    out << std::setprecision(17);
    out << "mlpv1\n";
    out << "dims";
    for (int d : w.layer_dims) out << ' ' << d;
    out << "\nactivations";
    for (Activation a : w.activations)
        out << ' ' << (a == Activation::Tanh ? "tanh" : "relu");
    out << "\na_max " << w.a_max << "\n";
    for (std::size_t l = 0; l < w.weights.size(); ++l) {
        out << "layer " << l << "\n";
        for (double v : w.weights[l]) out << v << '\n';
        for (double v : w.biases[l]) out << v << '\n';
    }
}

MlpWeights load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open weights file: " + path);

    auto fail = [&](const std::string& msg) -> void {
        throw std::runtime_error("weights parse error (" + path + "): " + msg);
    };

    std::string tok;
    if (!(in >> tok) || tok != "mlpv1") fail("missing mlpv1 header");

    MlpWeights w;
    if (!(in >> tok) || tok != "dims") fail("missing dims");
    std::string line;
    std::getline(in, line);
    std::istringstream ds(line);
    int d;
    while (ds >> d) w.layer_dims.push_back(d);
    if (w.layer_dims.size() < 2) fail("too few layer dims");

    if (!(in >> tok) || tok != "activations") fail("missing activations");
    std::getline(in, line);
    std::istringstream as(line);
    while (as >> tok) {
        if (tok == "tanh")
            w.activations.push_back(Activation::Tanh);
        else if (tok == "relu")
            w.activations.push_back(Activation::Relu);
        else
            fail("unknown activation: " + tok);
    }

    if (!(in >> tok) || tok != "a_max" || !(in >> w.a_max)) fail("missing a_max");

    const std::size_t n_layers = w.layer_dims.size() - 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        std::size_t idx;
        if (!(in >> tok) || tok != "layer" || !(in >> idx) || idx != l)
            fail("missing layer " + std::to_string(l) + " block");
        const std::size_t wn =
            static_cast<std::size_t>(w.layer_dims[l]) * w.layer_dims[l + 1];
        std::vector<double> mat(wn), bias(w.layer_dims[l + 1]);
        for (double& v : mat)
            if (!(in >> v)) fail("truncated weight matrix in layer " + std::to_string(l));
        for (double& v : bias)
            if (!(in >> v)) fail("truncated bias in layer " + std::to_string(l));
        w.weights.push_back(std::move(mat));
        w.biases.push_back(std::move(bias));
    }
    validate_weights(w);
    return w;
}

sim::ControlAction MlpPolicy::act(const sim::Observation& obs) {
    return mlp_act(weights_, obs);
}

std::unique_ptr<Policy> MlpPolicy::clone() const {
    return std::make_unique<MlpPolicy>(*this);
}

std::unique_ptr<Policy> make_policy(const std::string& selector,
                                    const sim::LidarConfig& lidar,
                                    const sim::SimParams& params) {
    if (selector == "baseline") {
        BaselineParams bp;
        bp.a_max = params.a_max;
        return std::make_unique<BaselinePolicy>(lidar, bp);
    }
    if (selector.rfind("mlp:", 0) == 0) {
        MlpWeights w = load_weights(selector.substr(4));
        w.a_max = params.a_max;
        return std::make_unique<MlpPolicy>(std::move(w));
    }
    throw std::runtime_error("unknown policy selector: " + selector);
}

}  // namespace rlstpa::policy
