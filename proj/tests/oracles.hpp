// Test-only reference implementations, independent of the library's analytic
// geometry and vectorized paths.
#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "rlstpa/policy.hpp"
#include "rlstpa/sim.hpp"

namespace oracles {

inline bool inside_cylinder(const rlstpa::Vec3& p, const rlstpa::sim::Obstacle& c) {
    if (p.z < 0.0 || p.z > c.height) return false;
    const double dx = p.x - c.center_xy.x;
    const double dy = p.y - c.center_xy.y;
    return dx * dx + dy * dy <= c.radius * c.radius;
}

// Fine-step ray marching: walk the ray until the point falls inside any
// cylinder, then report the entry distance.
inline double raymarch_range(const rlstpa::Vec3& origin, const rlstpa::Vec3& dir,
                             const std::vector<rlstpa::sim::Obstacle>& obstacles,
                             double max_range, double step = 1e-4) {
    for (double t = step; t <= max_range; t += step) {
        const rlstpa::Vec3 p = origin + dir * t;
        for (const auto& c : obstacles)
            if (inside_cylinder(p, c)) return t;
    }
    return max_range;
}

// Point-to-capped-cylinder distance via dense surface sampling.
inline double sampled_cylinder_distance(const rlstpa::Vec3& p,
                                        const rlstpa::sim::Obstacle& c,
                                        int angular = 720, int axial = 400) {
    if (inside_cylinder(p, c)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int i = 0; i < angular; ++i) {
        const double a = two_pi * i / angular;
        const double sx = c.center_xy.x + c.radius * std::cos(a);
        const double sy = c.center_xy.y + c.radius * std::sin(a);
        // Side wall.
        for (int k = 0; k <= axial; ++k) {
            const double sz = c.height * k / axial;
            const rlstpa::Vec3 s{sx, sy, sz};
            best = std::min(best, (p - s).norm());
        }
        // Caps: radial lines at z = 0 and z = height.
        for (int k = 0; k <= axial; ++k) {
            const double r = c.radius * k / axial;
            const double cx = c.center_xy.x + r * std::cos(a);
            const double cy = c.center_xy.y + r * std::sin(a);
            best = std::min(best, (p - rlstpa::Vec3{cx, cy, 0.0}).norm());
            best = std::min(best, (p - rlstpa::Vec3{cx, cy, c.height}).norm());
        }
    }
    return best;
}

// Plain forward pass written against the weights layout directly, loop by loop.
inline std::vector<double> naive_mlp_forward(const rlstpa::policy::MlpWeights& w,
                                             const std::vector<double>& input) {
    using rlstpa::policy::Activation;
    std::vector<double> x = input;
    for (std::size_t layer = 0; layer + 1 < w.layer_dims.size(); ++layer) {
        const int in_dim = w.layer_dims[layer];
        const int out_dim = w.layer_dims[layer + 1];
        std::vector<double> y;
        for (int i = 0; i < out_dim; ++i) {
            double sum = w.biases[layer][static_cast<std::size_t>(i)];
            for (int j = 0; j < in_dim; ++j)
                sum += w.weights[layer][static_cast<std::size_t>(i * in_dim + j)] * x[j];
            y.push_back(sum);
        }
        const bool last = layer + 2 == w.layer_dims.size();
        for (double& v : y) {
            if (last)
                v = std::tanh(v) * w.a_max;
            else if (w.activations[layer] == Activation::Tanh)
                v = std::tanh(v);
            else
                v = v > 0.0 ? v : 0.0;
        }
        x = y;
    }
    return x;
}

}  // namespace oracles
