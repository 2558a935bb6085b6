#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "pointpolicy/policy/config.hpp"
#include "pointpolicy/policy/loss.hpp"
#include "pointpolicy/policy/network.hpp"

namespace pointpolicy::policy {

struct GradientCheckReport {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    long checked = 0;
};

/// Compares backpropagated gradients of the behaviour-cloning loss with central differences for
/// every parameter of a double-precision network on random inputs and targets.
///
/// Relative error per element is |a - n| / max(|a|, |n|, floor); the floor keeps elements whose
/// gradient is numerically zero from dominating.
inline GradientCheckReport gradient_check(const PolicyConfig& config, std::uint64_t seed, int batch = 2,
                                          double step = 1e-4, double floor = 1e-6) {
    const TrackTransformer<double> net(config);
    std::mt19937_64 rng(seed);
    ParameterSet<double> p = net.make_parameters();
    // Larger-than-default weights so every path carries a non-trivial gradient.
    for (auto& t : p.tensors()) {
        fill_normal(t.value, 0.3, rng);
        if (t.name.ends_with(".gain")) t.value.array() += 1.0;
    }
    std::normal_distribution<double> n(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    NetworkInput<double> x;
    x.points = Mat<double>::NullaryExpr(3 * config.history, batch * config.num_point_tokens(), [&] { return n(rng); });
    x.gripper.resize(batch);
    for (int b = 0; b < batch; ++b) x.gripper(b) = coin(rng) ? 1.0 : -1.0;
    const Mat<double> target_tracks =
        Mat<double>::NullaryExpr(3 * config.chunk, batch * config.num_robot_points, [&] { return n(rng); });
    const Mat<double> target_gripper = Mat<double>::NullaryExpr(config.chunk, batch, [&] { return coin(rng) ? 1.0 : 0.0; });
    const double wg = kDefaultGripperLossWeight;

    auto loss = [&](const ParameterSet<double>& params) {
        return bc_loss<double>(net.forward(params, x), target_tracks, target_gripper, 1.0, wg).total;
    };

    typename TrackTransformer<double>::Cache cache;
    Mat<double> d_tracks;
    Mat<double> d_logits;
    bc_loss<double>(net.forward(p, x, &cache), target_tracks, target_gripper, 1.0, wg, &d_tracks, &d_logits);
    ParameterSet<double> g = p.zeros_like();
    net.backward(p, cache, d_tracks, d_logits, g);

    GradientCheckReport report;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const int k = static_cast<int>(i);
        for (Eigen::Index e = 0; e < p[k].size(); ++e) {
            const double orig = p[k](e);
            p[k](e) = orig + step;
            const double up = loss(p);
            p[k](e) = orig - step;
            const double down = loss(p);
            p[k](e) = orig;
            const double numeric = (up - down) / (2.0 * step);
            const double analytic = g[k](e);
            const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
            if (rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_parameter = p.tensors()[i].name + "[" + std::to_string(e) + "]";
            }
            ++report.checked;
        }
    }
    return report;
}

/// The small instance used for gradient verification: width 16, two blocks.
inline PolicyConfig gradient_check_config() {
    PolicyConfig c;
    c.history = 3;
    c.chunk = 4;
    c.hidden = 16;
    c.layers = 2;
    c.heads = 2;
    c.mlp_ratio = 2;
    c.num_robot_points = 3;
    c.num_object_points = 2;
    return c;
}

}  // namespace pointpolicy::policy
