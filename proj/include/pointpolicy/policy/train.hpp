#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "pointpolicy/dataio/dataset.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/config.hpp"
#include "pointpolicy/policy/loss.hpp"
#include "pointpolicy/policy/network.hpp"
#include "pointpolicy/policy/policy.hpp"

namespace pointpolicy::policy {

/// Normalized training tensors for a minibatch.
template <typename T>
struct Batch {
    NetworkInput<T> input;
    Mat<T> target_tracks;   // (3L) x (B * N_r)
    Mat<T> target_gripper;  // L x B
};

/// Normalized copies of every demo frame, built once so batches are plain copies.
class BatchBuilder {
public:
    explicit BatchBuilder(const dataio::Dataset& ds) : ds_(ds) {
        frames_.resize(ds.demos.size());
        for (std::size_t d = 0; d < ds.demos.size(); ++d) {
            for (const auto& f : ds.demos[d].frames) frames_[d].push_back(ds.stats.normalize(*f.points3d).cast<float>());
        }
    }

    Batch<float> make(const std::vector<dataio::Sample>& samples) const {
        const int h = ds_.config.history;
        const int l = ds_.config.chunk;
        const int nr = ds_.num_robot_points;
        const int np = nr + ds_.num_object_points;
        const auto b = static_cast<Eigen::Index>(samples.size());
        Batch<float> out;
        out.input.points.resize(3 * h, b * np);
        out.input.gripper.resize(b);
        out.target_tracks.resize(3 * l, b * nr);
        out.target_gripper.resize(l, b);
        for (Eigen::Index s = 0; s < b; ++s) {
            const auto& smp = samples[static_cast<std::size_t>(s)];
            const auto& demo = frames_[static_cast<std::size_t>(smp.demo)];
            for (int i = 0; i < h; ++i) {
                const auto& f = demo[static_cast<std::size_t>(ds_.history_frame(smp.frame, i))];
                for (int k = 0; k < np; ++k) out.input.points.col(s * np + k).segment<3>(3 * i) = f.col(k);
            }
            out.input.gripper(s) = ds_.gripper(smp.demo, smp.frame) ? 1.0f : -1.0f;
            for (int j = 0; j < l; ++j) {
                const int t = ds_.target_frame(smp.demo, smp.frame, j);
                const auto& f = demo[static_cast<std::size_t>(t)];
                for (int k = 0; k < nr; ++k) out.target_tracks.col(s * nr + k).segment<3>(3 * j) = f.col(k);
                out.target_gripper(j, s) = ds_.gripper(smp.demo, t) ? 1.0f : 0.0f;
            }
        }
        return out;
    }

private:
    const dataio::Dataset& ds_;
    std::vector<std::vector<Eigen::Matrix3Xf>> frames_;
};

/// Adam with bias correction.
template <typename T>
class Adam {
public:
    Adam(const ParameterSet<T>& like, const TrainConfig& cfg)
        : cfg_(cfg), m_(like.zeros_like()), v_(like.zeros_like()) {}

    void step(ParameterSet<T>& p, const ParameterSet<T>& g) {
        ++t_;
        const T b1 = static_cast<T>(cfg_.beta1);
        const T b2 = static_cast<T>(cfg_.beta2);
        const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, t_));
        const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, t_));
        const T lr = static_cast<T>(cfg_.learning_rate);
        const T eps = static_cast<T>(cfg_.epsilon);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const int k = static_cast<int>(i);
            m_[k] = b1 * m_[k] + (T(1) - b1) * g[k];
            v_[k] = b2 * v_[k] + (T(1) - b2) * g[k].cwiseAbs2();
            p[k].array() -= lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps);
        }
    }

    long steps() const { return t_; }

private:
    TrainConfig cfg_;
    ParameterSet<T> m_;
    ParameterSet<T> v_;
    long t_ = 0;
};

struct LossRecord {
    int step = 0;
    double loss = 0.0;  // mean training loss since the previous record
    double track = 0.0;
    double gripper = 0.0;
    double val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    PolicyParameters params;
    std::vector<LossRecord> curve;
};

using CheckpointCallback = std::function<void(int step, const PolicyParameters&)>;
using ProgressCallback = std::function<void(const LossRecord&)>;

/// Mean loss over `samples` in batches, without gradients.
inline LossValue<double> evaluate_loss(const TrackTransformer<float>& net, const ParameterSet<float>& w,
                                       const BatchBuilder& builder, const std::vector<dataio::Sample>& samples,
                                       const TrainConfig& cfg) {
    LossValue<double> acc;
    double n = 0.0;
    const auto bs = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t i = 0; i < samples.size(); i += bs) {
        const std::vector<dataio::Sample> chunk(samples.begin() + static_cast<std::ptrdiff_t>(i),
                                                samples.begin() + static_cast<std::ptrdiff_t>(std::min(samples.size(), i + bs)));
        const auto batch = builder.make(chunk);
        const auto out = net.forward(w, batch.input);
        const auto v = bc_loss<float>(out, batch.target_tracks, batch.target_gripper, static_cast<float>(cfg.track_weight),
                                      static_cast<float>(cfg.gripper_weight));
        const auto m = static_cast<double>(chunk.size());
        acc.total += m * v.total;
        acc.track += m * v.track;
        acc.gripper += m * v.gripper;
        n += m;
    }
    if (n > 0) {
        acc.total /= n;
        acc.track /= n;
        acc.gripper /= n;
    }
    return acc;
}

/// Minibatch behaviour cloning with Adam. Samples are drawn uniformly with replacement from the
/// train split by a generator seeded with cfg.seed; the same seed gives bit-identical results.
inline TrainResult train(const dataio::Dataset& ds, const PolicyConfig& arch, const TrainConfig& cfg,
                         const CheckpointCallback& on_checkpoint = {}, const ProgressCallback& on_progress = {}) {
    cfg.validate();
    if (ds.train_samples.empty()) throw EmptyDataset("no training samples");
    TrainResult result;
    result.params = initial_parameters(ds, arch, cfg.seed);
    const TrackTransformer<float> net(result.params.config);
    const BatchBuilder builder(ds);
    Adam<float> opt(result.params.weights, cfg);
    ParameterSet<float> grads = result.params.weights.zeros_like();
    typename TrackTransformer<float>::Cache cache;
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, ds.train_samples.size() - 1);
    std::vector<dataio::Sample> samples(static_cast<std::size_t>(cfg.batch_size));
    Mat<float> d_tracks;
    Mat<float> d_logits;

    LossValue<double> window;
    int in_window = 0;
    for (int step = 1; step <= cfg.steps; ++step) {
        for (auto& s : samples) s = ds.train_samples[pick(rng)];
        const auto batch = builder.make(samples);
        const auto out = net.forward(result.params.weights, batch.input, &cache);
        const auto v = bc_loss<float>(out, batch.target_tracks, batch.target_gripper, static_cast<float>(cfg.track_weight),
                                      static_cast<float>(cfg.gripper_weight), &d_tracks, &d_logits);
        grads.set_zero();
        net.backward(result.params.weights, cache, d_tracks, d_logits, grads);
        opt.step(result.params.weights, grads);

        window.total += v.total;
        window.track += v.track;
        window.gripper += v.gripper;
        ++in_window;
        if (step % cfg.log_every == 0 || step == cfg.steps) {
            LossRecord rec{step, window.total / in_window, window.track / in_window, window.gripper / in_window};
            if (!ds.val_samples.empty()) {
                rec.val_loss = evaluate_loss(net, result.params.weights, builder, ds.val_samples, cfg).total;
            }
            result.curve.push_back(rec);
            if (on_progress) on_progress(rec);
            window = {};
            in_window = 0;
        }
        if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && on_checkpoint) {
            on_checkpoint(step, result.params);
        }
    }
    if (!result.params.weights.all_finite()) throw Error("training diverged: non-finite parameters");
    return result;
}

}  // namespace pointpolicy::policy
