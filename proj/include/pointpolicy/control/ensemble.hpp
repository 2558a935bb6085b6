#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/layers.hpp"
#include "pointpolicy/policy/types.hpp"

namespace pointpolicy::control {

inline constexpr double kDefaultEnsembleDecay = 0.1;

/// Blended prediction for one control step.
struct EnsembleResult {
    Eigen::Matrix3Xd points;
    double gripper_probability = 0.0;
    bool gripper_closed = false;
    std::vector<double> weights;  // one per contributing chunk, newest first
};

/// Recent action chunks keyed by the step at which they were emitted. Entry e of a chunk emitted
/// at step s is the prediction for step s + e.
class ChunkBuffer {
public:
    explicit ChunkBuffer(double decay = kDefaultEnsembleDecay, bool enabled = true)
        : decay_(decay), enabled_(enabled) {
        if (!(decay >= 0.0) || std::isnan(decay)) throw ConfigError("ensemble decay must be >= 0");
    }

    double decay() const { return decay_; }
    bool enabled() const { return enabled_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    void clear() { entries_.clear(); }

    void push(policy::ActionChunk chunk, long step) {
        if (chunk.length() == 0) throw ShapeMismatch("empty action chunk");
        if (!entries_.empty() && step <= entries_.back().step) {
            throw ShapeMismatch("chunks must be pushed in increasing step order");
        }
        entries_.push_back({step, std::move(chunk)});
        if (!enabled_) {
            while (entries_.size() > 1) entries_.pop_front();
        }
    }

    /// Drops chunks that cannot cover `step` or any later step.
    void prune(long step) {
        while (!entries_.empty() && entries_.front().step + entries_.front().chunk.length() - 1 < step) {
            entries_.pop_front();
        }
    }

    /// Weighted mean over every chunk entry targeting `step`, weights proportional to exp(-m * age)
    /// with age = step - emission step. The gripper probability is blended the same way and
    /// thresholded at 0.5. With ensembling disabled only the newest covering chunk is used.
    EnsembleResult ensemble(long step) {
        prune(step);
        EnsembleResult out;
        double total = 0.0;
        std::vector<std::pair<const policy::ActionChunk*, long>> covering;
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
            const long e = step - it->step;
            if (e < 0 || e >= it->chunk.length()) continue;
            covering.emplace_back(&it->chunk, e);
            if (!enabled_) break;
        }
        if (covering.empty()) throw NoCoverage("no chunk covers step " + std::to_string(step));

        const long newest_age = covering.front().second;
        for (const auto& [chunk, e] : covering) {
            // Measuring age from the newest chunk only rescales all weights; it keeps m = inf well defined.
            const long age = e - newest_age;
            const double w = age == 0 ? 1.0 : std::exp(-decay_ * static_cast<double>(age));
            out.weights.push_back(w);
            total += w;
        }
        out.points = Eigen::Matrix3Xd::Zero(3, covering.front().first->points.front().cols());
        for (std::size_t i = 0; i < covering.size(); ++i) {
            out.weights[i] /= total;
            const auto& [chunk, e] = covering[i];
            out.points += out.weights[i] * chunk->points[static_cast<std::size_t>(e)];
            out.gripper_probability += out.weights[i] * policy::layers::sigmoid(chunk->gripper_logits(e));
        }
        out.gripper_closed = out.gripper_probability > 0.5;
        return out;
    }

private:
    struct Entry {
        long step;
        policy::ActionChunk chunk;
    };
    double decay_;
    bool enabled_;
    std::deque<Entry> entries_;
};

}  // namespace pointpolicy::control
