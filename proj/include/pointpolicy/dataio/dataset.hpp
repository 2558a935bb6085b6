#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/types.hpp"

namespace pointpolicy::dataio {

inline constexpr double kStdFloor = 1e-6;

/// Per-axis statistics shared by every keypoint, so normalization preserves the geometry of a
/// point set up to an anisotropic scale.
struct NormalizationStats {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Vector3d std = Eigen::Vector3d::Ones();

    Eigen::Matrix3Xd normalize(const Eigen::Matrix3Xd& p) const {
        return (p.colwise() - mean).array().colwise() / std.array();
    }
    Eigen::Matrix3Xd denormalize(const Eigen::Matrix3Xd& p) const {
        return (p.array().colwise() * std.array()).matrix().colwise() + mean;
    }

    /// Population mean and standard deviation over all columns; std is floored at `floor`.
    static NormalizationStats compute(const std::vector<const Eigen::Matrix3Xd*>& frames, double floor = kStdFloor) {
        NormalizationStats s;
        double n = 0.0;
        Eigen::Vector3d sum = Eigen::Vector3d::Zero();
        for (const auto* f : frames) {
            sum += f->rowwise().sum();
            n += static_cast<double>(f->cols());
        }
        if (n == 0.0) throw EmptyDataset("no points to compute statistics from");
        s.mean = sum / n;
        Eigen::Vector3d sq = Eigen::Vector3d::Zero();
        for (const auto* f : frames) sq += (f->colwise() - s.mean).rowwise().squaredNorm();
        s.std = (sq / n).cwiseSqrt().cwiseMax(floor);
        return s;
    }

    friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

struct DatasetConfig {
    int history = 10;
    int chunk = 20;
    double val_fraction = 0.1;
    std::uint64_t split_seed = 0;
    double std_floor = kStdFloor;

    void validate() const {
        if (history < 1 || chunk < 1) throw ConfigError("history and chunk must be >= 1");
        if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must be in [0, 1)");
        if (!(std_floor > 0.0)) throw ConfigError("std floor must be positive");
    }
};

/// One training example: the window ending at `frame` of demo `demo`.
struct Sample {
    int demo = 0;
    int frame = 0;
};

/// Retargeted 3D demonstrations indexed into (window, chunk) samples.
struct Dataset {
    DatasetConfig config;
    DemoHeader schema;
    int num_robot_points = 0;
    int num_object_points = 0;
    std::vector<Demonstration> demos;
    std::vector<int> train_demos;
    std::vector<int> val_demos;
    std::vector<Sample> train_samples;
    std::vector<Sample> val_samples;
    NormalizationStats stats;

    std::size_t size() const { return train_samples.size() + val_samples.size(); }

    const Eigen::Matrix3Xd& points(int demo, int frame) const {
        return *demos[static_cast<std::size_t>(demo)].frames[static_cast<std::size_t>(frame)].points3d;
    }
    bool gripper(int demo, int frame) const {
        return demos[static_cast<std::size_t>(demo)].frames[static_cast<std::size_t>(frame)].gripper->closed;
    }
    int length(int demo) const { return static_cast<int>(demos[static_cast<std::size_t>(demo)].frames.size()); }

    /// Frame index of history slot i (0 = oldest) for a window ending at t, with front padding.
    int history_frame(int t, int i) const { return std::max(0, t - config.history + 1 + i); }
    /// Frame index of chunk entry l (0 = next step) for a window ending at t, with end repetition.
    int target_frame(int demo, int t, int l) const { return std::min(length(demo) - 1, t + 1 + l); }

    /// Window in meters (not normalized).
    policy::ObservationWindow window(const Sample& s) const {
        policy::ObservationWindow w;
        w.num_robot_points = num_robot_points;
        w.gripper_closed = gripper(s.demo, s.frame);
        for (int i = 0; i < config.history; ++i) w.frames.push_back(points(s.demo, history_frame(s.frame, i)));
        return w;
    }

    /// Chunk target in meters.
    policy::ChunkTarget target(const Sample& s) const {
        policy::ChunkTarget c;
        c.gripper.resize(config.chunk);
        for (int l = 0; l < config.chunk; ++l) {
            const int f = target_frame(s.demo, s.frame, l);
            c.points.push_back(points(s.demo, f).leftCols(num_robot_points));
            c.gripper(l) = gripper(s.demo, f) ? 1.0 : 0.0;
        }
        return c;
    }
};

/// Validates schemas, splits by demo (seeded), computes statistics on the train split, and
/// creates one sample per frame.
inline Dataset build_dataset(std::vector<Demonstration> demos, const DatasetConfig& config = {}) {
    config.validate();
    if (demos.empty()) throw EmptyDataset("no demonstrations");
    Dataset ds;
    ds.config = config;
    ds.schema = demos.front().header;
    for (std::size_t i = 0; i < demos.size(); ++i) {
        const auto& d = demos[i];
        d.validate();
        if (d.header.keypoints != ds.schema.keypoints || d.header.task != ds.schema.task) {
            throw SchemaMismatchAcrossDemos("demo " + std::to_string(i) + " differs from demo 0");
        }
        if (d.empty()) throw EmptyDataset("demo " + std::to_string(i) + " has no frames");
        if (!d.has_points3d() || !d.frames.front().gripper) {
            throw SchemaViolation("demo " + std::to_string(i) + " lacks 3D points or gripper states");
        }
    }
    ds.num_robot_points = static_cast<int>(ds.schema.indices_with_role(KeypointRole::Robot).size());
    ds.num_object_points = static_cast<int>(ds.schema.indices_with_role(KeypointRole::Object).size());
    if (ds.num_robot_points == 0) throw SchemaViolation("dataset has no robot keypoints");
    for (int i = 0; i < ds.num_robot_points; ++i) {
        if (ds.schema.keypoints[static_cast<std::size_t>(i)].role != KeypointRole::Robot) {
            throw SchemaViolation("robot keypoints must precede object keypoints");
        }
    }
    if (ds.num_robot_points + ds.num_object_points != static_cast<int>(ds.schema.keypoints.size())) {
        throw SchemaViolation("dataset keypoints must be robot or object points");
    }
    ds.demos = std::move(demos);

    std::vector<int> order(ds.demos.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.split_seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(order.size())));
    ds.val_demos.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    ds.train_demos.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(ds.val_demos.begin(), ds.val_demos.end());
    std::sort(ds.train_demos.begin(), ds.train_demos.end());

    std::vector<const Eigen::Matrix3Xd*> frames;
    for (int d : ds.train_demos) {
        for (const auto& f : ds.demos[static_cast<std::size_t>(d)].frames) frames.push_back(&*f.points3d);
    }
    ds.stats = NormalizationStats::compute(frames, config.std_floor);

    for (int d : ds.train_demos) {
        for (int t = 0; t < ds.length(d); ++t) ds.train_samples.push_back({d, t});
    }
    for (int d : ds.val_demos) {
        for (int t = 0; t < ds.length(d); ++t) ds.val_samples.push_back({d, t});
    }
    return ds;
}

}  // namespace pointpolicy::dataio
