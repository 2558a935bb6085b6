#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pointpolicy/dataio/dataset.hpp"
#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/config.hpp"
#include "pointpolicy/policy/network.hpp"
#include "pointpolicy/policy/types.hpp"

namespace pointpolicy::policy {

/// Everything needed to run a trained policy: architecture, weights, normalization, and schema.
struct PolicyParameters {
    PolicyConfig config;
    ParameterSet<float> weights;
    dataio::NormalizationStats stats;
    std::string task;
    std::vector<dataio::KeypointSpec> keypoints;  // robot points first, then object points

    bool all_finite() const { return weights.all_finite() && stats.mean.allFinite() && stats.std.allFinite(); }

    friend bool operator==(const PolicyParameters& a, const PolicyParameters& b) {
        return a.config == b.config && a.weights == b.weights && a.stats == b.stats && a.task == b.task &&
               a.keypoints == b.keypoints;
    }
};

/// Architecture matching a dataset's schema and window sizes.
inline PolicyConfig config_for(const dataio::Dataset& ds, PolicyConfig base = {}) {
    base.history = ds.config.history;
    base.chunk = ds.config.chunk;
    base.num_robot_points = ds.num_robot_points;
    base.num_object_points = ds.num_object_points;
    base.validate();
    return base;
}

/// Freshly initialized parameters for `ds`.
inline PolicyParameters initial_parameters(const dataio::Dataset& ds, const PolicyConfig& base, std::uint64_t seed) {
    PolicyParameters p;
    p.config = config_for(ds, base);
    p.weights = TrackTransformer<float>(p.config).initialize(seed);
    p.stats = ds.stats;
    p.task = ds.schema.task;
    p.keypoints = ds.schema.keypoints;
    return p;
}

/// Writes the normalized, flattened history of every keypoint of `w` into columns
/// [col0, col0 + Np) of `points`.
template <typename T>
void encode_window(const ObservationWindow& w, const dataio::NormalizationStats& stats, Mat<T>& points,
                   Eigen::Index col0) {
    const int h = w.history();
    for (int i = 0; i < h; ++i) {
        const Eigen::Matrix3Xd n = stats.normalize(w.frames[static_cast<std::size_t>(i)]);
        for (Eigen::Index k = 0; k < n.cols(); ++k) {
            points.col(col0 + k).template segment<3>(3 * i) = n.col(k).cast<T>();
        }
    }
}

/// Inference wrapper: windows in meters in, action chunks in meters out. Pure and reentrant.
class Policy {
public:
    explicit Policy(PolicyParameters params) : params_(std::move(params)), net_(params_.config) {
        net_.check_parameters(params_.weights);
    }

    const PolicyParameters& parameters() const { return params_; }
    const PolicyConfig& config() const { return params_.config; }

    /// Point-encoder embedding of one keypoint history (H x 3, meters, oldest first).
    Eigen::VectorXd encode_token(const Eigen::MatrixX3d& history) const {
        if (history.rows() != params_.config.history) {
            throw ShapeMismatch("history has " + std::to_string(history.rows()) + " entries, expected " +
                                std::to_string(params_.config.history));
        }
        Mat<float> x(3 * history.rows(), 1);
        for (Eigen::Index i = 0; i < history.rows(); ++i) {
            const Eigen::Vector3d n = params_.stats.normalize(history.row(i).transpose());
            x.block<3, 1>(3 * i, 0) = n.cast<float>();
        }
        return net_.encode(params_.weights, x).col(0).cast<double>();
    }

    void check_window(const ObservationWindow& w) const {
        const auto& c = params_.config;
        if (w.history() != c.history || w.num_robot_points != c.num_robot_points ||
            w.num_object_points() != c.num_object_points) {
            throw SchemaMismatch("window (H=" + std::to_string(w.history()) + ", robot=" +
                                 std::to_string(w.num_robot_points) + ", object=" +
                                 std::to_string(w.num_object_points()) + ") does not match the policy");
        }
        for (const auto& f : w.frames) {
            if (f.cols() != c.num_point_tokens()) throw SchemaMismatch("window frames have inconsistent point counts");
        }
    }

    ActionChunk forward(const ObservationWindow& w) const {
        check_window(w);
        const auto& c = params_.config;
        NetworkInput<float> x;
        x.points.resize(3 * c.history, c.num_point_tokens());
        encode_window(w, params_.stats, x.points, 0);
        x.gripper.resize(1);
        x.gripper(0) = w.gripper_closed ? 1.0f : -1.0f;
        const NetworkOutput<float> out = net_.forward(params_.weights, x);

        ActionChunk chunk;
        chunk.gripper_logits = out.gripper_logits.col(0).cast<double>();
        for (int l = 0; l < c.chunk; ++l) {
            Eigen::Matrix3Xd pts(3, c.num_robot_points);
            for (int k = 0; k < c.num_robot_points; ++k) {
                pts.col(k) = out.tracks.col(k).segment<3>(3 * l).cast<double>();
            }
            chunk.points.push_back(params_.stats.denormalize(pts));
        }
        return chunk;
    }

private:
    PolicyParameters params_;
    TrackTransformer<float> net_;
};

}  // namespace pointpolicy::policy
