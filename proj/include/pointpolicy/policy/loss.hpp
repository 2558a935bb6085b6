#pragma once

#include <Eigen/Dense>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/layers.hpp"
#include "pointpolicy/policy/network.hpp"
#include "pointpolicy/policy/types.hpp"

namespace pointpolicy::policy {

inline constexpr double kDefaultGripperLossWeight = 0.1;

template <typename T>
struct LossValue {
    T total = 0;
    T track = 0;    // mean squared error over robot point coordinates
    T gripper = 0;  // mean binary cross-entropy over gripper logits
};

/// Behaviour-cloning loss on network outputs: track_weight * MSE(tracks) + gripper_weight * BCE(logits).
/// Targets: tracks in the layout of NetworkOutput::tracks, gripper in {0, 1} (L x B). Writes the
/// gradients w.r.t. the outputs when requested. Only robot tracks are supervised; object tokens
/// influence the loss solely through attention.
template <typename T>
LossValue<T> bc_loss(const NetworkOutput<T>& pred, const Mat<T>& target_tracks, const Mat<T>& target_gripper,
                     T track_weight, T gripper_weight, Mat<T>* d_tracks = nullptr, Mat<T>* d_logits = nullptr) {
    if (pred.tracks.rows() != target_tracks.rows() || pred.tracks.cols() != target_tracks.cols() ||
        pred.gripper_logits.rows() != target_gripper.rows() || pred.gripper_logits.cols() != target_gripper.cols()) {
        throw ShapeMismatch("prediction and target shapes differ");
    }
    LossValue<T> v;
    const T n_track = static_cast<T>(pred.tracks.size());
    const T n_grip = static_cast<T>(pred.gripper_logits.size());
    const Mat<T> diff = pred.tracks - target_tracks;
    v.track = n_track > 0 ? diff.squaredNorm() / n_track : T(0);
    const auto z = pred.gripper_logits.array();
    const auto y = target_gripper.array();
    // softplus(z) - y z = -[y log sigma(z) + (1 - y) log(1 - sigma(z))]
    const auto sp = z.unaryExpr([](T a) { return layers::softplus(a); });
    v.gripper = n_grip > 0 ? (sp - y * z).sum() / n_grip : T(0);
    v.total = track_weight * v.track + gripper_weight * v.gripper;
    if (d_tracks != nullptr) *d_tracks = (T(2) * track_weight / n_track) * diff;
    if (d_logits != nullptr) {
        *d_logits = ((z.unaryExpr([](T a) { return layers::sigmoid(a); }) - y) * (gripper_weight / n_grip)).matrix();
    }
    return v;
}

/// Gradients of the chunk-level loss with respect to the predicted chunk.
struct ChunkLossGradient {
    std::vector<Eigen::Matrix3Xd> points;
    Eigen::VectorXd gripper_logits;
};

/// The same loss on one chunk in meters: MSE over all L x N_r x 3 coordinates plus weighted BCE.
inline LossValue<double> bc_loss(const ActionChunk& pred, const ChunkTarget& target,
                                 double gripper_weight = kDefaultGripperLossWeight,
                                 ChunkLossGradient* grad = nullptr) {
    if (pred.length() != target.length() || pred.gripper_logits.size() != target.gripper.size() ||
        pred.gripper_logits.size() != pred.length()) {
        throw ShapeMismatch("chunk lengths differ");
    }
    const int l = pred.length();
    NetworkOutput<double> out;
    Mat<double> tt;
    if (l > 0) {
        const Eigen::Index nr = pred.points.front().cols();
        out.tracks.resize(3 * l, nr);
        tt.resize(3 * l, nr);
        for (int i = 0; i < l; ++i) {
            if (pred.points[static_cast<std::size_t>(i)].cols() != nr || target.points[static_cast<std::size_t>(i)].cols() != nr) {
                throw ShapeMismatch("robot point counts differ");
            }
            out.tracks.middleRows(3 * i, 3) = pred.points[static_cast<std::size_t>(i)];
            tt.middleRows(3 * i, 3) = target.points[static_cast<std::size_t>(i)];
        }
    }
    out.gripper_logits = pred.gripper_logits;
    Mat<double> d_tracks;
    Mat<double> d_logits;
    const auto v = bc_loss<double>(out, tt, Mat<double>(target.gripper), 1.0, gripper_weight,
                                   grad != nullptr ? &d_tracks : nullptr, grad != nullptr ? &d_logits : nullptr);
    if (grad != nullptr) {
        grad->points.clear();
        for (int i = 0; i < l; ++i) grad->points.emplace_back(d_tracks.middleRows(3 * i, 3));
        grad->gripper_logits = d_logits.col(0);
    }
    return v;
}

}  // namespace pointpolicy::policy
