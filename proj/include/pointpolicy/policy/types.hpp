#pragma once

#include <Eigen/Dense>
#include <deque>
#include <vector>

#include "pointpolicy/errors.hpp"

namespace pointpolicy::policy {

/// H consecutive keypoint frames (robot points first, then object points), in meters, oldest first.
struct ObservationWindow {
    std::vector<Eigen::Matrix3Xd> frames;
    int num_robot_points = 0;
    bool gripper_closed = false;

    int history() const { return static_cast<int>(frames.size()); }
    int num_points() const { return frames.empty() ? 0 : static_cast<int>(frames.front().cols()); }
    int num_object_points() const { return num_points() - num_robot_points; }
};

/// L future robot point sets (3 x N_r each, meters) and one gripper logit per step.
struct ActionChunk {
    std::vector<Eigen::Matrix3Xd> points;
    Eigen::VectorXd gripper_logits;

    int length() const { return static_cast<int>(points.size()); }
    bool all_finite() const {
        for (const auto& p : points) {
            if (!p.allFinite()) return false;
        }
        return gripper_logits.allFinite();
    }
};

/// Supervision for one chunk: L robot point sets and gripper targets in [0, 1] (1 = closed).
struct ChunkTarget {
    std::vector<Eigen::Matrix3Xd> points;
    Eigen::VectorXd gripper;

    int length() const { return static_cast<int>(points.size()); }
};

/// Window over the last `history` entries of `frames`, front-padded with the oldest available frame.
inline ObservationWindow make_window(const std::deque<Eigen::Matrix3Xd>& frames, int history, int num_robot_points,
                                     bool gripper_closed) {
    if (frames.empty()) throw ShapeMismatch("no observations to build a window from");
    ObservationWindow w;
    w.num_robot_points = num_robot_points;
    w.gripper_closed = gripper_closed;
    const int available = static_cast<int>(frames.size());
    for (int i = 0; i < history; ++i) {
        const int idx = available - history + i;
        w.frames.push_back(frames[static_cast<std::size_t>(idx < 0 ? 0 : idx)]);
    }
    return w;
}

}  // namespace pointpolicy::policy
