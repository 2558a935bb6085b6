#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/registration.hpp"
#include "pointpolicy/geometry/rigid.hpp"

namespace pointpolicy::retarget {

using geometry::Point3;
using geometry::Pose;
using geometry::Quaternion;

inline constexpr const char* kIndexTip = "index_tip";
inline constexpr const char* kThumbTip = "thumb_tip";
inline constexpr const char* kIndexKnuckle = "index_knuckle";
inline constexpr const char* kWristBase = "wrist_base";

inline const std::vector<std::string>& default_hand_schema() {
    static const std::vector<std::string> names{kIndexTip, kThumbTip, kIndexKnuckle, kWristBase};
    return names;
}

/// Named 3D hand points in the robot base frame at one instant.
struct HandFrame {
    double timestamp = 0.0;
    std::vector<std::string> names;
    Eigen::Matrix3Xd points;

    HandFrame() = default;
    HandFrame(double t, std::vector<std::string> n, Eigen::Matrix3Xd p)
        : timestamp(t), names(std::move(n)), points(std::move(p)) {
        if (static_cast<Eigen::Index>(names.size()) != points.cols()) {
            throw ShapeMismatch("hand frame names/points count mismatch");
        }
    }

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == name) return static_cast<int>(i);
        }
        return -1;
    }

    Point3 at(const std::string& name) const {
        const int i = index_of(name);
        if (i < 0) throw MissingKeypoint(name);
        return points.col(i);
    }

    /// Enforces the frame invariants: >= 4 finite, non-collinear points.
    void check() const {
        if (points.cols() < 4) throw DegenerateConfiguration("hand frame needs at least 4 points");
        if (!points.allFinite()) throw DegenerateConfiguration("hand frame has non-finite points");
        if (geometry::is_collinear(points)) throw DegenerateConfiguration("hand points are collinear");
    }
};

/// Binary gripper command together with the finger distance it came from.
struct GripperState {
    bool closed = false;
    double distance = 0.0;
};

inline constexpr double kDefaultGripperThreshold = 0.07;  // meters

/// Closed iff the index-thumb tip distance is strictly below the threshold.
inline GripperState gripper_from_hand(const HandFrame& frame, double threshold = kDefaultGripperThreshold) {
    const double d = (frame.at(kIndexTip) - frame.at(kThumbTip)).norm();
    return {d < threshold, d};
}

/// Robot pose of frame_t: fingertip midpoint, orientation = T(frame0 -> frame_t) * base.
inline Pose hand_to_pose(const HandFrame& frame0, const HandFrame& frame_t, const Quaternion& base_orientation) {
    if (frame0.names != frame_t.names) throw MissingKeypoint("hand frames use different keypoint schemas");
    frame0.check();
    const auto delta = geometry::estimate_rigid_transform(frame0.points, frame_t.points);
    const Point3 position = 0.5 * (frame_t.at(kIndexTip) + frame_t.at(kThumbTip));
    const Eigen::Matrix3d base = geometry::quaternion_to_matrix(base_orientation);
    return {position, Quaternion(delta.rotation() * base).normalized()};
}

}  // namespace pointpolicy::retarget
