#pragma once

#include <Eigen/Dense>
#include <algorithm>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/registration.hpp"
#include "pointpolicy/geometry/rigid.hpp"
#include "pointpolicy/retarget/keypoints.hpp"

namespace pointpolicy::control {

/// Axis-aligned box of admissible end-effector positions.
struct Workspace {
    Eigen::Vector3d lower{0.2, -0.4, 0.01};
    Eigen::Vector3d upper{0.8, 0.4, 0.5};

    bool contains(const Eigen::Vector3d& p, double tol = 0.0) const {
        return (p.array() >= lower.array() - tol).all() && (p.array() <= upper.array() + tol).all();
    }
    Eigen::Vector3d clamp(const Eigen::Vector3d& p) const { return p.cwiseMax(lower).cwiseMin(upper); }

    void validate() const {
        if (!lower.allFinite() || !upper.allFinite() || (lower.array() > upper.array()).any()) {
            throw ConfigError("workspace lower bound exceeds upper bound");
        }
    }
};

/// End-effector command: absolute pose plus binary gripper.
struct Action {
    geometry::Pose pose;
    bool gripper_closed = false;
    bool clamped = false;  // position was pulled back into the workspace
};

/// Pose whose keypoints best match `points`: wrist point as position, orientation from registering
/// the canonical offset points onto the prediction, composed with the base orientation.
inline geometry::Pose backtrack_pose(const Eigen::Matrix3Xd& points, const retarget::OffsetTable& offsets,
                                     const geometry::Quaternion& base_orientation) {
    if (points.cols() != offsets.size()) throw DegenerateConfiguration("point count does not match offset table");
    if (!points.allFinite() || geometry::is_collinear(points)) {
        throw DegenerateConfiguration("predicted robot points are collinear or non-finite");
    }
    const Eigen::Matrix3Xd canonical = retarget::canonical_keypoints(offsets, base_orientation);
    const auto fit = geometry::estimate_rigid_transform(canonical, points);
    const Eigen::Matrix3d base = geometry::quaternion_to_matrix(base_orientation);
    return {points.col(offsets.wrist_index()), geometry::Quaternion(fit.rotation() * base).normalized()};
}

inline Action backtrack_action(const Eigen::Matrix3Xd& points, const retarget::OffsetTable& offsets,
                               const geometry::Quaternion& base_orientation, bool gripper_closed = false,
                               const Workspace* workspace = nullptr) {
    geometry::Pose pose = backtrack_pose(points, offsets, base_orientation);
    Action a{pose, gripper_closed, false};
    if (workspace != nullptr && !workspace->contains(pose.position())) {
        a.pose = geometry::Pose(workspace->clamp(pose.position()), pose.orientation());
        a.clamped = true;
    }
    return a;
}

}  // namespace pointpolicy::control
