#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/registration.hpp"
#include "pointpolicy/geometry/rigid.hpp"

namespace pointpolicy::retarget {

/// N fixed transforms about the end-effector frame; point i is the translation of pose * offset_i.
class OffsetTable {
public:
    OffsetTable(std::vector<std::string> names, std::vector<geometry::RigidTransform> offsets, int wrist_index)
        : names_(std::move(names)), offsets_(std::move(offsets)), wrist_(wrist_index) {
        if (names_.size() != offsets_.size() || offsets_.empty()) {
            throw ConfigError("offset table needs one name per offset");
        }
        if (wrist_ < 0 || wrist_ >= size()) throw ConfigError("wrist index out of range");
        if (!offsets_[static_cast<std::size_t>(wrist_)].translation().isZero(0.0)) {
            throw ConfigError("wrist offset must have zero translation");
        }
        if (size() < 3 || geometry::is_collinear(translations())) {
            throw DegenerateConfiguration("offset points must contain three non-collinear points");
        }
    }

    /// Wrist plus +-spacing along the gripper-frame x and y axes.
    static OffsetTable default_table(double spacing = 0.04) {
        const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
        return OffsetTable({"wrist", "x_pos", "x_neg", "y_pos", "y_neg"},
                           {geometry::RigidTransform(),
                            {i3, {spacing, 0.0, 0.0}},
                            {i3, {-spacing, 0.0, 0.0}},
                            {i3, {0.0, spacing, 0.0}},
                            {i3, {0.0, -spacing, 0.0}}},
                           0);
    }

    int size() const { return static_cast<int>(offsets_.size()); }
    int wrist_index() const { return wrist_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<geometry::RigidTransform>& offsets() const { return offsets_; }

    Eigen::Matrix3Xd translations() const {
        Eigen::Matrix3Xd m(3, size());
        for (int i = 0; i < size(); ++i) m.col(i) = offsets_[static_cast<std::size_t>(i)].translation();
        return m;
    }

private:
    std::vector<std::string> names_;
    std::vector<geometry::RigidTransform> offsets_;
    int wrist_ = 0;
};

/// 3 x N robot points of `pose`.
inline Eigen::Matrix3Xd pose_to_keypoints(const geometry::Pose& pose, const OffsetTable& offsets) {
    const geometry::RigidTransform t = pose.transform();
    Eigen::Matrix3Xd out(3, offsets.size());
    for (int i = 0; i < offsets.size(); ++i) {
        out.col(i) = (t * offsets.offsets()[static_cast<std::size_t>(i)]).translation();
    }
    return out;
}

/// Keypoints of the end effector at the origin with the base orientation: the reference set that
/// predicted points are registered against when recovering a pose.
inline Eigen::Matrix3Xd canonical_keypoints(const OffsetTable& offsets, const geometry::Quaternion& base_orientation) {
    return pose_to_keypoints(geometry::Pose(geometry::Point3::Zero(), base_orientation), offsets);
}

/// Pairwise distance matrix, the rigidity fingerprint of a point set.
inline Eigen::MatrixXd distance_table(const Eigen::Matrix3Xd& points) {
    const Eigen::Index n = points.cols();
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (points.col(i) - points.col(j)).norm();
    }
    return d;
}

}  // namespace pointpolicy::retarget
