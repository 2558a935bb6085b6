#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

#include "pointpolicy/errors.hpp"

namespace pointpolicy::geometry {

using Point2 = Eigen::Vector2d;
using Point3 = Eigen::Vector3d;
using Quaternion = Eigen::Quaterniond;

inline constexpr double kOrthonormalTolerance = 1e-9;
inline constexpr double kUnitNormTolerance = 1e-6;

inline bool is_finite(const Point3& p) { return p.allFinite(); }

inline bool is_rotation(const Eigen::Matrix3d& r, double tol = kOrthonormalTolerance) {
    return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(r.determinant() - 1.0) <= tol;
}

/// Flip the quaternion into the hemisphere with non-negative scalar part. A zero scalar part is
/// disambiguated by the first non-zero vector component.
inline Quaternion canonicalize(Quaternion q) {
    bool flip = q.w() < 0.0;
    if (q.w() == 0.0) {
        for (int i = 0; i < 3; ++i) {
            if (q.vec()(i) != 0.0) {
                flip = q.vec()(i) < 0.0;
                break;
            }
        }
    }
    if (flip) q.coeffs() = -q.coeffs();
    return q;
}

/// Rotation matrix of a unit quaternion. Throws NonUnitInput when the norm is off by more than 1e-6.
inline Eigen::Matrix3d quaternion_to_matrix(const Quaternion& q) {
    if (std::abs(q.norm() - 1.0) > kUnitNormTolerance) {
        throw NonUnitInput("quaternion norm " + std::to_string(q.norm()));
    }
    return q.normalized().toRotationMatrix();
}

/// Canonical (w >= 0) unit quaternion of a rotation matrix.
inline Quaternion matrix_to_quaternion(const Eigen::Matrix3d& r) {
    if (!is_rotation(r, kUnitNormTolerance)) {
        throw NonUnitInput("matrix is not a proper rotation");
    }
    return canonicalize(Quaternion(r).normalized());
}

inline Eigen::Matrix3d rotation_about(const Eigen::Vector3d& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

/// Geodesic angle between two orientations, in radians, in [0, pi].
inline double angular_distance(const Quaternion& a, const Quaternion& b) {
    const Quaternion d = a.conjugate() * b;
    return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

inline double angular_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    const Eigen::AngleAxisd aa(a.transpose() * b);
    return std::abs(aa.angle());
}

/// Proper rigid motion x -> rotation * x + translation.
class RigidTransform {
public:
    RigidTransform() = default;

    RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
        : rotation_(rotation), translation_(translation) {
        if (!is_rotation(rotation_)) {
            throw NonUnitInput("rotation is not orthonormal with det +1");
        }
        if (!translation_.allFinite()) {
            throw NonUnitInput("translation is not finite");
        }
    }

    static RigidTransform identity() { return {}; }

    const Eigen::Matrix3d& rotation() const { return rotation_; }
    const Eigen::Vector3d& translation() const { return translation_; }

    Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
    Point3 operator()(const Point3& p) const { return apply(p); }

    RigidTransform inverse() const {
        RigidTransform out;
        out.rotation_ = rotation_.transpose();
        out.translation_ = -(out.rotation_ * translation_);
        return out;
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation_;
        m.topRightCorner<3, 1>() = translation_;
        return m;
    }

    /// a * b applies b first.
    friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
        RigidTransform out;
        out.rotation_ = a.rotation_ * b.rotation_;
        out.translation_ = a.rotation_ * b.translation_ + a.translation_;
        return out;
    }

private:
    Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

/// End-effector pose: position in the robot base frame and a canonical unit quaternion.
class Pose {
public:
    Pose() = default;

    Pose(const Point3& position, const Quaternion& orientation) : position_(position) {
        if (!position.allFinite()) throw NonUnitInput("pose position is not finite");
        if (std::abs(orientation.norm() - 1.0) > kUnitNormTolerance) {
            throw NonUnitInput("pose quaternion norm " + std::to_string(orientation.norm()));
        }
        orientation_ = canonicalize(orientation.normalized());
    }

    static Pose identity() { return {}; }

    static Pose from_transform(const RigidTransform& t) {
        return {t.translation(), matrix_to_quaternion(t.rotation())};
    }

    const Point3& position() const { return position_; }
    const Quaternion& orientation() const { return orientation_; }
    Eigen::Matrix3d rotation() const { return orientation_.toRotationMatrix(); }

    RigidTransform transform() const { return {rotation(), position_}; }

    Point3 apply(const Point3& p) const { return orientation_ * p + position_; }

    Pose inverse() const {
        const Quaternion qi = orientation_.conjugate();
        return {-(qi * position_), qi};
    }

    friend Pose operator*(const Pose& a, const Pose& b) {
        return {a.position_ + a.orientation_ * b.position_, (a.orientation_ * b.orientation_).normalized()};
    }

private:
    Point3 position_ = Point3::Zero();
    Quaternion orientation_ = Quaternion::Identity();
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline RigidTransform invert(const RigidTransform& a) { return a.inverse(); }
inline Pose invert(const Pose& a) { return a.inverse(); }

}  // namespace pointpolicy::geometry
