#pragma once

#include <Eigen/Dense>
#include <string>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/rigid.hpp"

namespace pointpolicy::geometry {

using Matrix34 = Eigen::Matrix<double, 3, 4>;

/// Pinhole view: intrinsics K and world->camera extrinsics. No distortion.
class CameraModel {
public:
    CameraModel(const Eigen::Matrix3d& intrinsics, const RigidTransform& world_to_camera,
                std::string id = "cam")
        : intrinsics_(intrinsics), extrinsics_(world_to_camera), id_(std::move(id)) {
        if (!(intrinsics_(0, 0) > 0.0) || !(intrinsics_(1, 1) > 0.0)) {
            throw ConfigError("camera focal lengths must be positive");
        }
        if (intrinsics_(1, 0) != 0.0 || intrinsics_(2, 0) != 0.0 || intrinsics_(2, 1) != 0.0 ||
            intrinsics_(2, 2) != 1.0) {
            throw ConfigError("camera intrinsics must be upper triangular with K(2,2) = 1");
        }
        Eigen::Matrix<double, 3, 4> rt;
        rt.leftCols<3>() = extrinsics_.rotation();
        rt.col(3) = extrinsics_.translation();
        projection_ = intrinsics_ * rt;
    }

    /// Camera at `position` looking at `target` with the image y axis pointing away from `up`.
    static CameraModel look_at(const Eigen::Matrix3d& intrinsics, const Point3& position,
                               const Point3& target, const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ(),
                               std::string id = "cam") {
        const Eigen::Vector3d forward = (target - position).normalized();
        const Eigen::Vector3d right = forward.cross(up).normalized();
        const Eigen::Vector3d down = forward.cross(right);
        Eigen::Matrix3d r;
        r.row(0) = right.transpose();
        r.row(1) = down.transpose();
        r.row(2) = forward.transpose();
        return {intrinsics, RigidTransform(r, -(r * position)), std::move(id)};
    }

    static Eigen::Matrix3d make_intrinsics(double fx, double fy, double cx, double cy) {
        Eigen::Matrix3d k;
        k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }

    const Eigen::Matrix3d& intrinsics() const { return intrinsics_; }
    const RigidTransform& extrinsics() const { return extrinsics_; }
    const Matrix34& projection() const { return projection_; }
    const std::string& id() const { return id_; }

    Point3 center() const { return extrinsics_.inverse().translation(); }

    Point3 to_camera(const Point3& world) const { return extrinsics_.apply(world); }

    double depth(const Point3& world) const { return to_camera(world).z(); }

    Point2 project(const Point3& world) const {
        const Point3 c = to_camera(world);
        if (!(c.z() > 0.0)) {
            throw DepthNonPositive("point depth " + std::to_string(c.z()) + " in camera " + id_);
        }
        const Point3 h = intrinsics_ * c;
        return h.head<2>() / h.z();
    }

    /// World point at the given camera-frame z-depth along the pixel's ray.
    Point3 back_project(const Point2& pixel, double depth) const {
        const Point3 ray = intrinsics_.triangularView<Eigen::Upper>().solve(Point3(pixel.x(), pixel.y(), 1.0));
        return extrinsics_.inverse().apply(depth * ray);
    }

private:
    Eigen::Matrix3d intrinsics_;
    RigidTransform extrinsics_;
    Matrix34 projection_;
    std::string id_;
};

/// Convenience wrapper, mirrors CameraModel::project.
inline Point2 project(const CameraModel& camera, const Point3& point) { return camera.project(point); }

}  // namespace pointpolicy::geometry
