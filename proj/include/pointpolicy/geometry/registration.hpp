#pragma once

#include <Eigen/Dense>
#include <span>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/rigid.hpp"

namespace pointpolicy::geometry {

/// Collinearity threshold on the singular values of the centered source points.
inline constexpr double kCollinearTolerance = 1e-8;

inline Eigen::Matrix3Xd to_matrix(std::span<const Point3> points) {
    Eigen::Matrix3Xd m(3, static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = points[i];
    return m;
}

/// True when the points span at most a line (second singular value of the centered set is
/// below kCollinearTolerance times the first).
inline bool is_collinear(const Eigen::Matrix3Xd& points) {
    if (points.cols() < 3) return true;
    const Eigen::Vector3d centroid = points.rowwise().mean();
    const Eigen::Matrix3Xd centered = points.colwise() - centroid;
    const Eigen::JacobiSVD<Eigen::Matrix3Xd> svd(centered);
    const Eigen::Vector3d s = svd.singularValues();
    return !(s(0) > 0.0) || s(1) < kCollinearTolerance * s(0);
}

/// Least-squares rigid fit dst ~ R * src + t (no scale). Kabsch with reflection correction.
inline RigidTransform estimate_rigid_transform(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
    if (src.cols() != dst.cols()) {
        throw DegenerateConfiguration("point sets differ in size");
    }
    if (src.cols() < 3) throw DegenerateConfiguration("need at least three correspondences");
    if (!src.allFinite() || !dst.allFinite()) throw DegenerateConfiguration("non-finite input");
    if (is_collinear(src)) throw DegenerateConfiguration("source points are collinear");

    const Eigen::Vector3d src_mean = src.rowwise().mean();
    const Eigen::Vector3d dst_mean = dst.rowwise().mean();
    const Eigen::Matrix3d cov = (src.colwise() - src_mean) * (dst.colwise() - dst_mean).transpose();

    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    const Eigen::Vector3d d(1.0, 1.0, (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
    const Eigen::Matrix3d r = v * d.asDiagonal() * u.transpose();
    return {r, dst_mean - r * src_mean};
}

inline RigidTransform estimate_rigid_transform(std::span<const Point3> src, std::span<const Point3> dst) {
    if (src.size() != dst.size()) throw DegenerateConfiguration("point sets differ in size");
    return estimate_rigid_transform(to_matrix(src), to_matrix(dst));
}

/// Sum of squared distances between transform(src) and dst.
inline double registration_residual(const RigidTransform& t, const Eigen::Matrix3Xd& src,
                                    const Eigen::Matrix3Xd& dst) {
    const Eigen::Matrix3Xd moved = (t.rotation() * src).colwise() + t.translation();
    return (moved - dst).squaredNorm();
}

}  // namespace pointpolicy::geometry
