#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/camera.hpp"

namespace pointpolicy::geometry {

struct Observation {
    const CameraModel* camera = nullptr;
    Point2 pixel = Point2::Zero();
};

inline constexpr double kCoincidentCenterTolerance = 1e-9;
inline constexpr double kTriangulationRankTolerance = 1e-12;

/// Linear (DLT) triangulation from two or more calibrated views.
///
/// Each view contributes the rows u * p3 - p1 and v * p3 - p2 of the homogeneous system A X = 0,
/// where p_j is the j-th row of the view's projection matrix. Image points are first shifted to
/// their common centroid and scaled so their mean distance from it is sqrt(2); each row is then
/// scaled to unit norm. The solution is the right singular vector of the smallest singular value.
inline Point3 triangulate_dlt(std::span<const Observation> observations) {
    const auto n = static_cast<Eigen::Index>(observations.size());
    if (n < 2) throw DegenerateGeometry("triangulation needs at least two views");
    for (const auto& obs : observations) {
        if (obs.camera == nullptr) throw DegenerateGeometry("observation without camera");
        if (!obs.pixel.allFinite()) throw DegenerateGeometry("non-finite image point");
    }

    bool distinct_centers = false;
    const Point3 c0 = observations.front().camera->center();
    for (const auto& obs : observations) {
        if ((obs.camera->center() - c0).norm() > kCoincidentCenterTolerance) distinct_centers = true;
    }
    if (!distinct_centers) throw DegenerateGeometry("camera centers coincide");

    Point2 centroid = Point2::Zero();
    for (const auto& obs : observations) centroid += obs.pixel;
    centroid /= static_cast<double>(n);
    double spread = 0.0;
    for (const auto& obs : observations) spread += (obs.pixel - centroid).norm();
    spread /= static_cast<double>(n);
    const double scale = spread > 1e-12 ? std::sqrt(2.0) / spread : 1.0;
    Eigen::Matrix3d normalize;
    normalize << scale, 0.0, -scale * centroid.x(), 0.0, scale, -scale * centroid.y(), 0.0, 0.0, 1.0;

    Eigen::MatrixXd a(2 * n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& obs = observations[static_cast<std::size_t>(i)];
        const Matrix34 p = normalize * obs.camera->projection();
        const Eigen::Vector3d x = normalize * Eigen::Vector3d(obs.pixel.x(), obs.pixel.y(), 1.0);
        a.row(2 * i) = x.x() * p.row(2) - p.row(0);
        a.row(2 * i + 1) = x.y() * p.row(2) - p.row(1);
        for (Eigen::Index r = 2 * i; r < 2 * i + 2; ++r) {
            const double norm = a.row(r).norm();
            if (norm > 0.0) a.row(r) /= norm;
        }
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s.size() < 4 || s(2) <= kTriangulationRankTolerance * s(0)) {
        throw DegenerateGeometry("stacked DLT system is rank deficient");
    }
    const Eigen::Vector4d x = svd.matrixV().col(3);
    if (std::abs(x(3)) < 1e-14 * x.head<3>().norm()) {
        throw DegenerateGeometry("triangulated point at infinity");
    }
    return x.head<3>() / x(3);
}

inline Point3 triangulate_dlt(std::initializer_list<Observation> observations) {
    return triangulate_dlt(std::span<const Observation>(observations.begin(), observations.size()));
}

}  // namespace pointpolicy::geometry
