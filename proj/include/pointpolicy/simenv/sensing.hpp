#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/camera.hpp"
#include "pointpolicy/geometry/triangulation.hpp"

namespace pointpolicy::simenv {

using geometry::CameraModel;

struct CameraRigConfig {
    Eigen::Vector3d center{0.5, 0.0, 0.1};  // point both cameras look at
    double distance = 1.0;
    double yaw_deg = 30.0;  // each camera sits at +-yaw about the center, seen from the +x side
    double elevation_deg = 30.0;
    double focal = 500.0;
    double width = 640.0;
    double height = 480.0;
};

/// Two pinhole views ("cam0", "cam1") looking at the workspace center from +-yaw.
inline std::vector<CameraModel> default_cameras(const CameraRigConfig& cfg = {}) {
    const Eigen::Matrix3d k = CameraModel::make_intrinsics(cfg.focal, cfg.focal, cfg.width / 2, cfg.height / 2);
    std::vector<CameraModel> cams;
    const double el = cfg.elevation_deg * std::numbers::pi / 180.0;
    for (int i = 0; i < 2; ++i) {
        const double yaw = (i == 0 ? 1.0 : -1.0) * cfg.yaw_deg * std::numbers::pi / 180.0;
        const Eigen::Vector3d dir(std::cos(el) * std::cos(yaw), std::cos(el) * std::sin(yaw), std::sin(el));
        cams.push_back(CameraModel::look_at(k, cfg.center + cfg.distance * dir, cfg.center, Eigen::Vector3d::UnitZ(),
                                            "cam" + std::to_string(i)));
    }
    return cams;
}

/// Sensor corruption: Gaussian pixel noise, per-view depth with bias and jitter, random occlusion.
struct NoiseModel {
    double pixel_sigma = 0.5;   // pixels
    double depth_bias = 0.0;    // meters, added to the true depth
    double depth_jitter = 0.0;  // meters, Gaussian sigma
    double occlusion_prob = 0.0;

    void validate() const {
        if (!(pixel_sigma >= 0.0) || !(depth_bias >= 0.0) || !(depth_jitter >= 0.0) ||
            !(occlusion_prob >= 0.0 && occlusion_prob <= 1.0)) {
            throw ConfigError("noise parameters must be non-negative (occlusion probability in [0, 1])");
        }
    }

    static NoiseModel none() { return {0.0, 0.0, 0.0, 0.0}; }
};

/// Per-view pixel observations of K points and their measured depths.
struct ViewObservation {
    std::vector<std::vector<dataio::PixelObservation>> pixels;  // [view][k]
    std::vector<Eigen::VectorXd> depth;                         // [view](k)
};

/// Projects every column of `points` into every camera and corrupts the result. Every random
/// number is drawn regardless of the noise magnitudes, so changing a magnitude never shifts the
/// generator stream.
inline ViewObservation observe_points(const Eigen::Matrix3Xd& points, const std::vector<CameraModel>& cameras,
                                      const NoiseModel& noise, std::mt19937_64& rng) {
    noise.validate();
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ViewObservation out;
    for (const auto& cam : cameras) {
        std::vector<dataio::PixelObservation> view;
        Eigen::VectorXd depth(points.cols());
        for (Eigen::Index k = 0; k < points.cols(); ++k) {
            const geometry::Point2 px = cam.project(points.col(k));
            const double nu = gauss(rng);
            const double nv = gauss(rng);
            const double occ = unit(rng);
            const double nd = gauss(rng);
            view.push_back({px + noise.pixel_sigma * Eigen::Vector2d(nu, nv), occ < noise.occlusion_prob});
            depth(k) = cam.depth(points.col(k)) + noise.depth_bias + noise.depth_jitter * nd;
        }
        out.pixels.push_back(std::move(view));
        out.depth.push_back(std::move(depth));
    }
    return out;
}

enum class LiftingMode { Triangulated, SensorDepth };

inline std::string to_string(LiftingMode m) { return m == LiftingMode::Triangulated ? "triangulated" : "sensor"; }

inline LiftingMode lifting_mode_from_string(const std::string& s) {
    if (s == "triangulated") return LiftingMode::Triangulated;
    if (s == "sensor") return LiftingMode::SensorDepth;
    throw ConfigError("unknown lifting mode '" + s + "'");
}

/// Back-projects each pixel of one view through its measured depth. Non-positive depths are
/// clamped to 1 mm so the result stays finite.
inline Eigen::Matrix3Xd lift_with_sensor_depth(const ViewObservation& obs, const std::vector<CameraModel>& cameras,
                                               std::size_t view = 0) {
    if (view >= cameras.size() || view >= obs.pixels.size()) throw ShapeMismatch("view index out of range");
    const auto& px = obs.pixels[view];
    Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(px.size()));
    for (std::size_t k = 0; k < px.size(); ++k) {
        const double d = std::max(obs.depth[view](static_cast<Eigen::Index>(k)), 1e-3);
        out.col(static_cast<Eigen::Index>(k)) = cameras[view].back_project(px[k].pixel, d);
    }
    return out;
}

/// Online per-point lifting with hold-last-value for occluded points, as used during rollouts.
class PointTracker {
public:
    PointTracker(std::vector<CameraModel> cameras, LiftingMode mode) : cameras_(std::move(cameras)), mode_(mode) {}

    /// 3D estimate of every point; occluded points keep their previous estimate. Before the first
    /// valid measurement the occlusion flag is ignored.
    Eigen::Matrix3Xd update(const ViewObservation& obs) {
        const auto k = static_cast<Eigen::Index>(obs.pixels.front().size());
        if (last_.cols() != k) {
            last_.resize(3, k);
            valid_.assign(static_cast<std::size_t>(k), false);
        }
        const Eigen::Matrix3Xd sensor = mode_ == LiftingMode::SensorDepth ? lift_with_sensor_depth(obs, cameras_)
                                                                          : Eigen::Matrix3Xd();
        std::vector<geometry::Observation> views;
        for (Eigen::Index i = 0; i < k; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            bool occluded = false;
            if (mode_ == LiftingMode::SensorDepth) {
                occluded = obs.pixels[0][ui].occluded;
            } else {
                for (const auto& view : obs.pixels) occluded = occluded || view[ui].occluded;
            }
            if (occluded && valid_[ui]) continue;
            if (mode_ == LiftingMode::SensorDepth) {
                last_.col(i) = sensor.col(i);
            } else {
                views.clear();
                for (std::size_t v = 0; v < cameras_.size(); ++v) views.push_back({&cameras_[v], obs.pixels[v][ui].pixel});
                last_.col(i) = geometry::triangulate_dlt(views);
            }
            valid_[ui] = true;
        }
        return last_;
    }

private:
    std::vector<CameraModel> cameras_;
    LiftingMode mode_;
    Eigen::Matrix3Xd last_;
    std::vector<bool> valid_;
};

}  // namespace pointpolicy::simenv
