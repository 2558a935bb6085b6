#pragma once

// Small synthetic data shared by the unit tests.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/retarget/keypoints.hpp"
#include "pointpolicy/retarget/retarget.hpp"
#include "pointpolicy/simenv/expert.hpp"
#include "pointpolicy/simenv/scene.hpp"
#include "pointpolicy/simenv/sensing.hpp"

namespace fixtures {

using namespace pointpolicy;

/// Robot-frame demo: default robot keypoints along a smooth random path, then `objects` static
/// object points; the gripper closes halfway through. Every coordinate is shifted by `shift`.
inline dataio::Demonstration robot_demo(int frames, std::uint64_t seed, int objects = 2,
                                        const Eigen::Vector3d& shift = Eigen::Vector3d::Zero(),
                                        const std::string& task = "synthetic") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    const auto offsets = retarget::OffsetTable::default_table();
    dataio::Demonstration d;
    d.header.task = task;
    d.header.rate_hz = 20.0 / 3.0;
    d.header.seed = seed;
    for (const auto& n : offsets.names()) d.header.keypoints.push_back({n, dataio::KeypointRole::Robot, "robot"});
    for (int k = 0; k < objects; ++k) d.header.keypoints.push_back({"obj" + std::to_string(k), dataio::KeypointRole::Object, "obj"});
    const Eigen::Vector3d start(0.45 + u(rng), u(rng), 0.2 + 0.5 * u(rng));
    const Eigen::Vector3d goal(0.55 + u(rng), u(rng), 0.08);
    Eigen::Matrix3Xd obj(3, objects);
    for (int k = 0; k < objects; ++k) obj.col(k) = goal + Eigen::Vector3d(u(rng), u(rng), 0.0) * 0.2;
    const double yaw = u(rng);
    for (int f = 0; f < frames; ++f) {
        const double s = frames > 1 ? static_cast<double>(f) / (frames - 1) : 0.0;
        const double a = s * s * (3.0 - 2.0 * s);
        const geometry::Quaternion q = geometry::Quaternion(Eigen::AngleAxisd(a * yaw, Eigen::Vector3d::UnitZ())) *
                                       geometry::Quaternion(0.0, 1.0, 0.0, 0.0);
        const geometry::Pose pose(start + a * (goal - start), q.normalized());
        Eigen::Matrix3Xd pts(3, offsets.size() + objects);
        pts << retarget::pose_to_keypoints(pose, offsets), obj;
        dataio::DemoFrame fr;
        fr.timestamp = static_cast<double>(f) / d.header.rate_hz;
        fr.points3d = pts.colwise() + shift;
        fr.gripper = dataio::GripperRecord{2 * f >= frames, 2 * f >= frames ? 0.03 : 0.1};
        d.frames.push_back(std::move(fr));
    }
    return d;
}

/// Scripted-expert reach demo, retargeted and subsampled to the control rate.
inline dataio::Demonstration expert_robot_demo(const simenv::TaskSpec& spec, std::uint64_t seed) {
    const auto cams = simenv::default_cameras();
    const simenv::Scene scene = simenv::reset(spec, seed);
    std::mt19937_64 rng(seed);
    const auto e = simenv::scripted_expert(scene, cams, simenv::NoiseModel{}, rng);
    return dataio::subsample(retarget::retarget_demo(e.demo, cams, retarget::OffsetTable::default_table()), 3);
}

}  // namespace fixtures
