#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <optional>
#include <vector>

#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/camera.hpp"
#include "pointpolicy/geometry/triangulation.hpp"
#include "pointpolicy/retarget/hand.hpp"
#include "pointpolicy/retarget/keypoints.hpp"

namespace pointpolicy::retarget {

using geometry::CameraModel;

/// Lifts one keypoint's track to 3D. `track[f][v]` is the observation in view v at frame f.
///
/// A frame is triangulated from its unoccluded views; with fewer than two it repeats the previous
/// value. Frames before the first triangulable one take that first value. A track with no
/// triangulable frame at all throws DegenerateGeometry.
inline std::vector<Point3> lift_track(const std::vector<std::vector<dataio::PixelObservation>>& track,
                                      const std::vector<CameraModel>& cameras) {
    std::vector<Point3> out(track.size(), Point3::Zero());
    std::optional<Point3> last;
    std::size_t first_valid = track.size();
    std::vector<geometry::Observation> obs;
    for (std::size_t f = 0; f < track.size(); ++f) {
        if (track[f].size() != cameras.size()) throw ShapeMismatch("track views do not match camera count");
        obs.clear();
        for (std::size_t v = 0; v < cameras.size(); ++v) {
            if (!track[f][v].occluded) obs.push_back({&cameras[v], track[f][v].pixel});
        }
        if (obs.size() >= 2) {
            last = geometry::triangulate_dlt(obs);
            if (first_valid == track.size()) first_valid = f;
        }
        if (last) out[f] = *last;
    }
    if (!track.empty() && !last) throw DegenerateGeometry("keypoint is never visible in two views");
    for (std::size_t f = 0; f < first_valid && f < out.size(); ++f) out[f] = out[first_valid];
    return out;
}

/// Lifts every keypoint of a demonstration; returns one 3 x K matrix per frame.
inline std::vector<Eigen::Matrix3Xd> lift_demo(const dataio::Demonstration& demo,
                                               const std::vector<CameraModel>& cameras) {
    if (cameras.size() != demo.header.views.size()) throw ShapeMismatch("camera count does not match demo views");
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        if (!cameras[v].id().empty() && cameras[v].id() != demo.header.views[v]) {
            throw ShapeMismatch("camera '" + cameras[v].id() + "' does not match view '" + demo.header.views[v] + "'");
        }
    }
    const auto k = static_cast<Eigen::Index>(demo.header.keypoints.size());
    std::vector<Eigen::Matrix3Xd> out(demo.frames.size(), Eigen::Matrix3Xd(3, k));
    std::vector<std::vector<dataio::PixelObservation>> track(demo.frames.size());
    for (Eigen::Index i = 0; i < k; ++i) {
        for (std::size_t f = 0; f < demo.frames.size(); ++f) {
            track[f].clear();
            for (const auto& view : demo.frames[f].views) track[f].push_back(view[static_cast<std::size_t>(i)]);
        }
        const auto lifted = lift_track(track, cameras);
        for (std::size_t f = 0; f < lifted.size(); ++f) out[f].col(i) = lifted[f];
    }
    return out;
}

struct RetargetOptions {
    geometry::Quaternion base_orientation = geometry::Quaternion(0.0, 1.0, 0.0, 0.0);  // gripper pointing down
    double gripper_threshold = kDefaultGripperThreshold;
};

/// Robot-frame demonstration from a two-view hand demonstration: robot keypoints first (offset
/// table order), then the object keypoints in their original order; gripper from finger distance.
inline dataio::Demonstration retarget_demo(const dataio::Demonstration& human, const std::vector<CameraModel>& cameras,
                                           const OffsetTable& offsets, const RetargetOptions& options = {}) {
    if (human.empty()) throw EmptyDataset("cannot retarget an empty demonstration");
    human.validate();
    const auto hand_idx = human.header.indices_with_role(dataio::KeypointRole::Hand);
    const auto object_idx = human.header.indices_with_role(dataio::KeypointRole::Object);
    std::vector<std::string> hand_names;
    for (int i : hand_idx) hand_names.push_back(human.header.keypoints[static_cast<std::size_t>(i)].name);
    for (const char* required : {kIndexTip, kThumbTip}) {
        if (std::find(hand_names.begin(), hand_names.end(), required) == hand_names.end()) {
            throw MissingKeypoint(required);
        }
    }

    const auto lifted = lift_demo(human, cameras);
    auto hand_frame = [&](std::size_t f) {
        Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(hand_idx.size()));
        for (std::size_t j = 0; j < hand_idx.size(); ++j) pts.col(static_cast<Eigen::Index>(j)) = lifted[f].col(hand_idx[j]);
        return HandFrame(human.frames[f].timestamp, hand_names, pts);
    };

    dataio::Demonstration out;
    out.header.version = dataio::kDemoFormatVersion;
    out.header.task = human.header.task;
    out.header.rate_hz = human.header.rate_hz;
    out.header.seed = human.header.seed;
    for (const auto& name : offsets.names()) out.header.keypoints.push_back({name, dataio::KeypointRole::Robot, "robot"});
    for (int i : object_idx) out.header.keypoints.push_back(human.header.keypoints[static_cast<std::size_t>(i)]);

    const HandFrame frame0 = hand_frame(0);
    const auto nr = static_cast<Eigen::Index>(offsets.size());
    for (std::size_t f = 0; f < human.frames.size(); ++f) {
        const HandFrame hf = hand_frame(f);
        const Pose pose = hand_to_pose(frame0, hf, options.base_orientation);
        const GripperState g = gripper_from_hand(hf, options.gripper_threshold);
        Eigen::Matrix3Xd pts(3, nr + static_cast<Eigen::Index>(object_idx.size()));
        pts.leftCols(nr) = pose_to_keypoints(pose, offsets);
        for (std::size_t j = 0; j < object_idx.size(); ++j) pts.col(nr + static_cast<Eigen::Index>(j)) = lifted[f].col(object_idx[j]);
        dataio::DemoFrame frame;
        frame.timestamp = human.frames[f].timestamp;
        frame.points3d = std::move(pts);
        frame.gripper = dataio::GripperRecord{g.closed, g.distance};
        out.frames.push_back(std::move(frame));
    }
    return out;
}

}  // namespace pointpolicy::retarget
