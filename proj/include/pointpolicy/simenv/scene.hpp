#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pointpolicy/control/backtrack.hpp"
#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/rigid.hpp"
#include "pointpolicy/simenv/task.hpp"

namespace pointpolicy::simenv {

using geometry::Point3;
using geometry::Pose;
using geometry::RigidTransform;

/// Rigid body described only by its keypoints (object frame) and a pose.
struct SceneObject {
    std::string name;
    RigidTransform pose;
    std::vector<std::string> point_names;
    Eigen::Matrix3Xd local_points;
    bool graspable = false;
    bool pushable = false;
    double rest_height = 0.0;

    Point3 centroid() const { return pose.apply(local_points.rowwise().mean()); }
    Eigen::Matrix3Xd world_points() const {
        return (pose.rotation() * local_points).colwise() + pose.translation();
    }
};

inline RigidTransform yaw_pose(const Point3& position, double yaw) {
    return {geometry::rotation_about(Eigen::Vector3d::UnitZ(), yaw), position};
}

/// Yaw of the object's x axis projected on the table plane.
inline double yaw_of(const Eigen::Matrix3d& r) { return std::atan2(r(1, 0), r(0, 0)); }

/// Kinematic point-space world: an end effector, objects, and a snap grasp.
struct Scene {
    TaskSpec spec;
    Pose ee;
    bool gripper_closed = false;
    std::vector<SceneObject> objects;
    int attached = -1;
    RigidTransform grasp_offset;  // object pose in the end-effector frame while attached
    std::uint64_t seed = 0;
    int clamp_events = 0;

    int num_object_points() const {
        int n = 0;
        for (const auto& o : objects) n += static_cast<int>(o.local_points.cols());
        return n;
    }

    /// 3 x N_o object keypoints, objects in order.
    Eigen::Matrix3Xd object_points() const {
        Eigen::Matrix3Xd out(3, num_object_points());
        Eigen::Index c = 0;
        for (const auto& o : objects) {
            out.middleCols(c, o.local_points.cols()) = o.world_points();
            c += o.local_points.cols();
        }
        return out;
    }

    std::vector<dataio::KeypointSpec> object_keypoints() const {
        std::vector<dataio::KeypointSpec> out;
        for (const auto& o : objects) {
            for (const auto& n : o.point_names) out.push_back({n, dataio::KeypointRole::Object, o.name});
        }
        return out;
    }

    const SceneObject& object(const std::string& name) const {
        for (const auto& o : objects) {
            if (o.name == name) return o;
        }
        throw InvalidSpec("scene has no object '" + name + "'");
    }
};

inline Point3 sample_box(const SpawnBox& box, std::mt19937_64& rng) {
    Point3 p;
    for (int i = 0; i < 3; ++i) {
        // Drawn even for zero-width axes so the generator stream does not depend on the ranges.
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        p(i) = box.lower(i) + u * (box.upper(i) - box.lower(i));
    }
    return p;
}

/// Deterministic scene for (spec, seed).
inline Scene reset(const TaskSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    Scene s;
    s.spec = spec;
    s.seed = seed;
    s.ee = spec.home;
    const Point3 a = sample_box(spec.object_spawn, rng);
    const Point3 b = sample_box(spec.target_spawn, rng);
    const double yaw = spec.yaw_min + std::uniform_real_distribution<double>(0.0, 1.0)(rng) * (spec.yaw_max - spec.yaw_min);
    const Eigen::Matrix3Xd origin = Eigen::Matrix3Xd::Zero(3, 1);
    switch (spec.kind) {
        case TaskKind::Reach:
            s.objects.push_back({"goal", yaw_pose(a, 0.0), {"goal"}, origin, false, false, a.z()});
            break;
        case TaskKind::PushBlock: {
            Eigen::Matrix3Xd pts(3, 2);
            pts << spec.block_half_size, -spec.block_half_size, 0, 0, 0, 0;
            s.objects.push_back({"block", yaw_pose(a, 0.0), {"block_a", "block_b"}, pts, false, true, a.z()});
            s.objects.push_back({"target", yaw_pose(b, 0.0), {"target"}, origin, false, false, b.z()});
            break;
        }
        case TaskKind::PickPlace: {
            Eigen::Matrix3Xd pts(3, 2);
            pts << spec.object_half_length, -spec.object_half_length, 0, 0, 0, 0;
            s.objects.push_back({"object", yaw_pose(a, yaw), {"object_a", "object_b"}, pts, true, false, spec.rest_height});
            s.objects.push_back({"plate", yaw_pose(b, 0.0), {"plate"}, origin, false, false, b.z()});
            break;
        }
    }
    return s;
}

/// Paddle-like pushing: when the pusher moving from `prev` to `tcp` comes within the contact
/// radius of a pushable object at table height, the object is carried along the pusher's motion
/// direction until it is back at the contact radius. Without horizontal motion it is pushed out
/// along the line between the centres.
inline void apply_push(Scene& s, const Point3& prev, const Point3& tcp) {
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        auto& o = s.objects[i];
        if (!o.pushable || static_cast<int>(i) == s.attached) continue;
        const Point3 c = o.pose.translation();
        if (std::abs(tcp.z() - c.z()) > s.spec.block_half_size + 0.01) continue;
        const Eigen::Vector2d q = c.head<2>() - tcp.head<2>();
        const double r = s.spec.pusher_contact_radius;
        if (q.norm() >= r) continue;
        Eigen::Vector2d shift;
        const Eigen::Vector2d motion = tcp.head<2>() - prev.head<2>();
        if (motion.norm() > 1e-12) {
            const Eigen::Vector2d m = motion.normalized();
            const double qm = q.dot(m);
            shift = (-qm + std::sqrt(qm * qm - q.squaredNorm() + r * r)) * m;
        } else {
            const double d = q.norm();
            shift = (d > 1e-12 ? Eigen::Vector2d(q / d) : Eigen::Vector2d::UnitX()) * (r - d);
        }
        Point3 moved = c;
        moved.head<2>() += shift;
        o.pose = RigidTransform(o.pose.rotation(), moved);
    }
}

/// Distance from the grasp point to the nearest graspable object, and its index.
inline std::pair<int, double> nearest_graspable(const Scene& s) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
        if (!s.objects[i].graspable) continue;
        const double d = (s.objects[i].centroid() - s.ee.position()).norm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return {best, best_d};
}

/// Position-control step: the end effector moves to the (clamped) commanded pose, sweeping
/// through 5 mm sub-steps for pushing; a closed gripper within the grasp radius of a graspable
/// object attaches it; opening releases it onto the table.
inline void step(Scene& s, const control::Action& action) {
    if (!action.pose.position().allFinite()) throw InvalidSpec("non-finite action");
    Point3 target = action.pose.position();
    if (!s.spec.workspace.contains(target)) {
        target = s.spec.workspace.clamp(target);
        ++s.clamp_events;
    }
    const Point3 start = s.ee.position();
    const double len = (target - start).norm();
    const int sub = std::max(1, static_cast<int>(std::ceil(len / 0.005)));
    for (int i = 1; i <= sub; ++i) {
        apply_push(s, start + (target - start) * (static_cast<double>(i - 1) / sub),
                   start + (target - start) * (static_cast<double>(i) / sub));
    }
    s.ee = Pose(target, action.pose.orientation());

    if (action.gripper_closed && s.attached < 0) {
        const auto [idx, dist] = nearest_graspable(s);
        if (idx >= 0 && dist < s.spec.grasp_radius) {
            s.attached = idx;
            s.grasp_offset = s.ee.transform().inverse() * s.objects[static_cast<std::size_t>(idx)].pose;
        }
    }
    if (!action.gripper_closed && s.attached >= 0) {
        auto& o = s.objects[static_cast<std::size_t>(s.attached)];
        Point3 p = o.pose.translation();
        p.z() = o.rest_height;
        o.pose = yaw_pose(p, yaw_of(o.pose.rotation()));
        s.attached = -1;
    }
    s.gripper_closed = action.gripper_closed;
    if (s.attached >= 0) {
        s.objects[static_cast<std::size_t>(s.attached)].pose = s.ee.transform() * s.grasp_offset;
    }
}

/// Task-specific error: the distance the success predicate thresholds.
inline double task_error(const Scene& s) {
    switch (s.spec.kind) {
        case TaskKind::Reach: return (s.ee.position() - s.object("goal").centroid()).norm();
        case TaskKind::PushBlock: return (s.object("block").centroid() - s.object("target").centroid()).norm();
        case TaskKind::PickPlace: return (s.object("object").centroid() - s.object("plate").centroid()).norm();
    }
    return std::numeric_limits<double>::infinity();
}

/// Strict inequality: error < zone radius + margin. A carried object does not count as placed.
inline bool success(const Scene& s) {
    if (s.spec.kind == TaskKind::PickPlace && s.attached >= 0) return false;
    return task_error(s) < s.spec.success_radius();
}

}  // namespace pointpolicy::simenv
