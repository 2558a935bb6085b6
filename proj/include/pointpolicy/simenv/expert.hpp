#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pointpolicy/control/backtrack.hpp"
#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/rigid.hpp"
#include "pointpolicy/retarget/hand.hpp"
#include "pointpolicy/simenv/scene.hpp"
#include "pointpolicy/simenv/sensing.hpp"

namespace pointpolicy::simenv {

inline constexpr double kOpenAperture = 0.10;
inline constexpr double kClosedAperture = 0.03;
inline constexpr double kDemoRateHz = 20.0;

/// Demonstrator hand geometry in its own frame: fingertips at +-aperture/2 along y, knuckle and
/// wrist behind them along -z.
struct HandModel {
    Eigen::Vector3d knuckle{0.015, 0.02, -0.06};
    Eigen::Vector3d wrist_base{-0.01, 0.0, -0.12};
    /// Hand orientation at the start of every demo, independent of the robot's base orientation.
    Eigen::Matrix3d initial_rotation = geometry::rotation_about(Eigen::Vector3d::UnitZ(), 0.2) *
                                       geometry::rotation_about(Eigen::Vector3d::UnitX(), std::numbers::pi);

    /// 3 x 4 points in schema order (index_tip, thumb_tip, index_knuckle, wrist_base).
    Eigen::Matrix3Xd points(const Eigen::Vector3d& position, const Eigen::Matrix3d& delta, double aperture) const {
        Eigen::Matrix3Xd local(3, 4);
        local.col(0) = Eigen::Vector3d(0.0, aperture / 2, 0.0);
        local.col(1) = Eigen::Vector3d(0.0, -aperture / 2, 0.0);
        local.col(2) = knuckle;
        local.col(3) = wrist_base;
        return ((delta * initial_rotation) * local).colwise() + position;
    }
};

/// Hand state at one instant: fingertip midpoint, rotation relative to the first frame, aperture.
struct HandState {
    Eigen::Vector3d position;
    double yaw = 0.0;  // the expert only rotates about the vertical axis
    double aperture = kOpenAperture;

    Eigen::Matrix3d delta() const { return geometry::rotation_about(Eigen::Vector3d::UnitZ(), yaw); }
};

/// 10 t^3 - 15 t^4 + 6 t^5: zero velocity and acceleration at both ends.
inline double min_jerk(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// Piecewise minimum-jerk trajectory through hand-state waypoints.
class ExpertPlan {
public:
    struct Segment {
        HandState goal;
        double duration;
    };

    ExpertPlan(HandState start, std::vector<Segment> segments) : start_(start), segments_(std::move(segments)) {}

    double duration() const {
        double d = 0.0;
        for (const auto& s : segments_) d += s.duration;
        return d;
    }

    HandState sample(double t) const {
        HandState from = start_;
        for (const auto& s : segments_) {
            if (t <= s.duration) {
                const double u = min_jerk(s.duration > 0 ? t / s.duration : 1.0);
                return {from.position + u * (s.goal.position - from.position), from.yaw + u * (s.goal.yaw - from.yaw),
                        from.aperture + u * (s.goal.aperture - from.aperture)};
            }
            t -= s.duration;
            from = s.goal;
        }
        return from;
    }

    const std::vector<Segment>& segments() const { return segments_; }

private:
    HandState start_;
    std::vector<Segment> segments_;
};

/// Waypoints that solve the task from the scene's initial state. PlanningFailed when a waypoint
/// leaves the workspace.
inline ExpertPlan plan_expert(const Scene& scene) {
    const TaskSpec& spec = scene.spec;
    const HandState start{scene.ee.position(), 0.0, kOpenAperture};
    std::vector<ExpertPlan::Segment> segs;
    auto add = [&](Eigen::Vector3d p, double yaw, double aperture, double duration) {
        if (!spec.workspace.contains(p, 1e-12)) {
            throw PlanningFailed("waypoint (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ", " +
                                 std::to_string(p.z()) + ") is out of reach");
        }
        segs.push_back({{p, yaw, aperture}, duration});
    };
    switch (spec.kind) {
        case TaskKind::Reach: {
            const Eigen::Vector3d goal = scene.object("goal").centroid();
            add(goal, 0.0, kOpenAperture, 2.0);
            add(goal, 0.0, kOpenAperture, 0.75);
            break;
        }
        case TaskKind::PushBlock: {
            const Eigen::Vector3d block = scene.object("block").centroid();
            const Eigen::Vector3d target = scene.object("target").centroid();
            Eigen::Vector3d dir = target - block;
            dir.z() = 0.0;
            if (dir.norm() < 1e-9) throw PlanningFailed("block already at target");
            dir.normalize();
            const double r = spec.pusher_contact_radius;
            const double h = block.z();
            Eigen::Vector3d pre = block - (r + 0.04) * dir;
            pre.z() = 0.10;
            Eigen::Vector3d down = pre;
            down.z() = h;
            Eigen::Vector3d end = target - r * dir;
            end.z() = h;
            Eigen::Vector3d retreat = end - 0.03 * dir;
            retreat.z() = 0.10;
            add(pre, 0.0, kOpenAperture, 1.5);
            add(down, 0.0, kOpenAperture, 1.0);
            add(end, 0.0, kOpenAperture, 2.0);
            add(retreat, 0.0, kOpenAperture, 1.0);
            add(retreat, 0.0, kOpenAperture, 0.5);
            break;
        }
        case TaskKind::PickPlace: {
            const auto& obj = scene.object("object");
            const Eigen::Vector3d c = obj.centroid();
            const double yaw = yaw_of(obj.pose.rotation());
            const Eigen::Vector3d plate = scene.object("plate").centroid();
            add(c + Eigen::Vector3d(0, 0, 0.10), yaw, kOpenAperture, 1.5);
            add(c, yaw, kOpenAperture, 1.0);
            add(c, yaw, kClosedAperture, 0.6);
            add(c + Eigen::Vector3d(0, 0, 0.12), yaw, kClosedAperture, 1.0);
            add(Eigen::Vector3d(plate.x(), plate.y(), c.z() + 0.12), yaw, kClosedAperture, 1.5);
            add(Eigen::Vector3d(plate.x(), plate.y(), plate.z() + 0.03), yaw, kClosedAperture, 1.0);
            add(Eigen::Vector3d(plate.x(), plate.y(), plate.z() + 0.03), yaw, kOpenAperture, 0.6);
            add(Eigen::Vector3d(plate.x(), plate.y(), plate.z() + 0.12), yaw, kOpenAperture, 0.8);
            break;
        }
    }
    return {start, std::move(segs)};
}

/// Robot command equivalent to a hand state (what retargeting recovers from noiseless tracks).
inline control::Action hand_action(const HandState& h, const geometry::Quaternion& base,
                                   double threshold = retarget::kDefaultGripperThreshold) {
    return {geometry::Pose(h.position, geometry::Quaternion(h.delta() * base.toRotationMatrix()).normalized()),
            h.aperture < threshold, false};
}

struct ExpertDemo {
    dataio::Demonstration demo;         // two-view hand + object tracks, ground-truth 3D attached
    std::vector<control::Action> actions;  // ground-truth robot command per frame
    Scene final_scene;
};

/// Simulated human demonstration at 20 Hz: the hand follows the plan, objects react as if the
/// hand were the robot gripper, and both cameras observe hand and object keypoints.
inline ExpertDemo scripted_expert(const Scene& initial, const std::vector<CameraModel>& cameras,
                                  const NoiseModel& noise, std::mt19937_64& rng, const HandModel& hand = {},
                                  double rate_hz = kDemoRateHz) {
    const ExpertPlan plan = plan_expert(initial);
    const geometry::Quaternion base = initial.spec.home.orientation();
    ExpertDemo out;
    out.final_scene = initial;
    Scene& scene = out.final_scene;

    auto& h = out.demo.header;
    h.task = initial.spec.id();
    h.rate_hz = rate_hz;
    h.seed = initial.seed;
    for (const auto& n : retarget::default_hand_schema()) h.keypoints.push_back({n, dataio::KeypointRole::Hand, "hand"});
    for (const auto& k : initial.object_keypoints()) h.keypoints.push_back(k);
    for (const auto& c : cameras) h.views.push_back(c.id());

    const int frames = static_cast<int>(std::floor(plan.duration() * rate_hz + 1e-9)) + 1;
    for (int f = 0; f < frames; ++f) {
        const double t = f / rate_hz;
        const HandState hs = plan.sample(t);
        const control::Action a = hand_action(hs, base);
        step(scene, a);
        out.actions.push_back(a);

        const Eigen::Matrix3Xd hand_pts = hand.points(hs.position, hs.delta(), hs.aperture);
        const Eigen::Matrix3Xd obj_pts = scene.object_points();
        Eigen::Matrix3Xd all(3, hand_pts.cols() + obj_pts.cols());
        all << hand_pts, obj_pts;
        const ViewObservation obs = observe_points(all, cameras, noise, rng);

        dataio::DemoFrame frame;
        frame.timestamp = t;
        frame.views = obs.pixels;
        frame.points3d = all;
        out.demo.frames.push_back(std::move(frame));
    }
    return out;
}

}  // namespace pointpolicy::simenv
