#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pointpolicy/control/backtrack.hpp"
#include "pointpolicy/retarget/hand.hpp"
#include "pointpolicy/retarget/keypoints.hpp"
#include "pointpolicy/retarget/retarget.hpp"
#include "pointpolicy/simenv/sensing.hpp"

using namespace pointpolicy;
using namespace pointpolicy::retarget;
using geometry::Pose;
using geometry::Quaternion;

namespace {

const Quaternion kDown(0.0, 1.0, 0.0, 0.0);

Eigen::Matrix3d rz(double a) { return geometry::rotation_about(Eigen::Vector3d::UnitZ(), a); }

HandFrame make_hand(const Eigen::Matrix3Xd& pts, double t = 0.0) { return {t, default_hand_schema(), pts}; }

/// Open hand: fingertips 10 cm apart above the workspace.
Eigen::Matrix3Xd open_hand() {
    Eigen::Matrix3Xd p(3, 4);
    p.col(0) = Point3(0.50, 0.05, 0.10);  // index tip
    p.col(1) = Point3(0.50, -0.05, 0.10);  // thumb tip
    p.col(2) = Point3(0.48, 0.04, 0.16);  // index knuckle
    p.col(3) = Point3(0.42, 0.00, 0.18);  // wrist base
    return p;
}

Eigen::Matrix3Xd hand_with_tip_distance(double d) {
    Eigen::Matrix3Xd p = open_hand();
    p.col(0) = Point3(0.50, d / 2, 0.10);
    p.col(1) = Point3(0.50, -d / 2, 0.10);
    return p;
}

Pose random_pose(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    return {{u(rng), u(rng), u(rng)}, Quaternion(n(rng), n(rng), n(rng), n(rng)).normalized()};
}

Eigen::Matrix3Xd transform(const Eigen::Matrix3Xd& p, const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
    return (r * p).colwise() + t;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Gripper

TEST(Gripper, FiveCentimetresIsClosed) {
    const GripperState g = gripper_from_hand(make_hand(hand_with_tip_distance(0.05)));
    EXPECT_TRUE(g.closed);
    EXPECT_NEAR(g.distance, 0.05, 1e-12);
}

TEST(Gripper, TenCentimetresIsOpen) { EXPECT_FALSE(gripper_from_hand(make_hand(hand_with_tip_distance(0.10))).closed); }

TEST(Gripper, ThresholdDistanceIsOpen) {
    Eigen::Matrix3Xd p = open_hand();
    p.col(0) = Point3(0.0, 0.0, 0.0);
    p.col(1) = Point3(0.07, 0.0, 0.0);
    const GripperState g = gripper_from_hand(make_hand(p));
    ASSERT_EQ(g.distance, 0.07);
    EXPECT_FALSE(g.closed);
}

TEST(Gripper, DefaultThresholdIsSevenCentimetres) { EXPECT_DOUBLE_EQ(kDefaultGripperThreshold, 0.07); }

TEST(Gripper, MissingTipIsReported) {
    HandFrame f(0.0, {"index_tip", "a", "b", "c"}, open_hand());
    EXPECT_THROW(gripper_from_hand(f), MissingKeypoint);
}

TEST(Gripper, MonotoneInDistance) {
    bool was_closed = false;
    for (double d = 0.15; d >= 0.0; d -= 0.001) {
        const bool closed = gripper_from_hand(make_hand(hand_with_tip_distance(d))).closed;
        EXPECT_FALSE(was_closed && !closed) << "reopened at " << d;
        was_closed = closed;
    }
    EXPECT_TRUE(was_closed);
}

// ---------------------------------------------------------------------------------------------
// Hand pose

TEST(HandPose, FirstFrameGivesBaseOrientation) {
    const HandFrame f = make_hand(open_hand());
    const Pose p = hand_to_pose(f, f, kDown);
    EXPECT_LE(geometry::angular_distance(p.orientation(), kDown), 1e-9);
    EXPECT_LE((p.position() - Point3(0.50, 0.0, 0.10)).norm(), 1e-12);
}

TEST(HandPose, RotatedHandRotatesOrientation) {
    const HandFrame f0 = make_hand(open_hand());
    const Eigen::Matrix3d r = rz(std::numbers::pi / 6);
    const HandFrame ft = make_hand(r * open_hand());
    const Pose p = hand_to_pose(f0, ft, kDown);
    const Eigen::Matrix3d expected = r * geometry::quaternion_to_matrix(kDown);
    EXPECT_LE((p.rotation() - expected).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(HandPose, TranslatedHandShiftsPositionOnly) {
    const HandFrame f0 = make_hand(open_hand());
    const HandFrame ft = make_hand(open_hand().colwise() + Eigen::Vector3d(0.2, 0, 0));
    const Pose p0 = hand_to_pose(f0, f0, kDown);
    const Pose p = hand_to_pose(f0, ft, kDown);
    EXPECT_LE(geometry::angular_distance(p.orientation(), kDown), 1e-9);
    EXPECT_LE((p.position() - p0.position() - Eigen::Vector3d(0.2, 0, 0)).norm(), 1e-12);
}

TEST(HandPose, CollinearFirstFrameIsDegenerate) {
    Eigen::Matrix3Xd p(3, 4);
    p << 0, 1, 2, 3, 0, 1, 2, 3, 0, 0, 0, 0;
    EXPECT_THROW(hand_to_pose(make_hand(p), make_hand(open_hand()), kDown), DegenerateConfiguration);
}

TEST(HandPose, SchemaMismatchIsReported) {
    const HandFrame a = make_hand(open_hand());
    const HandFrame b(0.0, {"index_tip", "thumb_tip", "x", "y"}, open_hand());
    EXPECT_THROW(hand_to_pose(a, b, kDown), MissingKeypoint);
}

TEST(HandPose, ConsistentWithRigidHandMotion) {
    // Rigidly transforming every frame by G transforms the pose by G.
    std::mt19937_64 rng(31);
    const HandFrame f0 = make_hand(open_hand());
    for (int i = 0; i < 50; ++i) {
        const Pose motion = random_pose(rng);
        const HandFrame ft = make_hand(transform(open_hand(), motion.rotation(), motion.position()));
        const Pose g = random_pose(rng);
        const Pose p = hand_to_pose(f0, ft, kDown);
        const HandFrame g0 = make_hand(transform(f0.points, g.rotation(), g.position()));
        const HandFrame gt = make_hand(transform(ft.points, g.rotation(), g.position()));
        const Pose pg = hand_to_pose(g0, gt, kDown);
        EXPECT_LE((pg.position() - g.apply(p.position())).norm(), 1e-12);
        // Relative hand motion is conjugated by G: R' = G R G^T.
        const Eigen::Matrix3d rel = p.rotation() * geometry::quaternion_to_matrix(kDown).transpose();
        const Eigen::Matrix3d rel_g = pg.rotation() * geometry::quaternion_to_matrix(kDown).transpose();
        EXPECT_LE((rel_g - g.rotation() * rel * g.rotation().transpose()).cwiseAbs().maxCoeff(), 1e-9);
    }
}

// ---------------------------------------------------------------------------------------------
// Robot keypoints

TEST(Keypoints, IdentityPoseGivesOffsetTranslations) {
    const OffsetTable t = OffsetTable::default_table();
    EXPECT_LE((pose_to_keypoints(Pose::identity(), t) - t.translations()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Keypoints, TranslationShiftsEveryPoint) {
    const OffsetTable t = OffsetTable::default_table();
    std::mt19937_64 rng(32);
    const Pose p = random_pose(rng);
    const Eigen::Vector3d s(0.1, -0.2, 0.05);
    const Eigen::Matrix3Xd a = pose_to_keypoints(p, t);
    const Eigen::Matrix3Xd b = pose_to_keypoints(Pose(p.position() + s, p.orientation()), t);
    EXPECT_LE(((b - a).colwise() - s).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Keypoints, WristPointIsPosePosition) {
    const OffsetTable t = OffsetTable::default_table();
    std::mt19937_64 rng(33);
    const Pose p = random_pose(rng);
    EXPECT_EQ(pose_to_keypoints(p, t).col(t.wrist_index()), p.position());
}

TEST(Keypoints, DistancesMatchOffsetTable) {
    const OffsetTable t = OffsetTable::default_table();
    const Eigen::MatrixXd reference = distance_table(t.translations());
    std::mt19937_64 rng(34);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::MatrixXd d = distance_table(pose_to_keypoints(random_pose(rng), t));
        EXPECT_LE((d - reference).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Keypoints, OffsetTableValidation) {
    const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
    using geometry::RigidTransform;
    EXPECT_THROW(OffsetTable({"w", "a"}, {RigidTransform()}, 0), ConfigError);
    EXPECT_THROW(OffsetTable({"w", "a", "b"}, {RigidTransform(), {i3, {1, 0, 0}}, {i3, {2, 0, 0}}}, 0),
                 DegenerateConfiguration);
    EXPECT_THROW(OffsetTable({"w", "a", "b"}, {{i3, {1, 0, 0}}, {i3, {0, 1, 0}}, {i3, {0, 0, 1}}}, 0), ConfigError);
    EXPECT_THROW(OffsetTable({"w", "a", "b"}, {RigidTransform(), {i3, {1, 0, 0}}, {i3, {0, 1, 0}}}, 3), ConfigError);
}

// ---------------------------------------------------------------------------------------------
// Roundtrip with backtracking

TEST(Roundtrip, BacktrackingRecoversEveryPose) {
    const OffsetTable t = OffsetTable::default_table();
    std::mt19937_64 rng(35);
    for (int i = 0; i < 1000; ++i) {
        const Pose p = random_pose(rng);
        const control::Action a = control::backtrack_action(pose_to_keypoints(p, t), t, kDown);
        EXPECT_LE((a.pose.position() - p.position()).norm(), 1e-6);
        EXPECT_LE(geometry::angular_distance(a.pose.orientation(), p.orientation()), 1e-6);
    }
}

TEST(Roundtrip, HoldsForNonDefaultOffsetsAndBase) {
    const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
    const OffsetTable t({"a", "wrist", "b", "c"},
                        {{i3, {0.0, 0.0, 0.1}}, {}, {rz(0.3), {0.05, 0.02, 0.0}}, {i3, {-0.01, 0.06, 0.03}}}, 1);
    const Quaternion base = Quaternion(Eigen::AngleAxisd(0.4, Eigen::Vector3d(1, 1, 0).normalized()));
    std::mt19937_64 rng(36);
    for (int i = 0; i < 200; ++i) {
        const Pose p = random_pose(rng);
        const control::Action a = control::backtrack_action(pose_to_keypoints(p, t), t, base);
        EXPECT_LE((a.pose.position() - p.position()).norm(), 1e-6);
        EXPECT_LE(geometry::angular_distance(a.pose.orientation(), p.orientation()), 1e-6);
    }
}

// ---------------------------------------------------------------------------------------------
// Lifting

namespace {

std::vector<CameraModel> cameras() { return simenv::default_cameras(); }

std::vector<dataio::PixelObservation> views_of(const Point3& x, const std::vector<CameraModel>& cams) {
    std::vector<dataio::PixelObservation> v;
    for (const auto& c : cams) v.push_back({c.project(x), false});
    return v;
}

}  // namespace

TEST(Lifting, MatchesPerFrameTriangulation) {
    const auto cams = cameras();
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<std::vector<dataio::PixelObservation>> track;
    std::vector<Point3> truth;
    for (int f = 0; f < 50; ++f) {
        truth.emplace_back(0.5 + u(rng), u(rng), 0.1 + u(rng));
        track.push_back(views_of(truth.back(), cams));
    }
    const auto lifted = lift_track(track, cams);
    ASSERT_EQ(lifted.size(), truth.size());
    for (std::size_t f = 0; f < truth.size(); ++f) {
        const Point3 direct = geometry::triangulate_dlt({{&cams[0], track[f][0].pixel}, {&cams[1], track[f][1].pixel}});
        EXPECT_LT((lifted[f] - direct).norm(), 1e-12);
        EXPECT_LT((lifted[f] - truth[f]).norm(), 1e-6);
    }
}

TEST(Lifting, OccludedTailHoldsLastValue) {
    const auto cams = cameras();
    std::vector<std::vector<dataio::PixelObservation>> track;
    for (int f = 0; f < 10; ++f) {
        track.push_back(views_of(Point3(0.4 + 0.01 * f, 0.0, 0.1), cams));
        if (f > 4) track.back()[f % 2].occluded = true;
    }
    const auto lifted = lift_track(track, cams);
    for (std::size_t f = 5; f < lifted.size(); ++f) EXPECT_EQ(lifted[f], lifted[4]);
    EXPECT_NEAR(lifted[4].x(), 0.44, 1e-6);
}

TEST(Lifting, LeadingOcclusionTakesFirstVisibleValue) {
    const auto cams = cameras();
    std::vector<std::vector<dataio::PixelObservation>> track;
    for (int f = 0; f < 5; ++f) {
        track.push_back(views_of(Point3(0.4 + 0.01 * f, 0.0, 0.1), cams));
        if (f < 2) track.back()[0].occluded = true;
    }
    const auto lifted = lift_track(track, cams);
    EXPECT_EQ(lifted[0], lifted[2]);
    EXPECT_EQ(lifted[1], lifted[2]);
}

TEST(Lifting, EmptyTrackGivesEmptyOutput) { EXPECT_TRUE(lift_track({}, cameras()).empty()); }

TEST(Lifting, NeverVisibleTrackIsDegenerate) {
    const auto cams = cameras();
    auto v = views_of(Point3(0.5, 0, 0.1), cams);
    v[1].occluded = true;
    EXPECT_THROW(lift_track({v, v}, cams), DegenerateGeometry);
}

// ---------------------------------------------------------------------------------------------
// Whole demonstrations

namespace {

/// Two-view human demo from 3D hand points (one 3 x 4 matrix per frame) and one static object point.
dataio::Demonstration human_demo(const std::vector<Eigen::Matrix3Xd>& hands, const std::vector<CameraModel>& cams) {
    dataio::Demonstration d;
    d.header.task = "reach";
    for (const auto& c : cams) d.header.views.push_back(c.id());
    for (const auto& n : default_hand_schema()) d.header.keypoints.push_back({n, dataio::KeypointRole::Hand, "hand"});
    d.header.keypoints.push_back({"goal", dataio::KeypointRole::Object, "goal"});
    const Point3 goal(0.55, 0.1, 0.05);
    for (std::size_t f = 0; f < hands.size(); ++f) {
        dataio::DemoFrame frame;
        frame.timestamp = 0.05 * static_cast<double>(f);
        frame.views.resize(cams.size());
        for (std::size_t v = 0; v < cams.size(); ++v) {
            for (Eigen::Index k = 0; k < hands[f].cols(); ++k) frame.views[v].push_back({cams[v].project(hands[f].col(k)), false});
            frame.views[v].push_back({cams[v].project(goal), false});
        }
        d.frames.push_back(std::move(frame));
    }
    return d;
}

}  // namespace

TEST(RetargetDemo, StaticHandGivesConstantRobotKeypoints) {
    const auto cams = cameras();
    const auto demo = human_demo(std::vector<Eigen::Matrix3Xd>(8, open_hand()), cams);
    const OffsetTable t = OffsetTable::default_table();
    const auto out = retarget_demo(demo, cams, t);
    ASSERT_EQ(out.size(), 8u);
    ASSERT_EQ(out.header.keypoints.size(), 6u);
    EXPECT_EQ(out.header.keypoints.front().role, dataio::KeypointRole::Robot);
    EXPECT_EQ(out.header.keypoints.back().name, "goal");
    for (const auto& f : out.frames) {
        EXPECT_LE((*f.points3d - *out.frames.front().points3d).cwiseAbs().maxCoeff(), 1e-12);
        ASSERT_TRUE(f.gripper.has_value());
        EXPECT_FALSE(f.gripper->closed);
    }
    EXPECT_NO_THROW(out.validate());
}

TEST(RetargetDemo, SingleFrameInSingleFrameOut) {
    const auto cams = cameras();
    const auto out = retarget_demo(human_demo({open_hand()}, cams), cams, OffsetTable::default_table());
    EXPECT_EQ(out.size(), 1u);
}

TEST(RetargetDemo, EmptyDemoIsRejected) {
    const auto cams = cameras();
    auto d = human_demo({open_hand()}, cams);
    d.frames.clear();
    EXPECT_THROW(retarget_demo(d, cams, OffsetTable::default_table()), EmptyDataset);
}

TEST(RetargetDemo, RobotKeypointsStayRigid) {
    const auto cams = cameras();
    std::vector<Eigen::Matrix3Xd> hands;
    for (int f = 0; f < 30; ++f) {
        const double a = 0.02 * f;
        hands.push_back(transform(hand_with_tip_distance(0.10 - 0.002 * f), rz(a), Eigen::Vector3d(0.003 * f, 0, 0)));
    }
    const OffsetTable t = OffsetTable::default_table();
    const auto out = retarget_demo(human_demo(hands, cams), cams, t);
    const Eigen::MatrixXd reference = distance_table(t.translations());
    bool any_closed = false;
    for (const auto& f : out.frames) {
        EXPECT_LE((distance_table(f.points3d->leftCols(t.size())) - reference).cwiseAbs().maxCoeff(), 1e-9);
        any_closed = any_closed || f.gripper->closed;
    }
    EXPECT_TRUE(any_closed);
}

TEST(RetargetDemo, MissingFingertipIsReported) {
    const auto cams = cameras();
    auto d = human_demo({open_hand()}, cams);
    d.header.keypoints[0].name = "pinky_tip";
    EXPECT_THROW(retarget_demo(d, cams, OffsetTable::default_table()), MissingKeypoint);
}

TEST(RetargetDemo, CameraMismatchIsReported) {
    const auto cams = cameras();
    auto d = human_demo({open_hand()}, cams);
    d.header.views = {"left", "right"};
    EXPECT_THROW(retarget_demo(d, cams, OffsetTable::default_table()), ShapeMismatch);
}
