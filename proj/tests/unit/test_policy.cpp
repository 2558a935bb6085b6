#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "pointpolicy/dataio/dataset.hpp"
#include "pointpolicy/policy/checkpoint.hpp"
#include "pointpolicy/policy/gradcheck.hpp"
#include "pointpolicy/policy/loss.hpp"
#include "pointpolicy/policy/policy.hpp"
#include "pointpolicy/policy/train.hpp"

using namespace pointpolicy;
using namespace pointpolicy::policy;

namespace {

PolicyConfig small_arch() {
    PolicyConfig c;
    c.hidden = 32;
    c.heads = 4;
    c.layers = 1;
    c.mlp_ratio = 2;
    return c;
}

dataio::Dataset small_dataset(int demos = 3, const Eigen::Vector3d& shift = Eigen::Vector3d::Zero()) {
    std::vector<dataio::Demonstration> d;
    for (int i = 0; i < demos; ++i) d.push_back(fixtures::robot_demo(30, 10 + static_cast<std::uint64_t>(i), 2, shift));
    dataio::DatasetConfig cfg;
    cfg.val_fraction = 0.0;
    return dataio::build_dataset(d, cfg);
}

ObservationWindow window_of(const dataio::Dataset& ds, int frame) { return ds.window({0, frame}); }

}  // namespace

// ---------------------------------------------------------------------------------------------
// Configuration

TEST(PolicyConfig, DefaultsFollowPublishedHyperparameters) {
    const PolicyConfig p;
    const TrainConfig t;
    EXPECT_EQ(p.hidden, 256);
    EXPECT_EQ(p.history, 10);
    EXPECT_EQ(p.chunk, 20);
    EXPECT_DOUBLE_EQ(t.learning_rate, 1e-4);
    EXPECT_EQ(t.batch_size, 64);
    EXPECT_EQ(t.steps, 100000);
    EXPECT_DOUBLE_EQ(t.beta1, 0.9);
    EXPECT_DOUBLE_EQ(t.beta2, 0.999);
    EXPECT_DOUBLE_EQ(t.epsilon, 1e-8);
    EXPECT_DOUBLE_EQ(t.gripper_weight, 0.1);
}

TEST(PolicyConfig, RejectsInvalidValues) {
    PolicyConfig p;
    p.heads = 3;
    EXPECT_THROW(p.validate(), ConfigError);
    TrainConfig t;
    t.learning_rate = 0.0;
    EXPECT_THROW(t.validate(), ConfigError);
    t = {};
    t.batch_size = 0;
    EXPECT_THROW(t.validate(), ConfigError);
}

TEST(PolicyConfig, TokenCountIncludesGripperToken) {
    PolicyConfig p;
    p.num_robot_points = 5;
    p.num_object_points = 3;
    EXPECT_EQ(p.num_tokens(), 9);
    const TrackTransformer<float> net(p);
    const auto params = net.make_parameters();
    for (const auto& t : params.tensors()) {
        if (t.name == "pos_embed") {
            EXPECT_EQ(t.value.cols(), 9);
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Encoder and forward pass

TEST(Encoder, EmbeddingWidthIsHiddenDimension) {
    const auto ds = small_dataset(1);
    const Policy pol(initial_parameters(ds, PolicyConfig{}, 0));
    const Eigen::VectorXd e = pol.encode_token(Eigen::MatrixX3d::Zero(10, 3));
    EXPECT_EQ(e.size(), 256);
    EXPECT_TRUE(e.allFinite());
}

TEST(Encoder, DeterministicAndShapeChecked) {
    const auto ds = small_dataset(1);
    const Policy pol(initial_parameters(ds, small_arch(), 1));
    Eigen::MatrixX3d h = Eigen::MatrixX3d::Random(10, 3);
    EXPECT_EQ(pol.encode_token(h), pol.encode_token(h));
    EXPECT_THROW(pol.encode_token(Eigen::MatrixX3d::Zero(9, 3)), ShapeMismatch);
}

TEST(Forward, DefaultChunkShape) {
    const auto ds = small_dataset(1);
    const Policy pol(initial_parameters(ds, PolicyConfig{}, 0));
    const ActionChunk c = pol.forward(window_of(ds, 5));
    ASSERT_EQ(c.length(), 20);
    EXPECT_EQ(c.gripper_logits.size(), 20);
    for (const auto& p : c.points) EXPECT_EQ(p.cols(), 5);
    EXPECT_TRUE(c.all_finite());
}

TEST(Forward, DeterministicForSameWindow) {
    const auto ds = small_dataset(1);
    const Policy pol(initial_parameters(ds, small_arch(), 2));
    const auto w = window_of(ds, 12);
    const ActionChunk a = pol.forward(w);
    const ActionChunk b = pol.forward(w);
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.gripper_logits, b.gripper_logits);
}

TEST(Forward, SchemaMismatchIsReported) {
    const auto ds = small_dataset(1);
    const Policy pol(initial_parameters(ds, small_arch(), 3));
    auto w = window_of(ds, 3);
    w.frames.pop_back();
    EXPECT_THROW(pol.forward(w), SchemaMismatch);
    w = window_of(ds, 3);
    for (auto& f : w.frames) f.conservativeResize(3, f.cols() - 1);
    EXPECT_THROW(pol.forward(w), SchemaMismatch);
    w = window_of(ds, 3);
    w.num_robot_points = 4;
    EXPECT_THROW(pol.forward(w), SchemaMismatch);
}

TEST(Forward, ObjectPointsInfluencePredictions) {
    const auto ds = small_dataset(1);
    const Policy pol(initial_parameters(ds, small_arch(), 4));
    auto w = window_of(ds, 10);
    const ActionChunk a = pol.forward(w);
    for (auto& f : w.frames) f.col(f.cols() - 1) += Eigen::Vector3d(0.05, -0.05, 0.0);
    const ActionChunk b = pol.forward(w);
    EXPECT_GT((a.points[5] - b.points[5]).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(b.points[5].cols(), 5);  // chunks only ever carry robot points
}

TEST(Forward, GripperStateInfluencesPredictions) {
    const auto ds = small_dataset(1);
    const Policy pol(initial_parameters(ds, small_arch(), 5));
    auto w = window_of(ds, 10);
    w.gripper_closed = false;
    const ActionChunk a = pol.forward(w);
    w.gripper_closed = true;
    const ActionChunk b = pol.forward(w);
    EXPECT_NE(a.gripper_logits, b.gripper_logits);
}

TEST(Forward, ShiftAbsorbedByStatisticsShiftsPredictions) {
    const Eigen::Vector3d s(0.3, -0.2, 0.15);
    const auto ds = small_dataset(2);
    const auto shifted = small_dataset(2, s);
    const auto pa = initial_parameters(ds, small_arch(), 6);
    auto pb = initial_parameters(shifted, small_arch(), 6);
    ASSERT_EQ(pa.weights, pb.weights);
    EXPECT_LE((pb.stats.mean - pa.stats.mean - s).norm(), 1e-12);
    const Policy a(pa);
    const Policy b(pb);
    for (int f : {0, 7, 29}) {
        const ActionChunk ca = a.forward(ds.window({0, f}));
        const ActionChunk cb = b.forward(shifted.window({0, f}));
        for (int l = 0; l < ca.length(); ++l) {
            EXPECT_LE(((cb.points[static_cast<std::size_t>(l)] - ca.points[static_cast<std::size_t>(l)]).colwise() - s)
                          .cwiseAbs()
                          .maxCoeff(),
                      1e-5);  // float32 network
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Loss

TEST(Loss, PerfectPredictionHasNoTrackTerm) {
    const auto ds = small_dataset(1);
    const ChunkTarget t = ds.target({0, 4});
    ActionChunk pred;
    pred.points = t.points;
    pred.gripper_logits = Eigen::VectorXd::Zero(t.length());
    const auto v = bc_loss(pred, t);
    EXPECT_EQ(v.track, 0.0);
}

TEST(Loss, ZeroLogitsGiveLogTwo) {
    ActionChunk pred;
    ChunkTarget t;
    for (int l = 0; l < 4; ++l) {
        pred.points.push_back(Eigen::Matrix3Xd::Zero(3, 5));
        t.points.push_back(Eigen::Matrix3Xd::Zero(3, 5));
    }
    pred.gripper_logits = Eigen::VectorXd::Zero(4);
    t.gripper.resize(4);
    t.gripper << 0, 1, 0, 1;
    const auto v = bc_loss(pred, t, 0.1);
    EXPECT_NEAR(v.gripper, std::log(2.0), 1e-15);
    EXPECT_NEAR(v.total, 0.1 * std::log(2.0), 1e-15);
}

TEST(Loss, ShapeMismatchIsReported) {
    ActionChunk pred;
    ChunkTarget t;
    pred.points.assign(3, Eigen::Matrix3Xd::Zero(3, 5));
    pred.gripper_logits = Eigen::VectorXd::Zero(3);
    t.points.assign(4, Eigen::Matrix3Xd::Zero(3, 5));
    t.gripper = Eigen::VectorXd::Zero(4);
    EXPECT_THROW(bc_loss(pred, t), ShapeMismatch);
    t.points.assign(3, Eigen::Matrix3Xd::Zero(3, 4));
    t.gripper = Eigen::VectorXd::Zero(3);
    EXPECT_THROW(bc_loss(pred, t), ShapeMismatch);
}

TEST(Loss, ChunkGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    ActionChunk pred;
    ChunkTarget t;
    for (int l = 0; l < 5; ++l) {
        pred.points.push_back(Eigen::Matrix3Xd::NullaryExpr(3, 4, [&] { return n(rng); }));
        t.points.push_back(Eigen::Matrix3Xd::NullaryExpr(3, 4, [&] { return n(rng); }));
    }
    pred.gripper_logits = Eigen::VectorXd::NullaryExpr(5, [&] { return n(rng); });
    t.gripper.resize(5);
    t.gripper << 1, 0, 0, 1, 1;
    ChunkLossGradient g;
    bc_loss(pred, t, 0.1, &g);
    const double h = 1e-6;
    for (int l = 0; l < 5; ++l) {
        for (Eigen::Index e = 0; e < 12; ++e) {
            ActionChunk up = pred, down = pred;
            up.points[static_cast<std::size_t>(l)](e) += h;
            down.points[static_cast<std::size_t>(l)](e) -= h;
            const double numeric = (bc_loss(up, t).total - bc_loss(down, t).total) / (2 * h);
            EXPECT_NEAR(g.points[static_cast<std::size_t>(l)](e), numeric, 1e-8);
        }
        ActionChunk up = pred, down = pred;
        up.gripper_logits(l) += h;
        down.gripper_logits(l) -= h;
        EXPECT_NEAR(g.gripper_logits(l), (bc_loss(up, t).total - bc_loss(down, t).total) / (2 * h), 1e-8);
    }
}

TEST(Loss, NetworkGradientsMatchFiniteDifferences) {
    const GradientCheckReport r = gradient_check(gradient_check_config(), 1);
    EXPECT_GT(r.checked, 1000);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
}

TEST(Loss, NetworkGradientsMatchForOtherSeedsAndBatchSizes) {
    for (std::uint64_t seed : {2u, 3u}) {
        const GradientCheckReport r = gradient_check(gradient_check_config(), seed, 3);
        EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
    }
}

// ---------------------------------------------------------------------------------------------
// Training

TEST(Train, ZeroStepsReturnsInitialization) {
    const auto ds = small_dataset(2);
    TrainConfig cfg;
    cfg.steps = 0;
    cfg.seed = 9;
    const TrainResult r = train(ds, small_arch(), cfg);
    EXPECT_EQ(r.params, initial_parameters(ds, small_arch(), 9));
    EXPECT_TRUE(r.curve.empty());
}

TEST(Train, SameSeedIsBitReproducible) {
    const auto ds = small_dataset(2);
    TrainConfig cfg;
    cfg.steps = 30;
    cfg.batch_size = 16;
    cfg.log_every = 10;
    cfg.seed = 5;
    const TrainResult a = train(ds, small_arch(), cfg);
    const TrainResult b = train(ds, small_arch(), cfg);
    EXPECT_EQ(a.params, b.params);
    ASSERT_EQ(a.curve.size(), 3u);
    for (std::size_t i = 0; i < a.curve.size(); ++i) EXPECT_EQ(a.curve[i].loss, b.curve[i].loss);
    cfg.seed = 6;
    EXPECT_FALSE(train(ds, small_arch(), cfg).params == a.params);
}

TEST(Train, EmptyDatasetIsRejected) {
    auto ds = small_dataset(1);
    ds.train_samples.clear();
    EXPECT_THROW(train(ds, small_arch(), TrainConfig{}), EmptyDataset);
}

TEST(Train, PeriodicCheckpointsAreEmitted) {
    const auto ds = small_dataset(1);
    TrainConfig cfg;
    cfg.steps = 20;
    cfg.batch_size = 4;
    cfg.checkpoint_every = 5;
    std::vector<int> steps;
    train(ds, small_arch(), cfg, [&](int step, const PolicyParameters& p) {
        EXPECT_TRUE(p.all_finite());
        steps.push_back(step);
    });
    EXPECT_EQ(steps, (std::vector<int>{5, 10, 15, 20}));
}

TEST(Train, OverfitsSingleDemonstration) {
    std::vector<dataio::Demonstration> demos{fixtures::expert_robot_demo(simenv::TaskSpec::reach(), 3)};
    dataio::DatasetConfig dcfg;
    dcfg.val_fraction = 0.0;
    const auto ds = dataio::build_dataset(demos, dcfg);
    TrainConfig cfg;
    cfg.steps = 2000;
    cfg.log_every = 500;
    PolicyConfig arch = small_arch();  // width reduced from the default to keep the test fast
    arch.hidden = 64;
    const BatchBuilder builder(ds);
    const auto init = initial_parameters(ds, arch, cfg.seed);
    const TrackTransformer<float> net(init.config);
    const double before = evaluate_loss(net, init.weights, builder, ds.train_samples, cfg).total;
    const TrainResult r = train(ds, arch, cfg);
    const double after = evaluate_loss(net, r.params.weights, builder, ds.train_samples, cfg).total;
    EXPECT_LT(after, 0.01 * before) << "before " << before << " after " << after;
}

// ---------------------------------------------------------------------------------------------
// Checkpoints

namespace {

PolicyParameters trained_small(std::uint64_t seed = 0) {
    const auto ds = small_dataset(2);
    TrainConfig cfg;
    cfg.steps = 5;
    cfg.batch_size = 8;
    cfg.seed = seed;
    return train(ds, small_arch(), cfg).params;
}

}  // namespace

TEST(Checkpoint, RoundtripIsBitIdentical) {
    const PolicyParameters p = trained_small();
    std::stringstream buf;
    save_checkpoint(buf, p);
    const PolicyParameters q = load_checkpoint(buf);
    EXPECT_EQ(p, q);
    std::stringstream again;
    save_checkpoint(again, q);
    EXPECT_EQ(buf.str(), again.str());
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
    std::stringstream buf;
    save_checkpoint(buf, trained_small());
    const std::string bytes = buf.str();
    for (std::size_t cut : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
        std::stringstream in(bytes.substr(0, cut));
        EXPECT_THROW(load_checkpoint(in), CorruptFile) << "cut at " << cut;
    }
}

TEST(Checkpoint, WrongVersionIsRejected) {
    std::stringstream buf;
    save_checkpoint(buf, trained_small());
    std::string bytes = buf.str();
    bytes[8] = 7;  // little-endian version field follows the 8-byte magic
    std::stringstream in(bytes);
    EXPECT_THROW(load_checkpoint(in), FormatVersionMismatch);
}

TEST(Checkpoint, BadMagicAndTrailingBytesAreCorrupt) {
    std::stringstream buf;
    save_checkpoint(buf, trained_small());
    std::string bytes = buf.str();
    std::string bad = bytes;
    bad[0] = 'X';
    std::stringstream in1(bad);
    EXPECT_THROW(load_checkpoint(in1), CorruptFile);
    std::stringstream in2(bytes + "junk");
    EXPECT_THROW(load_checkpoint(in2), CorruptFile);
}

TEST(Checkpoint, MissingFileIsReported) {
    EXPECT_THROW(load_checkpoint(std::string("/nonexistent/policy.ckpt")), CorruptFile);
}

TEST(Checkpoint, LoadedPolicyPredictsIdentically) {
    const PolicyParameters p = trained_small(3);
    std::stringstream buf;
    save_checkpoint(buf, p);
    const Policy a(p);
    const Policy b(load_checkpoint(buf));
    const auto ds = small_dataset(2);
    const auto w = ds.window({1, 8});
    EXPECT_EQ(a.forward(w).points, b.forward(w).points);
}
