#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <memory>
#include <random>
#include <vector>

#include "pointpolicy/control/backtrack.hpp"
#include "pointpolicy/control/ensemble.hpp"
#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/policy/policy.hpp"
#include "pointpolicy/policy/types.hpp"
#include "pointpolicy/retarget/keypoints.hpp"
#include "pointpolicy/simenv/scene.hpp"
#include "pointpolicy/simenv/sensing.hpp"

namespace pointpolicy::control {

inline constexpr double kControlPeriod = 1.0 / 6.0;  // seconds of simulated time per step

/// Something that maps an observation window to an action chunk.
class Controller {
public:
    virtual ~Controller() = default;
    virtual void reset(const simenv::Scene&) {}
    virtual int history() const = 0;
    virtual policy::ActionChunk predict(const policy::ObservationWindow& window, long step) = 0;
};

/// Trained policy.
class LearnedController : public Controller {
public:
    explicit LearnedController(const policy::Policy& p) : policy_(p) {}
    int history() const override { return policy_.config().history; }
    policy::ActionChunk predict(const policy::ObservationWindow& window, long) override {
        return policy_.forward(window);
    }

private:
    const policy::Policy& policy_;
};

/// Open-loop replay of a robot-frame demonstration: the chunk emitted at step s holds demo frames
/// s + 1 ... s + L (the final frame repeated past the end).
class ReplayController : public Controller {
public:
    ReplayController(dataio::Demonstration demo, int num_robot_points, int chunk = 20, int history = 10)
        : demo_(std::move(demo)), nr_(num_robot_points), chunk_(chunk), history_(history) {
        if (demo_.empty() || !demo_.has_points3d() || !demo_.frames.front().gripper) {
            throw ShapeMismatch("replay needs a non-empty demo with 3D points and gripper states");
        }
    }

    int history() const override { return history_; }

    policy::ActionChunk predict(const policy::ObservationWindow&, long step) override {
        policy::ActionChunk c;
        c.gripper_logits.resize(chunk_);
        const long last = static_cast<long>(demo_.frames.size()) - 1;
        for (int e = 0; e < chunk_; ++e) {
            const auto& f = demo_.frames[static_cast<std::size_t>(std::min(last, step + 1 + e))];
            c.points.push_back(f.points3d->leftCols(nr_));
            c.gripper_logits(e) = f.gripper->closed ? 20.0 : -20.0;
        }
        return c;
    }

private:
    dataio::Demonstration demo_;
    int nr_;
    int chunk_;
    int history_;
};

struct RolloutConfig {
    int max_steps = 30;
    simenv::LiftingMode lifting = simenv::LiftingMode::Triangulated;
    simenv::NoiseModel noise;
    double ensemble_decay = kDefaultEnsembleDecay;
    bool ensemble = true;
    retarget::OffsetTable offsets = retarget::OffsetTable::default_table();
};

struct StepRecord {
    long step = 0;
    Action action;
    std::vector<double> weights;
    double gripper_probability = 0.0;
};

struct RolloutResult {
    bool success = false;
    int steps = 0;
    double final_error = 0.0;
    std::vector<StepRecord> records;
    dataio::Demonstration trajectory;  // observed robot + object points and gripper per step
    simenv::Scene final_scene;

    /// Commanded end-effector positions, including the initial pose.
    std::vector<Eigen::Vector3d> positions;
};

/// Pooled variance of per-step position increments: mean squared deviation of the increment
/// vectors from their mean.
inline double increment_variance(const std::vector<std::vector<Eigen::Vector3d>>& paths) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double n = 0.0;
    for (const auto& p : paths) {
        for (std::size_t i = 1; i < p.size(); ++i) {
            sum += p[i] - p[i - 1];
            n += 1.0;
        }
    }
    if (n == 0.0) return 0.0;
    const Eigen::Vector3d mean = sum / n;
    double sq = 0.0;
    for (const auto& p : paths) {
        for (std::size_t i = 1; i < p.size(); ++i) sq += (p[i] - p[i - 1] - mean).squaredNorm();
    }
    return sq / n;
}

/// Closed-loop execution: observe keypoints (robot points from the commanded pose, object points
/// lifted from both camera views), predict a chunk, blend overlapping chunks, recover the pose,
/// and step the scene, once every control period. Success is judged on the final scene.
inline RolloutResult rollout(Controller& controller, const simenv::Scene& initial,
                             const std::vector<geometry::CameraModel>& cameras, const RolloutConfig& cfg,
                             std::uint64_t noise_seed) {
    RolloutResult out;
    out.final_scene = initial;
    simenv::Scene& scene = out.final_scene;
    controller.reset(scene);
    std::mt19937_64 rng(noise_seed);
    simenv::PointTracker tracker(cameras, cfg.lifting);
    ChunkBuffer buffer(cfg.ensemble_decay, cfg.ensemble);
    std::deque<Eigen::Matrix3Xd> history;
    const geometry::Quaternion base = scene.spec.home.orientation();
    const int nr = cfg.offsets.size();

    auto& h = out.trajectory.header;
    h.task = scene.spec.id();
    h.rate_hz = 1.0 / kControlPeriod;
    h.seed = scene.seed;
    for (const auto& n : cfg.offsets.names()) h.keypoints.push_back({n, dataio::KeypointRole::Robot, "robot"});
    for (const auto& k : scene.object_keypoints()) h.keypoints.push_back(k);

    out.positions.push_back(scene.ee.position());
    for (long step = 0; step < cfg.max_steps; ++step) {
        const Eigen::Matrix3Xd robot = retarget::pose_to_keypoints(scene.ee, cfg.offsets);
        const Eigen::Matrix3Xd objects = tracker.update(simenv::observe_points(scene.object_points(), cameras, cfg.noise, rng));
        Eigen::Matrix3Xd frame(3, robot.cols() + objects.cols());
        frame << robot, objects;
        history.push_back(frame);
        while (static_cast<int>(history.size()) > controller.history()) history.pop_front();

        dataio::DemoFrame rec;
        rec.timestamp = static_cast<double>(step) * kControlPeriod;
        rec.points3d = frame;
        rec.gripper = dataio::GripperRecord{scene.gripper_closed, 0.0};
        out.trajectory.frames.push_back(std::move(rec));

        const auto window = policy::make_window(history, controller.history(), nr, scene.gripper_closed);
        buffer.push(controller.predict(window, step), step);
        const EnsembleResult blended = buffer.ensemble(step);
        Action a = backtrack_action(blended.points, cfg.offsets, base, blended.gripper_closed, &scene.spec.workspace);
        simenv::step(scene, a);
        out.records.push_back({step, a, blended.weights, blended.gripper_probability});
        out.positions.push_back(scene.ee.position());
        ++out.steps;
    }
    out.final_error = simenv::task_error(scene);
    out.success = cfg.max_steps > 0 && simenv::success(scene);
    return out;
}

}  // namespace pointpolicy::control
