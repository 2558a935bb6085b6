#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pointpolicy/control/rollout.hpp"
#include "pointpolicy/simenv/expert.hpp"
#include "pointpolicy/simenv/scene.hpp"
#include "pointpolicy/simenv/sensing.hpp"
#include "pointpolicy/util/seed.hpp"

namespace pointpolicy::simenv {

/// The scripted expert used as a policy: plans on reset from the true scene and emits chunks of
/// its own future keypoints, sampled at the control period.
class ExpertController : public control::Controller {
public:
    explicit ExpertController(retarget::OffsetTable offsets = retarget::OffsetTable::default_table(), int chunk = 20,
                              int history = 10)
        : offsets_(std::move(offsets)), chunk_(chunk), history_(history) {}

    void reset(const Scene& scene) override {
        plan_ = plan_expert(scene);
        base_ = scene.spec.home.orientation();
    }

    int history() const override { return history_; }

    policy::ActionChunk predict(const policy::ObservationWindow&, long step) override {
        if (!plan_) throw PlanningFailed("expert controller used before reset");
        policy::ActionChunk c;
        c.gripper_logits.resize(chunk_);
        for (int e = 0; e < chunk_; ++e) {
            const control::Action a = hand_action(plan_->sample(static_cast<double>(step + 1 + e) * control::kControlPeriod), base_);
            c.points.push_back(retarget::pose_to_keypoints(a.pose, offsets_));
            c.gripper_logits(e) = a.gripper_closed ? 20.0 : -20.0;
        }
        return c;
    }

private:
    retarget::OffsetTable offsets_;
    int chunk_;
    int history_;
    std::optional<ExpertPlan> plan_;
    geometry::Quaternion base_ = geometry::Quaternion::Identity();
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t scene_seed = 0;
    std::uint64_t noise_seed = 0;
    bool success = false;
    double final_error = 0.0;
    int steps = 0;
    int clamp_events = 0;
};

struct EvaluationResult {
    std::vector<TrialRecord> trials;
    std::vector<control::RolloutResult> rollouts;

    int successes() const {
        int n = 0;
        for (const auto& t : trials) n += t.success ? 1 : 0;
        return n;
    }
    double rate() const { return trials.empty() ? 0.0 : static_cast<double>(successes()) / trials.size(); }
};

struct EvaluationConfig {
    int trials = 10;
    std::uint64_t seed = 0;
    LiftingMode lifting = LiftingMode::Triangulated;
    NoiseModel noise;
    bool ensemble = true;
    double ensemble_decay = control::kDefaultEnsembleDecay;
    int max_steps = -1;  // -1: the task's episode length
    bool keep_rollouts = false;
};

/// Seeded independent trials. Trial i draws its scene from derive_seed(seed, eval-scene, i) and
/// its sensor noise from derive_seed(seed, eval-noise, i), so results depend only on the inputs.
inline EvaluationResult evaluate(control::Controller& controller, const TaskSpec& spec,
                                 const std::vector<CameraModel>& cameras, const EvaluationConfig& cfg) {
    if (cfg.trials < 0) throw ConfigError("trial count must be >= 0");
    spec.validate();
    cfg.noise.validate();
    EvaluationResult out;
    control::RolloutConfig rc;
    rc.max_steps = cfg.max_steps >= 0 ? cfg.max_steps : spec.episode_steps;
    rc.lifting = cfg.lifting;
    rc.noise = cfg.noise;
    rc.ensemble = cfg.ensemble;
    rc.ensemble_decay = cfg.ensemble_decay;
    for (int i = 0; i < cfg.trials; ++i) {
        TrialRecord rec;
        rec.trial = i;
        rec.scene_seed = util::derive_seed(cfg.seed, util::kEvalSceneStream, static_cast<std::uint64_t>(i));
        rec.noise_seed = util::derive_seed(cfg.seed, util::kEvalNoiseStream, static_cast<std::uint64_t>(i));
        const Scene scene = reset(spec, rec.scene_seed);
        auto r = control::rollout(controller, scene, cameras, rc, rec.noise_seed);
        rec.success = r.success;
        rec.final_error = r.final_error;
        rec.steps = r.steps;
        rec.clamp_events = r.final_scene.clamp_events;
        out.trials.push_back(rec);
        if (cfg.keep_rollouts) out.rollouts.push_back(std::move(r));
    }
    return out;
}

}  // namespace pointpolicy::simenv
