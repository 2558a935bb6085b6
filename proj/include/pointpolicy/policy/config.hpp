#pragma once

#include <cstdint>
#include <string>

#include "pointpolicy/errors.hpp"

namespace pointpolicy::policy {

/// Architecture of the track-prediction transformer.
struct PolicyConfig {
    int history = 10;       // H, observations per keypoint token
    int chunk = 20;         // L, predicted future steps
    int hidden = 256;       // token width
    int layers = 1;
    int heads = 4;
    int mlp_ratio = 4;
    int num_robot_points = 5;
    int num_object_points = 1;

    int num_point_tokens() const { return num_robot_points + num_object_points; }
    int num_tokens() const { return num_point_tokens() + 1; }

    void validate() const {
        if (history < 1 || chunk < 1 || hidden < 1 || layers < 0 || heads < 1 || mlp_ratio < 1) {
            throw ConfigError("policy dimensions must be positive");
        }
        if (hidden % heads != 0) throw ConfigError("hidden width must be divisible by head count");
        if (num_robot_points < 1 || num_object_points < 0) throw ConfigError("invalid keypoint counts");
    }

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 64;
    int steps = 100000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    double track_weight = 1.0;
    double gripper_weight = 0.1;
    int log_every = 100;
    int checkpoint_every = 0;  // 0 disables periodic checkpoints

    void validate() const {
        if (!(learning_rate > 0.0) || batch_size < 1 || steps < 0 || !(beta1 >= 0.0 && beta1 < 1.0) ||
            !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0) || track_weight < 0.0 || gripper_weight < 0.0 ||
            log_every < 1 || checkpoint_every < 0) {
            throw ConfigError("invalid training configuration");
        }
    }
};

}  // namespace pointpolicy::policy
