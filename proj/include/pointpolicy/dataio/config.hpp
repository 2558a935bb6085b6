#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "pointpolicy/dataio/dataset.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/camera.hpp"
#include "pointpolicy/policy/config.hpp"
#include "pointpolicy/simenv/sensing.hpp"
#include "pointpolicy/simenv/task.hpp"

// JSON configuration shared by cameras, training, and tasks. Units: pixels and meters.
namespace pointpolicy::dataio {

inline constexpr const char* kDataRootEnv = "POINTPOLICY_DATA_ROOT";

/// Relative paths resolve against $POINTPOLICY_DATA_ROOT when it is set.
inline std::filesystem::path resolve_data_path(const std::filesystem::path& p) {
    if (p.is_absolute()) return p;
    if (const char* root = std::getenv(kDataRootEnv); root != nullptr && *root != '\0') {
        return std::filesystem::path(root) / p;
    }
    return p;
}

inline nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

namespace detail {

inline Eigen::Vector3d vec3(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline nlohmann::json vec3_json(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

}  // namespace detail

// Cameras ---------------------------------------------------------------------------------------
//   {"cameras": [{"id": "cam0", "intrinsics": [9 numbers, row-major],
//                 "rotation": [w, x, y, z], "translation": [x, y, z]}]}   (world -> camera)

inline nlohmann::json cameras_to_json(const std::vector<geometry::CameraModel>& cams) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cams) {
        const auto& k = c.intrinsics();
        nlohmann::json kj = nlohmann::json::array();
        for (int r = 0; r < 3; ++r) {
            for (int col = 0; col < 3; ++col) kj.push_back(k(r, col));
        }
        const geometry::Quaternion q = geometry::matrix_to_quaternion(c.extrinsics().rotation());
        arr.push_back({{"id", c.id()},
                       {"intrinsics", kj},
                       {"rotation", {q.w(), q.x(), q.y(), q.z()}},
                       {"translation", detail::vec3_json(c.extrinsics().translation())}});
    }
    return {{"cameras", arr}};
}

inline std::vector<geometry::CameraModel> cameras_from_json(const nlohmann::json& j) {
    return detail::guarded("cameras", [&] {
        std::vector<geometry::CameraModel> cams;
        for (const auto& c : j.at("cameras")) {
            const auto& kj = c.at("intrinsics");
            if (kj.size() != 9) throw ConfigError("intrinsics need 9 entries");
            Eigen::Matrix3d k;
            for (int r = 0; r < 3; ++r) {
                for (int col = 0; col < 3; ++col) k(r, col) = kj[static_cast<std::size_t>(3 * r + col)].get<double>();
            }
            const auto& q = c.at("rotation");
            if (q.size() != 4) throw ConfigError("rotation needs [w, x, y, z]");
            const geometry::Quaternion quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
            const geometry::RigidTransform ext(geometry::quaternion_to_matrix(quat), detail::vec3(c.at("translation")));
            cams.emplace_back(k, ext, c.at("id").get<std::string>());
        }
        if (cams.size() < 2) throw ConfigError("at least two cameras are required");
        return cams;
    });
}

// Training --------------------------------------------------------------------------------------
//   {"policy": {...PolicyConfig fields}, "train": {...TrainConfig fields},
//    "dataset": {"history", "chunk", "val_fraction", "split_seed", "stride"}}
// Missing fields keep their defaults.

struct TrainingSetup {
    policy::PolicyConfig policy;
    policy::TrainConfig train;
    DatasetConfig dataset;
    int stride = 3;  // demo subsampling before windowing
};

inline TrainingSetup training_from_json(const nlohmann::json& j) {
    return detail::guarded("training config", [&] {
        TrainingSetup s;
        if (j.contains("policy")) {
            const auto& p = j.at("policy");
            s.policy.hidden = p.value("hidden", s.policy.hidden);
            s.policy.layers = p.value("layers", s.policy.layers);
            s.policy.heads = p.value("heads", s.policy.heads);
            s.policy.mlp_ratio = p.value("mlp_ratio", s.policy.mlp_ratio);
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            s.train.learning_rate = t.value("learning_rate", s.train.learning_rate);
            s.train.batch_size = t.value("batch_size", s.train.batch_size);
            s.train.steps = t.value("steps", s.train.steps);
            s.train.beta1 = t.value("beta1", s.train.beta1);
            s.train.beta2 = t.value("beta2", s.train.beta2);
            s.train.epsilon = t.value("epsilon", s.train.epsilon);
            s.train.seed = t.value("seed", s.train.seed);
            s.train.track_weight = t.value("track_weight", s.train.track_weight);
            s.train.gripper_weight = t.value("gripper_weight", s.train.gripper_weight);
            s.train.log_every = t.value("log_every", s.train.log_every);
            s.train.checkpoint_every = t.value("checkpoint_every", s.train.checkpoint_every);
        }
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            s.dataset.history = d.value("history", s.dataset.history);
            s.dataset.chunk = d.value("chunk", s.dataset.chunk);
            s.dataset.val_fraction = d.value("val_fraction", s.dataset.val_fraction);
            s.dataset.split_seed = d.value("split_seed", s.dataset.split_seed);
            s.stride = d.value("stride", s.stride);
        }
        s.policy.history = s.dataset.history;
        s.policy.chunk = s.dataset.chunk;
        s.policy.validate();
        s.train.validate();
        s.dataset.validate();
        if (s.stride < 1) throw ConfigError("stride must be >= 1");
        return s;
    });
}

// Tasks -----------------------------------------------------------------------------------------
//   {"task": "reach" | "push-block" | "pick-place", optional overrides:
//    "object_spawn": {"lower": [..], "upper": [..]}, "target_spawn": {...},
//    "yaw_range": [min, max], "zone_radius", "episode_steps"}

inline simenv::TaskSpec task_from_json(const nlohmann::json& j) {
    simenv::TaskSpec s = detail::guarded("task config", [&] {
        return simenv::TaskSpec::for_kind(simenv::task_kind_from_string(j.at("task").get<std::string>()));
    });
    detail::guarded("task config", [&] {
        auto box = [](const nlohmann::json& b) {
            return simenv::SpawnBox{detail::vec3(b.at("lower")), detail::vec3(b.at("upper"))};
        };
        if (j.contains("object_spawn")) s.object_spawn = box(j.at("object_spawn"));
        if (j.contains("target_spawn")) s.target_spawn = box(j.at("target_spawn"));
        if (j.contains("yaw_range")) {
            s.yaw_min = j.at("yaw_range").at(0).get<double>();
            s.yaw_max = j.at("yaw_range").at(1).get<double>();
        }
        s.zone_radius = j.value("zone_radius", s.zone_radius);
        s.episode_steps = j.value("episode_steps", s.episode_steps);
        return 0;
    });
    s.validate();
    return s;
}

}  // namespace pointpolicy::dataio
