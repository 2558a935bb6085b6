#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <string>

#include "pointpolicy/control/backtrack.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/geometry/rigid.hpp"

namespace pointpolicy::simenv {

enum class TaskKind { Reach, PushBlock, PickPlace };

inline std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Reach: return "reach";
        case TaskKind::PushBlock: return "push-block";
        case TaskKind::PickPlace: return "pick-place";
    }
    return "unknown";
}

inline TaskKind task_kind_from_string(const std::string& s) {
    if (s == "reach") return TaskKind::Reach;
    if (s == "push-block") return TaskKind::PushBlock;
    if (s == "pick-place") return TaskKind::PickPlace;
    throw InvalidSpec("unknown task '" + s + "'");
}

/// Axis-aligned sampling box; a zero-width axis yields a fixed coordinate.
struct SpawnBox {
    Eigen::Vector3d lower = Eigen::Vector3d::Zero();
    Eigen::Vector3d upper = Eigen::Vector3d::Zero();
};

/// Gripper pointing straight down: 180 degrees about x.
inline geometry::Quaternion gripper_down() { return {0.0, 1.0, 0.0, 0.0}; }

struct TaskSpec {
    TaskKind kind = TaskKind::Reach;
    SpawnBox object_spawn;  // reach goal, block, or object to pick
    SpawnBox target_spawn;  // push target or plate (unused for reach)
    double yaw_min = 0.0;   // object yaw range, radians
    double yaw_max = 0.0;
    double zone_radius = 0.0;
    double success_margin = 0.02;
    int episode_steps = 30;  // control steps at the policy rate
    control::Workspace workspace;
    geometry::Pose home{{0.45, 0.0, 0.25}, gripper_down()};

    // Object geometry.
    double block_half_size = 0.025;
    double pusher_contact_radius = 0.045;
    double object_half_length = 0.03;
    double rest_height = 0.03;
    double grasp_radius = 0.03;

    std::string id() const { return to_string(kind); }
    double success_radius() const { return zone_radius + success_margin; }

    void validate() const {
        auto check_box = [&](const SpawnBox& b, const char* what) {
            if (!b.lower.allFinite() || !b.upper.allFinite() || (b.lower.array() > b.upper.array()).any()) {
                throw InvalidSpec(std::string(what) + " spawn range is inverted or not finite");
            }
            if (!workspace.contains(b.lower) || !workspace.contains(b.upper)) {
                throw InvalidSpec(std::string(what) + " spawn range leaves the workspace");
            }
        };
        try {
            workspace.validate();
        } catch (const ConfigError& e) {
            throw InvalidSpec(e.what());
        }
        check_box(object_spawn, "object");
        if (kind != TaskKind::Reach) check_box(target_spawn, "target");
        if (!(yaw_min <= yaw_max) || std::abs(yaw_min) > std::numbers::pi || std::abs(yaw_max) > std::numbers::pi) {
            throw InvalidSpec("invalid yaw range");
        }
        if (!(zone_radius >= 0.0) || !(success_margin > 0.0) || episode_steps < 0) {
            throw InvalidSpec("invalid success parameters or episode length");
        }
        if (!workspace.contains(home.position())) throw InvalidSpec("home pose outside workspace");
    }

    static TaskSpec reach() {
        TaskSpec s;
        s.kind = TaskKind::Reach;
        s.object_spawn = {{0.35, -0.20, 0.06}, {0.65, 0.20, 0.20}};
        s.zone_radius = 0.0;
        s.episode_steps = 25;
        return s;
    }

    static TaskSpec push_block() {
        TaskSpec s;
        s.kind = TaskKind::PushBlock;
        s.object_spawn = {{0.40, -0.12, 0.025}, {0.48, 0.12, 0.025}};
        s.target_spawn = {{0.58, -0.12, 0.025}, {0.66, 0.12, 0.025}};
        s.zone_radius = 0.02;
        s.episode_steps = 50;
        return s;
    }

    static TaskSpec pick_place() {
        TaskSpec s;
        s.kind = TaskKind::PickPlace;
        s.object_spawn = {{0.40, -0.20, 0.03}, {0.55, -0.06, 0.03}};
        s.target_spawn = {{0.45, 0.08, 0.03}, {0.60, 0.20, 0.03}};
        s.yaw_min = -std::numbers::pi / 4;
        s.yaw_max = std::numbers::pi / 4;
        s.zone_radius = 0.03;
        s.episode_steps = 65;
        return s;
    }

    static TaskSpec for_kind(TaskKind k) {
        switch (k) {
            case TaskKind::Reach: return reach();
            case TaskKind::PushBlock: return push_block();
            case TaskKind::PickPlace: return pick_place();
        }
        throw InvalidSpec("unknown task kind");
    }
};

}  // namespace pointpolicy::simenv
