#pragma once

#include <cstdint>
#include <vector>

#include "n2n/image.hpp"
#include "n2n/rng.hpp"
#include "n2n/sim/narrate.hpp"
#include "n2n/sim/world.hpp"

namespace n2n::sim {

struct SimConfig {
    double dt = 0.5;
    int steps = 40;  // episode length, 20..60
    int image_h = 64;
    int image_w = 64;
    double fov_deg = 90.0;
    double view_range = 8.0;
    double robot_radius = kDefaultRobotRadius;
    int horizon = 5;  // future (and past) window length

    void validate() const;
};

struct Episode {
    ScenarioKind scenario = ScenarioKind::Crowd;
    uint64_t seed = 0;
    std::vector<Image> frames;
    std::vector<Pose> poses;
    std::vector<Command> commands;  // commands[k] maps poses[k] -> poses[k+1]
    std::vector<Trajectory> labels;  // per step, horizon future waypoints (body frame)
    std::vector<Narration> narrations;
    Waypoint goal;  // in the step-0 body frame

    int steps() const { return static_cast<int>(frames.size()); }
};

// Initial world plus the scripted goal, both in the world frame.
struct ScenarioSetup {
    WorldState world;
    Vec2 goal_world;
};

// Deterministic function of (kind, seed, cfg).
ScenarioSetup init_scenario(ScenarioKind kind, uint64_t seed, const SimConfig& cfg);

// Scripted socially-compliant expert: potential-field steering toward the
// goal with yield rules for crossing or oncoming pedestrians.
Command expert_command(const WorldState& w, const Vec2& goal_world);

// Full rollout of the scripted expert; labels are the expert's future
// positions transformed into each step's body frame.
Episode generate_episode(ScenarioKind kind, uint64_t seed, const SimConfig& cfg);

const std::vector<ScenarioKind>& all_scenarios();

}  // namespace n2n::sim
