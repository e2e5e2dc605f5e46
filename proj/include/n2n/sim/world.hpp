#pragma once

#include <string>
#include <vector>

#include "n2n/geometry.hpp"

namespace n2n::sim {

enum class Behavior { Crossing, Approaching, Leading, Standing, Turning };

enum class ScenarioKind { Crowd, FrontalApproach, HumanFollowing, NarrowPassageway, Intersection };

const char* to_string(Behavior b);
const char* to_string(ScenarioKind k);
ScenarioKind scenario_from_string(const std::string& s);

constexpr double kMaxLinearVel = 1.6;    // m/s
constexpr double kMaxAngularVel = 1.5;   // rad/s
constexpr double kMaxPedSpeed = 2.0;     // m/s
constexpr double kDefaultRobotRadius = 0.3;

struct PedestrianState {
    Vec2 position;
    Vec2 velocity;
    double radius = 0.25;
    Behavior behavior = Behavior::Standing;
    double turn_rate = 0.0;  // rad/s, used by Turning
};

struct WallSegment {
    Vec2 a;
    Vec2 b;
};

struct Command {
    double v = 0.0;
    double omega = 0.0;
};

struct WorldState {
    Pose robot_pose;
    Command robot_vel;
    std::vector<PedestrianState> pedestrians;
    std::vector<WallSegment> obstacles;
    double time = 0.0;
};

// Unicycle integration with clamped commands; pedestrians advance per their
// behavior script. Commands are clamped, never rejected.
WorldState step_world(const WorldState& w, Command cmd, double dt);

// True iff any pedestrian center is strictly within robot_radius + ped radius
// of the robot, or the robot is strictly within robot_radius of a wall.
bool check_collision(const WorldState& w, double robot_radius);

}  // namespace n2n::sim
