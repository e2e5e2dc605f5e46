#pragma once

#include <functional>
#include <optional>

#include "n2n/geometry.hpp"
#include "n2n/sim/scenario.hpp"

namespace n2n::control {

struct ControllerConfig {
    double min_lookahead = 0.2;   // meters; the paper's floor
    double lookahead_gain = 0.6;  // seconds; lookahead = max(floor, gain * v)
    double cruise_speed = 0.8;    // m/s
    double goal_tolerance = 0.5;  // meters
    double time_budget = 30.0;    // seconds

    void validate() const;
};

// Geometric tracker. traj is a body-frame polyline (robot at origin, heading
// +x). The lookahead point is the first point along [origin, traj...] at
// Euclidean distance >= lookahead (interpolated); if the whole polyline is
// nearer, the last waypoint is used. kappa = 2 y_L / L^2; v tapers linearly
// over the last 0.4 m of remaining arc length. current_speed feeds the
// dynamic lookahead.
sim::Command pure_pursuit(const Trajectory& traj, const ControllerConfig& cfg,
                          double current_speed = 0.0);

struct RolloutResult {
    bool success = false;
    int collisions = 0;
    std::vector<Pose> path;
    int steps = 0;
    double final_goal_distance = 0.0;
};

// frames oldest -> newest; goal in the current body frame (or masked).
using PolicyFn =
    std::function<Trajectory(const std::vector<Image>&, const std::optional<Waypoint>&)>;

// Closed loop: render -> policy -> pure pursuit -> step, with a horizon-deep
// frame ring buffer bootstrapped by repeating the first frame. Collisions are
// counted as contact-entry events.
RolloutResult rollout_closed_loop(const PolicyFn& policy, const sim::ScenarioSetup& setup,
                                  const ControllerConfig& cfg, const sim::SimConfig& sim_cfg);

RolloutResult rollout_closed_loop(const PolicyFn& policy, sim::ScenarioKind kind, uint64_t seed,
                                  const ControllerConfig& cfg, const sim::SimConfig& sim_cfg);

}  // namespace n2n::control
