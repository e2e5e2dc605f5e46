#include "n2n/controller.hpp"

#include <cmath>

#include "n2n/errors.hpp"
#include "n2n/sim/render.hpp"

namespace n2n::control {

using sim::Command;

void ControllerConfig::validate() const {
    if (min_lookahead < 0.2) {
        throw ConfigError("controller.min_lookahead must be >= 0.2");
    }
    if (cruise_speed <= 0.0 || cruise_speed > sim::kMaxLinearVel) {
        throw ConfigError("controller.cruise_speed must be in (0, 1.6]");
    }
    if (lookahead_gain < 0.0 || goal_tolerance <= 0.0 || time_budget <= 0.0) {
        throw ConfigError("controller parameters must be positive");
    }
}

namespace {

constexpr double kTaperLength = 0.4;  // meters of remaining path before slowdown

// First point along the polyline [origin, traj...] at distance >= lookahead
// from the origin; falls back to the last waypoint.
Vec2 lookahead_point(const Trajectory& traj, double lookahead) {
    Vec2 prev{0.0, 0.0};
    for (const Vec2& next : traj) {
        if (next.norm() >= lookahead) {
            const Vec2 d = next - prev;
            const double a = d.norm_sq();
            if (a < 1e-18) {
                return next;
            }
            const double b = 2.0 * prev.dot(d);
            const double c = prev.norm_sq() - lookahead * lookahead;
            const double disc = b * b - 4.0 * a * c;
            if (disc <= 0.0) {
                return next;
            }
            const double t = clamp((-b + std::sqrt(disc)) / (2.0 * a), 0.0, 1.0);
            return prev + d * t;
        }
        prev = next;
    }
    return traj.back();
}

double polyline_length(const Trajectory& traj) {
    double total = 0.0;
    Vec2 prev{0.0, 0.0};
    for (const Vec2& next : traj) {
        total += (next - prev).norm();
        prev = next;
    }
    return total;
}

}  // namespace

Command pure_pursuit(const Trajectory& traj, const ControllerConfig& cfg, double current_speed) {
    if (traj.empty()) {
        throw ContractError("pure_pursuit: empty trajectory");
    }
    cfg.validate();

    const double lookahead = std::max(cfg.min_lookahead, cfg.lookahead_gain * current_speed);
    const Vec2 target = lookahead_point(traj, lookahead);
    const double dist = target.norm();

    const double remaining = polyline_length(traj);
    double v = cfg.cruise_speed * clamp(remaining / kTaperLength, 0.0, 1.0);
    v = clamp(v, 0.0, sim::kMaxLinearVel);

    double kappa = 0.0;
    if (dist > 1e-9) {
        kappa = 2.0 * target.y / (dist * dist);
    }
    const double omega = clamp(v * kappa, -sim::kMaxAngularVel, sim::kMaxAngularVel);
    return Command{v, omega};
}

RolloutResult rollout_closed_loop(const PolicyFn& policy, const sim::ScenarioSetup& setup,
                                  const ControllerConfig& cfg, const sim::SimConfig& sim_cfg) {
    cfg.validate();
    sim_cfg.validate();

    sim::WorldState world = setup.world;
    const Vec2 goal = setup.goal_world;
    const int max_steps = static_cast<int>(std::floor(cfg.time_budget / sim_cfg.dt + 1e-9));

    std::vector<Image> ring;
    RolloutResult result;
    result.path.push_back(world.robot_pose);
    bool in_contact = sim::check_collision(world, sim_cfg.robot_radius);

    for (int step = 0; step < max_steps; ++step) {
        Image frame = sim::render_observation(world, sim_cfg);
        if (ring.empty()) {
            ring.assign(static_cast<size_t>(sim_cfg.horizon), frame);
        } else {
            ring.erase(ring.begin());
            ring.push_back(frame);
        }

        const Waypoint goal_body = world_to_body(world.robot_pose, goal);
        const Trajectory traj = policy(ring, goal_body);
        const Command cmd = pure_pursuit(traj, cfg, world.robot_vel.v);
        world = sim::step_world(world, cmd, sim_cfg.dt);
        result.path.push_back(world.robot_pose);
        result.steps = step + 1;

        const bool contact = sim::check_collision(world, sim_cfg.robot_radius);
        if (contact && !in_contact) {
            ++result.collisions;
        }
        in_contact = contact;

        const double goal_dist = (Vec2{world.robot_pose.x, world.robot_pose.y} - goal).norm();
        if (goal_dist <= cfg.goal_tolerance) {
            result.success = true;
            break;
        }
    }
    result.final_goal_distance = (Vec2{world.robot_pose.x, world.robot_pose.y} - goal).norm();
    return result;
}

RolloutResult rollout_closed_loop(const PolicyFn& policy, sim::ScenarioKind kind, uint64_t seed,
                                  const ControllerConfig& cfg, const sim::SimConfig& sim_cfg) {
    return rollout_closed_loop(policy, sim::init_scenario(kind, seed, sim_cfg), cfg, sim_cfg);
}

}  // namespace n2n::control
