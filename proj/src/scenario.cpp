#include "n2n/sim/scenario.hpp"

#include <cmath>

#include "n2n/errors.hpp"
#include "n2n/sim/render.hpp"

namespace n2n::sim {

void SimConfig::validate() const {
    if (dt <= 0.0) {
        throw ConfigError("sim.dt must be positive");
    }
    if (steps < 20 || steps > 60) {
        throw ConfigError("sim.steps must be in [20, 60]");
    }
    if (image_h < 8 || image_w < 8) {
        throw ConfigError("sim.image dimensions too small");
    }
    if (horizon < 1) {
        throw ConfigError("sim.horizon must be >= 1");
    }
    if (view_range <= 0.0 || fov_deg <= 0.0 || robot_radius <= 0.0) {
        throw ConfigError("sim geometry parameters must be positive");
    }
}

const std::vector<ScenarioKind>& all_scenarios() {
    static const std::vector<ScenarioKind> kinds = {
        ScenarioKind::Crowd, ScenarioKind::FrontalApproach, ScenarioKind::HumanFollowing,
        ScenarioKind::NarrowPassageway, ScenarioKind::Intersection};
    return kinds;
}

namespace {

PedestrianState make_ped(Vec2 pos, Vec2 vel, Behavior b, double radius = 0.25,
                         double turn_rate = 0.0) {
    PedestrianState p;
    p.position = pos;
    p.velocity = vel;
    p.behavior = b;
    p.radius = radius;
    p.turn_rate = turn_rate;
    return p;
}

ScenarioSetup setup_frontal_approach(Rng& rng) {
    ScenarioSetup s;
    const double goal_x = rng.uniform(5.5, 7.0);
    s.goal_world = {goal_x, rng.uniform(-0.3, 0.3)};
    const double px = rng.uniform(4.5, 6.0);
    const double off = rng.uniform(-0.35, 0.35);
    const double speed = rng.uniform(0.5, 0.9);
    s.world.pedestrians.push_back(
        make_ped({px, off}, {-speed, 0.0}, Behavior::Approaching));
    return s;
}

ScenarioSetup setup_human_following(Rng& rng) {
    ScenarioSetup s;
    s.goal_world = {rng.uniform(6.5, 8.0), rng.uniform(-0.3, 0.3)};
    const double speed = rng.uniform(0.45, 0.75);
    s.world.pedestrians.push_back(
        make_ped({rng.uniform(1.8, 2.6), rng.uniform(-0.25, 0.25)}, {speed, 0.0},
                 Behavior::Leading));
    return s;
}

ScenarioSetup setup_narrow_passageway(Rng& rng) {
    ScenarioSetup s;
    s.goal_world = {rng.uniform(7.0, 8.0), rng.uniform(-0.2, 0.2)};
    const double half_gap = rng.uniform(0.65, 0.95);
    const double x0 = rng.uniform(2.0, 2.8);
    const double x1 = x0 + rng.uniform(2.5, 3.5);
    s.world.obstacles.push_back({{x0, half_gap}, {x1, half_gap}});
    s.world.obstacles.push_back({{x0, -half_gap}, {x1, -half_gap}});
    // One bystander near the entrance, off to a side.
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    s.world.pedestrians.push_back(
        make_ped({x0 - rng.uniform(0.4, 0.9), side * rng.uniform(1.3, 1.8)}, {0.0, 0.0},
                 Behavior::Standing));
    return s;
}

ScenarioSetup setup_intersection(Rng& rng) {
    ScenarioSetup s;
    s.goal_world = {rng.uniform(6.0, 7.5), rng.uniform(-0.3, 0.3)};
    const double cross_x = rng.uniform(3.0, 4.5);
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double dist = rng.uniform(2.0, 3.5);
    const double speed = rng.uniform(0.6, 1.1);
    s.world.pedestrians.push_back(
        make_ped({cross_x, -side * dist}, {0.0, side * speed}, Behavior::Crossing));
    if (rng.bernoulli(0.5)) {
        const double cross_x2 = cross_x + rng.uniform(0.8, 1.6);
        s.world.pedestrians.push_back(make_ped({cross_x2, side * rng.uniform(2.5, 4.0)},
                                               {0.0, -side * speed * 0.8},
                                               Behavior::Crossing));
    }
    return s;
}

ScenarioSetup setup_crowd(Rng& rng) {
    ScenarioSetup s;
    s.goal_world = {rng.uniform(6.0, 7.5), rng.uniform(-1.0, 1.0)};
    const int count = rng.uniform_int(4, 6);
    for (int i = 0; i < count; ++i) {
        Vec2 pos{rng.uniform(1.5, 6.5), rng.uniform(-3.0, 3.0)};
        // Keep a clear pocket around the robot start.
        if (pos.norm() < 1.2) {
            pos.x += 1.5;
        }
        const int roll = rng.uniform_int(0, 3);
        if (roll == 0) {
            s.world.pedestrians.push_back(make_ped(pos, {0.0, 0.0}, Behavior::Standing));
        } else if (roll == 1) {
            const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
            s.world.pedestrians.push_back(
                make_ped(pos, {0.0, side * rng.uniform(0.4, 1.0)}, Behavior::Crossing));
        } else if (roll == 2) {
            s.world.pedestrians.push_back(
                make_ped(pos, {-rng.uniform(0.4, 0.9), rng.uniform(-0.2, 0.2)},
                         Behavior::Approaching));
        } else {
            const double ang = rng.uniform(-M_PI, M_PI);
            const double sp = rng.uniform(0.3, 0.8);
            s.world.pedestrians.push_back(
                make_ped(pos, {sp * std::cos(ang), sp * std::sin(ang)}, Behavior::Turning,
                         0.25, rng.uniform(-0.5, 0.5)));
        }
    }
    return s;
}

}  // namespace

ScenarioSetup init_scenario(ScenarioKind kind, uint64_t seed, const SimConfig& cfg) {
    cfg.validate();
    Rng rng(Rng::mix(seed, static_cast<uint64_t>(kind) + 101));
    ScenarioSetup s;
    switch (kind) {
        case ScenarioKind::Crowd: s = setup_crowd(rng); break;
        case ScenarioKind::FrontalApproach: s = setup_frontal_approach(rng); break;
        case ScenarioKind::HumanFollowing: s = setup_human_following(rng); break;
        case ScenarioKind::NarrowPassageway: s = setup_narrow_passageway(rng); break;
        case ScenarioKind::Intersection: s = setup_intersection(rng); break;
    }
    s.world.robot_pose = Pose{0.0, 0.0, 0.0};
    s.world.time = 0.0;
    return s;
}

namespace {

constexpr double kCruise = 0.9;
constexpr double kArriveRadius = 1.0;
constexpr double kPedInfluence = 2.5;
constexpr double kWallInfluence = 0.9;

// Predicts whether a moving pedestrian will be close to the robot's forward
// ray within the next couple of seconds.
bool should_yield(const WorldState& w, const PedestrianState& ped) {
    if (ped.behavior != Behavior::Crossing && ped.behavior != Behavior::Approaching) {
        return false;
    }
    const Vec2 rp{w.robot_pose.x, w.robot_pose.y};
    for (double t = 0.0; t <= 2.0; t += 0.25) {
        const Vec2 pped = ped.position + ped.velocity * t;
        const Vec2 probe = rp + Vec2{std::cos(w.robot_pose.heading),
                                     std::sin(w.robot_pose.heading)} *
                                    (kCruise * t);
        if ((pped - probe).norm() < 0.9) {
            return true;
        }
    }
    return false;
}

}  // namespace

Command expert_command(const WorldState& w, const Vec2& goal_world) {
    const Vec2 rp{w.robot_pose.x, w.robot_pose.y};
    const Vec2 to_goal = goal_world - rp;
    const double goal_dist = to_goal.norm();

    Vec2 force = to_goal.normalized();

    double yield_scale = 1.0;
    for (const auto& ped : w.pedestrians) {
        const Vec2 away = rp - ped.position;
        const double d = away.norm();
        if (d < kPedInfluence && d > 1e-9) {
            const double mag = 1.3 * (1.0 / d - 1.0 / kPedInfluence);
            force = force + away.normalized() * mag;
        }
        if (should_yield(w, ped)) {
            const double d_ahead = (ped.position - rp).norm();
            yield_scale = std::min(yield_scale, clamp((d_ahead - 0.8) / 1.5, 0.0, 1.0));
        }
    }
    for (const auto& wall : w.obstacles) {
        const Vec2 ab = wall.b - wall.a;
        const double len_sq = ab.norm_sq();
        double t = len_sq > 1e-12 ? clamp((rp - wall.a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
        const Vec2 closest = wall.a + ab * t;
        const Vec2 away = rp - closest;
        const double d = away.norm();
        if (d < kWallInfluence && d > 1e-9) {
            force = force + away.normalized() * (1.8 * (1.0 / d - 1.0 / kWallInfluence));
        }
    }

    // Follow rule: do not tailgate a leading pedestrian.
    double follow_scale = 1.0;
    for (const auto& ped : w.pedestrians) {
        if (ped.behavior != Behavior::Leading) {
            continue;
        }
        const Vec2 rel = world_to_body(w.robot_pose, ped.position);
        if (rel.x > 0.0 && std::fabs(rel.y) < 0.8) {
            follow_scale = std::min(follow_scale, clamp((rel.x - 1.1) / 1.0, 0.0, 1.0));
        }
    }

    const double desired_heading = std::atan2(force.y, force.x);
    const double heading_err = wrap_angle(desired_heading - w.robot_pose.heading);

    Command cmd;
    cmd.omega = clamp(2.2 * heading_err, -kMaxAngularVel, kMaxAngularVel);
    double v = kCruise * std::max(0.0, std::cos(heading_err));
    v *= clamp(goal_dist / kArriveRadius, 0.0, 1.0);
    v *= yield_scale * follow_scale;
    cmd.v = clamp(v, 0.0, kMaxLinearVel);
    return cmd;
}

Episode generate_episode(ScenarioKind kind, uint64_t seed, const SimConfig& cfg) {
    cfg.validate();
    ScenarioSetup setup = init_scenario(kind, seed, cfg);

    const int total = cfg.steps + cfg.horizon;
    std::vector<WorldState> worlds;
    std::vector<Command> commands;
    worlds.reserve(static_cast<size_t>(total));
    worlds.push_back(setup.world);
    for (int k = 0; k + 1 < total; ++k) {
        const Command cmd = expert_command(worlds.back(), setup.goal_world);
        commands.push_back(cmd);
        worlds.push_back(step_world(worlds.back(), cmd, cfg.dt));
    }

    Episode ep;
    ep.scenario = kind;
    ep.seed = seed;
    ep.goal = world_to_body(worlds[0].robot_pose, setup.goal_world);
    ep.frames.reserve(static_cast<size_t>(cfg.steps));
    ep.poses.reserve(static_cast<size_t>(cfg.steps));
    ep.labels.reserve(static_cast<size_t>(cfg.steps));
    ep.narrations.reserve(static_cast<size_t>(cfg.steps));
    for (int k = 0; k < cfg.steps; ++k) {
        const WorldState& w = worlds[static_cast<size_t>(k)];
        ep.poses.push_back(w.robot_pose);
        Trajectory lab;
        lab.reserve(static_cast<size_t>(cfg.horizon));
        for (int j = 1; j <= cfg.horizon; ++j) {
            const Pose& future = worlds[static_cast<size_t>(k + j)].robot_pose;
            lab.push_back(world_to_body(w.robot_pose, Vec2{future.x, future.y}));
        }
        ep.labels.push_back(lab);
        ep.narrations.push_back(narrate(w, lab, cfg));
        Image img = render_observation(w, cfg);
        img.frame_time = w.time;
        ep.frames.push_back(std::move(img));
    }
    ep.commands.assign(commands.begin(), commands.begin() + (cfg.steps - 1));
    return ep;
}

}  // namespace n2n::sim
