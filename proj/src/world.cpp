#include "n2n/sim/world.hpp"

#include <cmath>

#include "n2n/errors.hpp"

namespace n2n::sim {

const char* to_string(Behavior b) {
    switch (b) {
        case Behavior::Crossing: return "crossing";
        case Behavior::Approaching: return "approaching";
        case Behavior::Leading: return "leading";
        case Behavior::Standing: return "standing";
        case Behavior::Turning: return "turning";
    }
    return "unknown";
}

const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Crowd: return "crowd";
        case ScenarioKind::FrontalApproach: return "frontal_approach";
        case ScenarioKind::HumanFollowing: return "human_following";
        case ScenarioKind::NarrowPassageway: return "narrow_passageway";
        case ScenarioKind::Intersection: return "intersection";
    }
    return "unknown";
}

ScenarioKind scenario_from_string(const std::string& s) {
    if (s == "crowd" || s == "Crowd") return ScenarioKind::Crowd;
    if (s == "frontal_approach" || s == "FrontalApproach") return ScenarioKind::FrontalApproach;
    if (s == "human_following" || s == "HumanFollowing") return ScenarioKind::HumanFollowing;
    if (s == "narrow_passageway" || s == "NarrowPassageway") return ScenarioKind::NarrowPassageway;
    if (s == "intersection" || s == "Intersection") return ScenarioKind::Intersection;
    throw ConfigError("unknown scenario: " + s);
}

WorldState step_world(const WorldState& w, Command cmd, double dt) {
    if (dt <= 0.0) {
        throw ContractError("step_world: dt must be positive");
    }
    WorldState out = w;
    const double v = clamp(cmd.v, 0.0, kMaxLinearVel);
    const double omega = clamp(cmd.omega, -kMaxAngularVel, kMaxAngularVel);

    out.robot_pose.x += v * std::cos(w.robot_pose.heading) * dt;
    out.robot_pose.y += v * std::sin(w.robot_pose.heading) * dt;
    out.robot_pose.heading = wrap_angle(w.robot_pose.heading + omega * dt);
    out.robot_vel = Command{v, omega};

    for (auto& ped : out.pedestrians) {
        switch (ped.behavior) {
            case Behavior::Standing:
                break;
            case Behavior::Turning: {
                const double c = std::cos(ped.turn_rate * dt);
                const double s = std::sin(ped.turn_rate * dt);
                ped.velocity = Vec2{c * ped.velocity.x - s * ped.velocity.y,
                                    s * ped.velocity.x + c * ped.velocity.y};
                ped.position = ped.position + ped.velocity * dt;
                break;
            }
            case Behavior::Crossing:
            case Behavior::Approaching:
            case Behavior::Leading:
                ped.position = ped.position + ped.velocity * dt;
                break;
        }
        const double speed = ped.velocity.norm();
        if (speed > kMaxPedSpeed) {
            ped.velocity = ped.velocity * (kMaxPedSpeed / speed);
        }
    }

    out.time = w.time + dt;
    return out;
}

bool check_collision(const WorldState& w, double robot_radius) {
    if (robot_radius <= 0.0) {
        throw ContractError("check_collision: robot_radius must be positive");
    }
    const Vec2 rp{w.robot_pose.x, w.robot_pose.y};
    for (const auto& ped : w.pedestrians) {
        const double d = (ped.position - rp).norm();
        if (d < robot_radius + ped.radius) {
            return true;
        }
    }
    for (const auto& wall : w.obstacles) {
        if (point_segment_distance(rp, wall.a, wall.b) < robot_radius) {
            return true;
        }
    }
    return false;
}

}  // namespace n2n::sim
