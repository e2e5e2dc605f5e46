#pragma once

#include <cmath>
#include <vector>

namespace n2n {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }

    Vec2 normalized() const {
        const double n = norm();
        if (n < 1e-12) {
            return {0.0, 0.0};
        }
        return {x / n, y / n};
    }
};

// Pose in the world frame. Convention: x east, y north, heading ccw from +x.
// Body frame: x forward, y left.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;
};

// A 2-D waypoint in the robot body frame (x forward, y left).
using Waypoint = Vec2;
using Trajectory = std::vector<Waypoint>;

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    a = std::fmod(a, two_pi);
    if (a <= -M_PI) {
        a += two_pi;
    } else if (a > M_PI) {
        a -= two_pi;
    }
    return a;
}

// World point expressed in the body frame of `pose`.
inline Vec2 world_to_body(const Pose& pose, const Vec2& p) {
    const double dx = p.x - pose.x;
    const double dy = p.y - pose.y;
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    return {c * dx + s * dy, -s * dx + c * dy};
}

// Body-frame point expressed in the world frame.
inline Vec2 body_to_world(const Pose& pose, const Vec2& p) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    return {pose.x + c * p.x - s * p.y, pose.y + s * p.x + c * p.y};
}

inline double clamp(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

// Distance from point p to segment [a, b].
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len_sq = ab.norm_sq();
    if (len_sq < 1e-18) {
        return (p - a).norm();
    }
    double t = (p - a).dot(ab) / len_sq;
    t = clamp(t, 0.0, 1.0);
    const Vec2 proj = a + ab * t;
    return (p - proj).norm();
}

}  // namespace n2n
