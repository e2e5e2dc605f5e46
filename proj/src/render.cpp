#include "n2n/sim/render.hpp"

#include <algorithm>
#include <cmath>

#include "n2n/sim/scenario.hpp"

namespace n2n::sim {

namespace {

float quantize(double v) {
    v = clamp(v, 0.0, 1.0);
    return static_cast<float>(std::floor(v * 255.0 + 0.5) / 255.0);
}

void put(Image& img, int y, int x, double r, double g, double b) {
    if (y < 0 || y >= img.h || x < 0 || x >= img.w) {
        return;
    }
    img.at(y, x, 0) = quantize(r);
    img.at(y, x, 1) = quantize(g);
    img.at(y, x, 2) = quantize(b);
}

struct Rgb {
    double r, g, b;
};

Rgb behavior_color(Behavior b) {
    switch (b) {
        case Behavior::Crossing: return {0.85, 0.25, 0.25};
        case Behavior::Approaching: return {0.25, 0.35, 0.85};
        case Behavior::Leading: return {0.25, 0.75, 0.35};
        case Behavior::Standing: return {0.80, 0.70, 0.25};
        case Behavior::Turning: return {0.70, 0.35, 0.80};
    }
    return {0.5, 0.5, 0.5};
}

// Distance along a ray (origin rp, unit dir u) to segment [a, b]; negative if
// no hit.
double ray_segment(const Vec2& rp, const Vec2& u, const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double denom = u.x * d.y - u.y * d.x;
    if (std::fabs(denom) < 1e-12) {
        return -1.0;
    }
    const Vec2 ao = a - rp;
    const double t = (ao.x * d.y - ao.y * d.x) / denom;
    const double s = (ao.x * u.y - ao.y * u.x) / -denom;
    if (t >= 0.0 && s >= 0.0 && s <= 1.0) {
        return t;
    }
    return -1.0;
}

}  // namespace

Image render_observation(const WorldState& w, const SimConfig& cfg) {
    const int H = cfg.image_h;
    const int W = cfg.image_w;
    Image img(H, W, 3);
    img.frame_time = w.time;

    const int horizon_row = H / 2;

    // Background: sky + ground gradient (nearer rows brighter).
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (y < horizon_row) {
                put(img, y, x, 0.55, 0.62, 0.72);
            } else {
                const double t = static_cast<double>(y - horizon_row) /
                                 std::max(1, H - 1 - horizon_row);
                const double g = 0.34 + 0.26 * t;
                put(img, y, x, g, g, g * 0.96);
            }
        }
    }

    const double fov = cfg.fov_deg * M_PI / 180.0;
    const double half_fov = 0.5 * fov;
    const Vec2 rp{w.robot_pose.x, w.robot_pose.y};

    // Walls: per-column raycast, dark band from the horizon down to the
    // ground projection of the hit distance.
    for (int x = 0; x < W; ++x) {
        const double bearing = (0.5 - (x + 0.5) / W) * fov;
        const double ang = w.robot_pose.heading + bearing;
        const Vec2 u{std::cos(ang), std::sin(ang)};
        double nearest = -1.0;
        for (const auto& wall : w.obstacles) {
            const double t = ray_segment(rp, u, wall.a, wall.b);
            if (t >= 0.0 && t <= cfg.view_range && (nearest < 0.0 || t < nearest)) {
                nearest = t;
            }
        }
        if (nearest < 0.0) {
            continue;
        }
        const double bottom = horizon_row + 0.5 * H / nearest;
        const double top = horizon_row - 0.45 * H / nearest;
        const double shade = 0.12 + 0.030 * nearest;
        const int y0 = std::max(0, static_cast<int>(std::floor(top + 0.5)));
        const int y1 = std::min(H - 1, static_cast<int>(std::floor(bottom + 0.5)));
        for (int y = y0; y <= y1; ++y) {
            put(img, y, x, shade, shade, shade);
        }
    }

    // Pedestrians, far to near so nearer ones paint over.
    std::vector<int> order(w.pedestrians.size());
    for (size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<int>(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = (w.pedestrians[static_cast<size_t>(a)].position - rp).norm_sq();
        const double db = (w.pedestrians[static_cast<size_t>(b)].position - rp).norm_sq();
        return da > db;
    });
    for (int idx : order) {
        const auto& ped = w.pedestrians[static_cast<size_t>(idx)];
        const Vec2 rel = world_to_body(w.robot_pose, ped.position);
        const double d = rel.norm();
        const double bearing = std::atan2(rel.y, rel.x);
        if (d > cfg.view_range || d < 1e-6 || std::fabs(bearing) > half_fov) {
            continue;
        }
        const double col = (0.5 - bearing / fov) * W;
        const double height = 0.55 * H / d;
        const double width = 0.45 * height * (ped.radius / 0.25);
        const double bottom = horizon_row + 0.5 * H / d;
        const Rgb c = behavior_color(ped.behavior);
        const int y0 = std::max(0, static_cast<int>(std::floor(bottom - height + 0.5)));
        const int y1 = std::min(H - 1, static_cast<int>(std::floor(bottom + 0.5)));
        const int x0 = std::max(0, static_cast<int>(std::floor(col - 0.5 * width + 0.5)));
        const int x1 = std::min(W - 1, static_cast<int>(std::floor(col + 0.5 * width + 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                put(img, y, x, c.r, c.g, c.b);
            }
        }
    }

    return img;
}

}  // namespace n2n::sim
