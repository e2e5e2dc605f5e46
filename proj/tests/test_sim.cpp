#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "n2n/errors.hpp"
#include "n2n/sim/narrate.hpp"
#include "n2n/sim/render.hpp"
#include "n2n/sim/scenario.hpp"
#include "n2n/sim/world.hpp"

using namespace n2n;
using namespace n2n::sim;

namespace {

SimConfig small_cfg() {
    SimConfig cfg;
    cfg.steps = 24;
    cfg.image_h = 32;
    cfg.image_w = 32;
    return cfg;
}

}  // namespace

TEST_CASE("step_world integrates the unicycle and clamps commands") {
    WorldState w;

    SUBCASE("zero command leaves the pose, advances time") {
        const WorldState out = step_world(w, {0.0, 0.0}, 0.5);
        CHECK(out.robot_pose.x == 0.0);
        CHECK(out.robot_pose.y == 0.0);
        CHECK(out.robot_pose.heading == 0.0);
        CHECK(out.time == doctest::Approx(0.5));
    }

    SUBCASE("straight-line integration") {
        const WorldState out = step_world(w, {1.0, 0.0}, 0.5);
        CHECK(out.robot_pose.x == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(out.robot_pose.y == doctest::Approx(0.0));
        CHECK(out.robot_pose.heading == doctest::Approx(0.0));
    }

    SUBCASE("commands outside the bounds are clamped to (1.6, 1.5)") {
        const WorldState out = step_world(w, {2.0, 2.0}, 1.0);
        CHECK(out.robot_vel.v == doctest::Approx(1.6));
        CHECK(out.robot_vel.omega == doctest::Approx(1.5));
        CHECK(out.robot_pose.x == doctest::Approx(1.6 * std::cos(0.0)));
    }

    SUBCASE("negative v clamps to zero") {
        const WorldState out = step_world(w, {-1.0, 0.0}, 0.5);
        CHECK(out.robot_pose.x == 0.0);
        CHECK(out.robot_vel.v == 0.0);
    }

    SUBCASE("heading stays wrapped") {
        w.robot_pose.heading = 3.0;
        const WorldState out = step_world(w, {0.0, 1.5}, 1.0);
        CHECK(out.robot_pose.heading <= M_PI);
        CHECK(out.robot_pose.heading > -M_PI);
    }

    SUBCASE("non-positive dt is rejected") {
        CHECK_THROWS_AS(step_world(w, {0.0, 0.0}, 0.0), ContractError);
    }
}

TEST_CASE("check_collision uses strict inequality at the boundary") {
    WorldState w;
    CHECK_FALSE(check_collision(w, 0.3));

    PedestrianState ped;
    ped.radius = 0.25;

    ped.position = {0.55, 0.0};  // exactly robot_radius + ped radius away
    w.pedestrians = {ped};
    CHECK_FALSE(check_collision(w, 0.3));

    w.pedestrians[0].position = {0.0, 0.0};
    CHECK(check_collision(w, 0.3));

    w.pedestrians.clear();
    w.obstacles.push_back({{0.29, -1.0}, {0.29, 1.0}});
    CHECK(check_collision(w, 0.3));
    w.obstacles[0] = {{0.31, -1.0}, {0.31, 1.0}};
    CHECK_FALSE(check_collision(w, 0.3));
}

TEST_CASE("generate_episode honors the scenario archetypes") {
    const SimConfig cfg = small_cfg();

    SUBCASE("frontal approach has exactly one approaching pedestrian") {
        const ScenarioSetup s = init_scenario(ScenarioKind::FrontalApproach, 7, cfg);
        REQUIRE(s.world.pedestrians.size() == 1);
        CHECK(s.world.pedestrians[0].behavior == Behavior::Approaching);
    }

    SUBCASE("labels carry exactly horizon waypoints") {
        const Episode ep = generate_episode(ScenarioKind::FrontalApproach, 7, cfg);
        REQUIRE(!ep.labels.empty());
        CHECK(ep.labels[0].size() == static_cast<size_t>(cfg.horizon));
    }

    SUBCASE("regeneration is deterministic") {
        const Episode a = generate_episode(ScenarioKind::Crowd, 0, cfg);
        const Episode b = generate_episode(ScenarioKind::Crowd, 0, cfg);
        REQUIRE(a.frames.size() == b.frames.size());
        for (size_t i = 0; i < a.frames.size(); ++i) {
            CHECK(a.frames[i].px == b.frames[i].px);
        }
        for (size_t i = 0; i < a.labels.size(); ++i) {
            for (size_t j = 0; j < a.labels[i].size(); ++j) {
                CHECK(a.labels[i][j].x == b.labels[i][j].x);
                CHECK(a.labels[i][j].y == b.labels[i][j].y);
            }
        }
    }

    SUBCASE("lengths agree and frame cadence is dt") {
        const Episode ep = generate_episode(ScenarioKind::Intersection, 3, cfg);
        CHECK(ep.frames.size() == static_cast<size_t>(cfg.steps));
        CHECK(ep.poses.size() == ep.frames.size());
        CHECK(ep.labels.size() == ep.frames.size());
        CHECK(ep.narrations.size() == ep.frames.size());
        for (size_t k = 1; k < ep.frames.size(); ++k) {
            CHECK(ep.frames[k].frame_time - ep.frames[k - 1].frame_time ==
                  doctest::Approx(cfg.dt).epsilon(1e-12));
        }
    }

    SUBCASE("invalid config is a configuration error") {
        SimConfig bad = cfg;
        bad.steps = 5;
        CHECK_THROWS_AS(generate_episode(ScenarioKind::Crowd, 0, bad), ConfigError);
        bad = cfg;
        bad.dt = 0.0;
        CHECK_THROWS_AS(generate_episode(ScenarioKind::Crowd, 0, bad), ConfigError);
    }
}

TEST_CASE("kinematic consistency: expert commands reproduce the stored poses") {
    const SimConfig cfg = small_cfg();
    for (ScenarioKind kind : all_scenarios()) {
        const Episode ep = generate_episode(kind, 11, cfg);
        const ScenarioSetup setup = init_scenario(kind, 11, cfg);
        WorldState w = setup.world;
        for (size_t k = 0; k + 1 < ep.poses.size(); ++k) {
            CHECK(std::fabs(w.robot_pose.x - ep.poses[k].x) < 1e-9);
            CHECK(std::fabs(w.robot_pose.y - ep.poses[k].y) < 1e-9);
            w = step_world(w, ep.commands[k], cfg.dt);
        }
    }
}

TEST_CASE("label consistency: body-frame transform of future poses") {
    const SimConfig cfg = small_cfg();
    const Episode ep = generate_episode(ScenarioKind::Crowd, 5, cfg);
    for (size_t k = 0; k < ep.poses.size(); ++k) {
        for (int j = 0; j < cfg.horizon; ++j) {
            const size_t future = k + static_cast<size_t>(j) + 1;
            if (future >= ep.poses.size()) {
                break;
            }
            const Vec2 expect = world_to_body(
                ep.poses[k], Vec2{ep.poses[future].x, ep.poses[future].y});
            CHECK(std::fabs(expect.x - ep.labels[k][static_cast<size_t>(j)].x) < 1e-9);
            CHECK(std::fabs(expect.y - ep.labels[k][static_cast<size_t>(j)].y) < 1e-9);
        }
    }
}

TEST_CASE("expert commands already satisfy the velocity bounds") {
    const SimConfig cfg = small_cfg();
    for (ScenarioKind kind : all_scenarios()) {
        const Episode ep = generate_episode(kind, 23, cfg);
        for (const Command& c : ep.commands) {
            CHECK(c.v >= 0.0);
            CHECK(c.v <= kMaxLinearVel);
            CHECK(std::fabs(c.omega) <= kMaxAngularVel);
        }
    }
}

TEST_CASE("render: empty world gives the constant background raster") {
    const SimConfig cfg = small_cfg();
    WorldState w;
    const Image bg = render_observation(w, cfg);
    const Image bg2 = render_observation(w, cfg);
    CHECK(bg.px == bg2.px);

    SUBCASE("pedestrian dead ahead at 2 m is centered at W/2") {
        PedestrianState ped;
        ped.position = {2.0, 0.0};
        w.pedestrians = {ped};
        const Image img = render_observation(w, cfg);
        // Locate the drawn columns (pixels differing from background).
        int min_col = cfg.image_w, max_col = -1;
        for (int y = 0; y < cfg.image_h; ++y) {
            for (int x = 0; x < cfg.image_w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    if (img.at(y, x, c) != bg.at(y, x, c)) {
                        min_col = std::min(min_col, x);
                        max_col = std::max(max_col, x);
                    }
                }
            }
        }
        REQUIRE(max_col >= 0);
        const double center = 0.5 * (min_col + max_col);
        CHECK(std::fabs(center - cfg.image_w / 2.0) <= 1.0);
    }

    SUBCASE("pedestrian behind the robot leaves the raster untouched") {
        PedestrianState ped;
        ped.position = {-2.0, 0.0};
        w.pedestrians = {ped};
        CHECK(render_observation(w, cfg).px == bg.px);
    }
}

TEST_CASE("FOV property: pedestrians outside 90 deg or beyond 8 m never draw") {
    const SimConfig cfg = small_cfg();
    WorldState empty;
    const Image bg = render_observation(empty, cfg);
    Rng rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        WorldState w;
        PedestrianState ped;
        // Either beyond range or outside the half-fov cone.
        if (rng.bernoulli(0.5)) {
            const double ang = rng.uniform(-M_PI / 4.0, M_PI / 4.0);
            const double d = rng.uniform(8.05, 20.0);
            ped.position = {d * std::cos(ang), d * std::sin(ang)};
        } else {
            const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
            const double ang = side * rng.uniform(M_PI / 4.0 + 0.02, M_PI);
            const double d = rng.uniform(0.5, 7.9);
            ped.position = {d * std::cos(ang), d * std::sin(ang)};
        }
        w.pedestrians = {ped};
        CHECK(render_observation(w, cfg).px == bg.px);
    }
}

TEST_CASE("narration templates") {
    const SimConfig cfg = small_cfg();
    WorldState w;
    Trajectory straight;
    for (int i = 1; i <= cfg.horizon; ++i) {
        straight.push_back({0.4 * i, 0.0});
    }

    SUBCASE("empty world, straight future") {
        const Narration n = narrate(w, straight, cfg);
        const auto all = n.all_tokens();
        auto has = [&](const char* word) {
            const int id = token_id(word);
            return std::find(all.begin(), all.end(), id) != all.end();
        };
        CHECK(has("no"));
        CHECK(has("pedestrians"));
        CHECK(has("continue"));
        CHECK(has("straight"));
        // All four sections present.
        CHECK(!n.scene_context.empty());
        CHECK(!n.human_intentions.empty());
        CHECK(!n.trajectory_summary.empty());
        CHECK(!n.reasoning.empty());
    }

    SUBCASE("crossing pedestrian at +20 deg, 1.5 m") {
        PedestrianState ped;
        const double ang = 20.0 * M_PI / 180.0;
        ped.position = {1.5 * std::cos(ang), 1.5 * std::sin(ang)};
        ped.behavior = Behavior::Crossing;
        w.pedestrians = {ped};
        const Narration n = narrate(w, straight, cfg);
        auto has = [&](const char* word) {
            const int id = token_id(word);
            return std::find(n.scene_context.begin(), n.scene_context.end(), id) !=
                   n.scene_context.end();
        };
        CHECK(has("pedestrian"));
        CHECK(has("near"));
        CHECK(has("left"));
        CHECK(has("crossing"));
    }

    SUBCASE("net displacement below 0.1 m summarizes as stop") {
        Trajectory stopped(static_cast<size_t>(cfg.horizon), Waypoint{0.01, 0.0});
        const Narration n = narrate(w, stopped, cfg);
        const int stop_id = token_id("stop");
        CHECK(std::find(n.trajectory_summary.begin(), n.trajectory_summary.end(), stop_id) !=
              n.trajectory_summary.end());
    }

    SUBCASE("wrong future length is a contract error") {
        Trajectory bad(static_cast<size_t>(cfg.horizon - 1), Waypoint{0.1, 0.0});
        CHECK_THROWS_AS(narrate(w, bad, cfg), ContractError);
    }
}

TEST_CASE("narration faithfulness: buckets match ground truth on random states") {
    const SimConfig cfg = small_cfg();
    Rng rng(77);
    Trajectory straight;
    for (int i = 1; i <= cfg.horizon; ++i) {
        straight.push_back({0.4 * i, 0.0});
    }
    const double half_fov = cfg.fov_deg * M_PI / 360.0;

    for (int rep = 0; rep < 1000; ++rep) {
        WorldState w;
        w.robot_pose = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
                        rng.uniform(-M_PI, M_PI)};
        const int count = rng.uniform_int(0, 3);
        for (int i = 0; i < count; ++i) {
            PedestrianState ped;
            ped.position = {w.robot_pose.x + rng.uniform(-9.0, 9.0),
                            w.robot_pose.y + rng.uniform(-9.0, 9.0)};
            ped.behavior = static_cast<Behavior>(rng.uniform_int(0, 4));
            w.pedestrians.push_back(ped);
        }
        const Narration n = narrate(w, straight, cfg);

        // Independent bucket computation over the visible set.
        std::vector<int> expected;
        expected.push_back(token_id("scene"));
        struct Vis {
            double d, b;
            Behavior behavior;
        };
        std::vector<Vis> vis;
        for (const auto& ped : w.pedestrians) {
            const Vec2 rel = world_to_body(w.robot_pose, ped.position);
            const double d = rel.norm();
            const double b = std::atan2(rel.y, rel.x);
            if (d <= cfg.view_range && std::fabs(b) <= half_fov) {
                vis.push_back({d, b, ped.behavior});
            }
        }
        std::stable_sort(vis.begin(), vis.end(),
                         [](const Vis& a, const Vis& b) { return a.d < b.d; });
        if (vis.empty()) {
            expected.push_back(token_id("no"));
            expected.push_back(token_id("pedestrians"));
        } else {
            for (size_t i = 0; i < std::min<size_t>(vis.size(), 4); ++i) {
                expected.push_back(token_id("pedestrian"));
                expected.push_back(
                    token_id(vis[i].d < 2.0 ? "near" : (vis[i].d < 5.0 ? "mid" : "far")));
                expected.push_back(token_id(std::fabs(vis[i].b) <= 10.0 * M_PI / 180.0
                                                ? "center"
                                                : (vis[i].b > 0 ? "left" : "right")));
                expected.push_back(token_id(to_string(vis[i].behavior)));
            }
        }
        CHECK(n.scene_context == expected);
    }
}

TEST_CASE("vocabulary is exactly 128 unique words") {
    const auto& vocab = vocabulary();
    CHECK(vocab.size() == 128);
    std::set<std::string> unique(vocab.begin(), vocab.end());
    CHECK(unique.size() == 128);
    CHECK_THROWS_AS(token_id("notaword"), ContractError);
    CHECK(token_word(token_id("yield")) == "yield");
}
