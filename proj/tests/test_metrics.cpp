#include <doctest.h>

#include <cmath>

#include "n2n/errors.hpp"
#include "n2n/metrics.hpp"
#include "n2n/rng.hpp"

using namespace n2n;
using namespace n2n::metrics;

namespace {

// Independent straight-loop reference implementations used as the oracle.
struct Reference {
    static double ade(const TrajectoryPair& p) {
        double acc = 0.0;
        for (size_t i = 0; i < p.predicted.size(); ++i) {
            const double dx = p.predicted[i].x - p.ground_truth[i].x;
            const double dy = p.predicted[i].y - p.ground_truth[i].y;
            acc += std::sqrt(dx * dx + dy * dy);
        }
        return acc / static_cast<double>(p.predicted.size());
    }
    static double fde(const TrajectoryPair& p) {
        const double dx = p.predicted.back().x - p.ground_truth.back().x;
        const double dy = p.predicted.back().y - p.ground_truth.back().y;
        return std::sqrt(dx * dx + dy * dy);
    }
    static double aoe(const TrajectoryPair& p) {
        double acc = 0.0;
        int n = 0;
        for (size_t i = 0; i < p.predicted.size(); ++i) {
            const double na = std::hypot(p.predicted[i].x, p.predicted[i].y);
            const double nb = std::hypot(p.ground_truth[i].x, p.ground_truth[i].y);
            if (na < 1e-6 || nb < 1e-6) {
                continue;
            }
            double d = std::atan2(p.predicted[i].y, p.predicted[i].x) -
                       std::atan2(p.ground_truth[i].y, p.ground_truth[i].x);
            while (d > M_PI) {
                d -= 2.0 * M_PI;
            }
            while (d <= -M_PI) {
                d += 2.0 * M_PI;
            }
            acc += std::fabs(d);
            ++n;
        }
        return n > 0 ? acc / n : 0.0;
    }
};

}  // namespace

TEST_CASE("worked examples") {
    // Identical trajectories.
    TrajectoryPair same{{{1.0, 2.0}, {3.0, 4.0}}, {{1.0, 2.0}, {3.0, 4.0}}};
    CHECK(ade(same) == 0.0);
    CHECK(fde(same) == 0.0);
    CHECK(aoe(same) == 0.0);
    CHECK(mse_traj(same) == 0.0);

    // ade 1.5, fde 2.0.
    TrajectoryPair shifted{{{1.0, 0.0}, {2.0, 0.0}}, {{0.0, 0.0}, {0.0, 0.0}}};
    CHECK(ade(shifted) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(fde(shifted) == doctest::Approx(2.0).epsilon(1e-12));

    TrajectoryPair unit{{{0.0, 1.0}}, {{0.0, 0.0}}};
    CHECK(ade(unit) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fde(unit) == doctest::Approx(1.0).epsilon(1e-12));

    // Orthogonal rays -> pi/2; opposite rays -> pi.
    TrajectoryPair ortho{{{1.0, 0.0}, {2.0, 0.0}}, {{0.0, 1.0}, {0.0, 2.0}}};
    CHECK(aoe(ortho) == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
    TrajectoryPair opposite{{{1.0, 0.0}}, {{-1.0, 0.0}}};
    CHECK(aoe(opposite) == doctest::Approx(M_PI).epsilon(1e-12));

    // mse examples.
    TrajectoryPair ones{{{1.0, 0.0}, {1.0, 0.0}}, {{0.0, 0.0}, {0.0, 0.0}}};
    CHECK(mse_traj(ones) == doctest::Approx(0.5).epsilon(1e-12));
    TrajectoryPair single{{{3.0, 4.0}}, {{0.0, 0.0}}};
    CHECK(mse_traj(single) == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("aoe skips near-zero vectors and returns zero when all skipped") {
    TrajectoryPair tiny{{{1e-9, 0.0}, {1e-8, 1e-8}}, {{1.0, 0.0}, {0.0, 1.0}}};
    CHECK(aoe(tiny) == 0.0);

    // One valid waypoint among skipped ones.
    TrajectoryPair mixed{{{1e-9, 0.0}, {1.0, 0.0}}, {{1.0, 0.0}, {0.0, 1.0}}};
    CHECK(mixed.predicted.size() == 2);
    CHECK(aoe(mixed) == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
}

TEST_CASE("100 random pairs match the independent reference to 1e-9") {
    Rng rng(42);
    for (int rep = 0; rep < 100; ++rep) {
        const int len = rng.uniform_int(1, 8);
        TrajectoryPair p;
        for (int i = 0; i < len; ++i) {
            p.predicted.push_back({rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)});
            p.ground_truth.push_back({rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)});
        }
        CHECK(std::fabs(ade(p) - Reference::ade(p)) < 1e-9);
        CHECK(std::fabs(fde(p) - Reference::fde(p)) < 1e-9);
        CHECK(std::fabs(aoe(p) - Reference::aoe(p)) < 1e-9);
    }
}

TEST_CASE("aoe is invariant to uniform positive scaling") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        TrajectoryPair p;
        for (int i = 0; i < 5; ++i) {
            p.predicted.push_back({rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)});
            p.ground_truth.push_back({rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)});
        }
        const double base = aoe(p);
        TrajectoryPair scaled = p;
        const double s = rng.uniform(0.5, 20.0);
        for (auto& wp : scaled.predicted) {
            wp = wp * s;
        }
        for (auto& wp : scaled.ground_truth) {
            wp = wp * s;
        }
        CHECK(aoe(scaled) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("ade is bounded by the maximum per-step displacement") {
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        TrajectoryPair p;
        double max_step = 0.0;
        for (int i = 0; i < 6; ++i) {
            p.predicted.push_back({rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)});
            p.ground_truth.push_back({rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)});
            max_step = std::max(max_step, (p.predicted.back() - p.ground_truth.back()).norm());
        }
        CHECK(ade(p) <= max_step + 1e-12);
    }
}

TEST_CASE("mismatched or empty pairs are contract errors") {
    TrajectoryPair bad{{{1.0, 0.0}}, {}};
    CHECK_THROWS_AS(ade(bad), ContractError);
    TrajectoryPair empty{{}, {}};
    CHECK_THROWS_AS(fde(empty), ContractError);
}
