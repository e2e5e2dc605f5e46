#include "n2n/metrics.hpp"

#include <cmath>

#include "n2n/errors.hpp"

namespace n2n::metrics {

namespace {

void check_pair(const TrajectoryPair& p) {
    if (p.predicted.size() != p.ground_truth.size() || p.predicted.empty()) {
        throw ContractError("trajectory pair: lengths must match and be nonzero");
    }
}

}  // namespace

double mse_traj(const TrajectoryPair& p) {
    check_pair(p);
    double acc = 0.0;
    for (size_t k = 0; k < p.predicted.size(); ++k) {
        const Vec2 d = p.predicted[k] - p.ground_truth[k];
        acc += d.x * d.x + d.y * d.y;
    }
    return acc / (2.0 * static_cast<double>(p.predicted.size()));
}

double ade(const TrajectoryPair& p) {
    check_pair(p);
    double acc = 0.0;
    for (size_t k = 0; k < p.predicted.size(); ++k) {
        acc += (p.predicted[k] - p.ground_truth[k]).norm();
    }
    return acc / static_cast<double>(p.predicted.size());
}

double fde(const TrajectoryPair& p) {
    check_pair(p);
    return (p.predicted.back() - p.ground_truth.back()).norm();
}

double aoe(const TrajectoryPair& p) {
    check_pair(p);
    constexpr double kMinNorm = 1e-6;
    double acc = 0.0;
    int counted = 0;
    for (size_t k = 0; k < p.predicted.size(); ++k) {
        const Vec2& a = p.predicted[k];
        const Vec2& b = p.ground_truth[k];
        if (a.norm() < kMinNorm || b.norm() < kMinNorm) {
            continue;
        }
        const double diff = wrap_angle(std::atan2(a.y, a.x) - std::atan2(b.y, b.x));
        acc += std::fabs(diff);
        ++counted;
    }
    return counted > 0 ? acc / counted : 0.0;
}

}  // namespace n2n::metrics
