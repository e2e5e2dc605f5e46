#pragma once

#include "n2n/geometry.hpp"

namespace n2n::metrics {

struct TrajectoryPair {
    Trajectory predicted;
    Trajectory ground_truth;
};

// Mean over all coordinates of squared error.
double mse_traj(const TrajectoryPair& p);

// Mean Euclidean distance over waypoints.
double ade(const TrajectoryPair& p);

// Euclidean distance at the final waypoint.
double fde(const TrajectoryPair& p);

// Mean absolute angular difference between the origin-to-waypoint direction
// vectors, wrapped into [0, pi]. Waypoints where either vector is shorter
// than 1e-6 m are skipped; if every waypoint is skipped the result is 0.
double aoe(const TrajectoryPair& p);

}  // namespace n2n::metrics
