#pragma once

#include "n2n/image.hpp"
#include "n2n/sim/world.hpp"

namespace n2n::sim {

struct SimConfig;

// Egocentric pseudo-perspective raster. Ground-plane gradient background,
// pedestrians within the field of view and range drawn as filled rectangles
// (position by bearing, scale by inverse distance, color by behavior), walls
// as dark vertical bands via a per-column raycast. The goal is not rendered.
// Pixels are quantized to 1/255 steps.
Image render_observation(const WorldState& w, const SimConfig& cfg);

}  // namespace n2n::sim
