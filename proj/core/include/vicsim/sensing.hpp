#pragma once

#include <span>
#include <vector>

#include "vicsim/grid.hpp"
#include "vicsim/scenario.hpp"

namespace vicsim {

enum class SensorKind { Ego, Infra };

struct SensorView {
  OccupancyGrid occupancy;  // evidence counts per cell
  CellMask visible;         // cells reached by at least one ray
  Point2 sensor_pos{};
};

// 2D ray-cast rendering. Rays fan out evenly from the sensor position and
// march in cell_size/2 steps out to `range`, marking traversed cells visible.
// The ego sensor deposits one count on the first solid cell (agent footprint
// or obstacle) along a ray and stops there. The infrastructure sensor is an
// elevated mount: it still stops at agents but sees over static obstacles,
// depositing counts on every obstacle cell a ray crosses. The rendering
// sensor's own vehicle is never part of its view.
SensorView render_view(const Scenario& scenario, int frame, SensorKind sensor,
                       const GridSpec& spec, int n_rays = 720, double range = 60.0);

// Per-cell sum of the given views. Grids share one world-frame spec, so the
// views are already co-registered and no warp is needed before summing.
OccupancyGrid accumulate_temporal(std::span<const SensorView> views);

// Rasterizes an oriented footprint: cells of `spec` whose center lies inside
// the box. Shared by sensing, feature rasterization and heatmap rendering.
std::vector<CellIndex> footprint_cells(const GridSpec& spec, const OrientedBox& box);

}  // namespace vicsim
