#include "vicsim/sensing.hpp"

#include <cmath>
#include <stdexcept>

namespace vicsim {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

enum CellContent : std::uint8_t { kEmpty = 0, kAgent = 1, kObstacle = 2 };

// Per-cell solid map for one frame.
Grid<std::uint8_t> build_solids(const Scenario& scenario, int frame,
                                const GridSpec& spec, int skip_agent_id) {
  Grid<std::uint8_t> solids(spec, kEmpty);
  for (const auto& r : scenario.static_obstacles) {
    const int c0 = static_cast<int>(std::floor((r.x_min - spec.x_min) / spec.cell_size));
    const int c1 = static_cast<int>(std::floor((r.x_max - spec.x_min) / spec.cell_size));
    const int r0 = static_cast<int>(std::floor((r.y_min - spec.y_min) / spec.cell_size));
    const int r1 = static_cast<int>(std::floor((r.y_max - spec.y_min) / spec.cell_size));
    for (int row = std::max(0, r0); row <= std::min(spec.rows() - 1, r1); ++row) {
      for (int col = std::max(0, c0); col <= std::min(spec.cols() - 1, c1); ++col) {
        if (r.contains(spec.cell_center({row, col}))) {
          solids.at(row, col) = kObstacle;
        }
      }
    }
  }
  for (const auto& a : scenario.agents) {
    if (a.state.id == skip_agent_id) {
      continue;
    }
    for (const auto& c : footprint_cells(spec, a.footprint_at(frame))) {
      solids.at(c) = kAgent;
    }
  }
  return solids;
}

}  // namespace

std::vector<CellIndex> footprint_cells(const GridSpec& spec, const OrientedBox& box) {
  std::vector<CellIndex> out;
  const AlignedRect bb = box.aabb();
  const int c0 = static_cast<int>(std::floor((bb.x_min - spec.x_min) / spec.cell_size));
  const int c1 = static_cast<int>(std::floor((bb.x_max - spec.x_min) / spec.cell_size));
  const int r0 = static_cast<int>(std::floor((bb.y_min - spec.y_min) / spec.cell_size));
  const int r1 = static_cast<int>(std::floor((bb.y_max - spec.y_min) / spec.cell_size));
  for (int row = std::max(0, r0); row <= std::min(spec.rows() - 1, r1); ++row) {
    for (int col = std::max(0, c0); col <= std::min(spec.cols() - 1, c1); ++col) {
      if (box.contains(spec.cell_center({row, col}))) {
        out.push_back({row, col});
      }
    }
  }
  return out;
}

SensorView render_view(const Scenario& scenario, int frame, SensorKind sensor,
                       const GridSpec& spec, int n_rays, double range) {
  if (frame < 0 || frame >= scenario.frames) {
    throw std::out_of_range("render_view: frame " + std::to_string(frame) +
                            " outside scenario range");
  }
  if (n_rays < 8) {
    throw std::invalid_argument("render_view: n_rays must be >= 8");
  }

  Point2 origin;
  int skip_id = -1;
  if (sensor == SensorKind::Ego) {
    const auto pos = scenario.ego().trajectory.position_at(frame);
    if (!pos) {
      throw std::out_of_range("render_view: ego has no waypoint at frame " +
                              std::to_string(frame));
    }
    origin = *pos;
    skip_id = scenario.ego_id;
  } else {
    origin = scenario.infra_pose.translation;
  }

  const auto solids = build_solids(scenario, frame, spec, skip_id);
  SensorView view{OccupancyGrid(spec, 0.0), CellMask(spec, 0), origin};

  const double step = spec.cell_size / 2.0;
  const bool see_over_obstacles = sensor == SensorKind::Infra;
  for (int i = 0; i < n_rays; ++i) {
    const double angle = kTwoPi * static_cast<double>(i) / n_rays;
    const Point2 dir{std::cos(angle), std::sin(angle)};
    int prev_row = -1, prev_col = -1;
    for (double t = step; t <= range; t += step) {
      const auto cell = world_to_cell(spec, origin + dir * t);
      if (!cell) {
        break;  // grid extent is convex, the ray will not re-enter
      }
      if (cell->row == prev_row && cell->col == prev_col) {
        continue;
      }
      prev_row = cell->row;
      prev_col = cell->col;
      view.visible.at(*cell) = 1;
      const auto content = solids.at(*cell);
      if (content == kAgent) {
        view.occupancy.at(*cell) += 1.0;
        break;
      }
      if (content == kObstacle) {
        view.occupancy.at(*cell) += 1.0;
        if (!see_over_obstacles) {
          break;
        }
      }
    }
  }
  return view;
}

OccupancyGrid accumulate_temporal(std::span<const SensorView> views) {
  if (views.empty()) {
    throw std::invalid_argument("accumulate_temporal: need at least one view");
  }
  OccupancyGrid out(views.front().occupancy.spec(), 0.0);
  for (const auto& v : views) {
    if (!(v.occupancy.spec() == out.spec())) {
      throw std::invalid_argument("accumulate_temporal: grid specs differ");
    }
    auto& cells = out.cells();
    const auto& add = v.occupancy.cells();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      cells[i] += add[i];
    }
  }
  return out;
}

}  // namespace vicsim
