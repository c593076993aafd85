#pragma once

#include <optional>
#include <vector>

#include "vicsim/comm.hpp"
#include "vicsim/grid.hpp"
#include "vicsim/sensing.hpp"

namespace vicsim {

struct DetectionBox {
  Point2 center{};
  double half_x{0.0};
  double half_y{0.0};
  double confidence{0.0};  // component evidence / max component evidence
  std::optional<int> matched_gt;
  CellIndex seed_cell{};  // first component cell in row-major order
};

// Cellwise max of the local occupancy and the received block payloads.
// Cells outside every received block keep the local values bit-exactly.
OccupancyGrid fuse(const OccupancyGrid& ego_occupancy, const FeatureBlockSet& received);
OccupancyGrid fuse(const SensorView& ego, const FeatureBlockSet& received);

// 4-connected components over cells with occupancy >= min_count; components
// of at least min_cells cells become tight bounding boxes. Output is ordered
// by descending confidence, ties broken by seed cell (row, then col).
std::vector<DetectionBox> detect(const OccupancyGrid& fused, int min_cells = 3,
                                 double min_count = 1.0);

struct GtBox {
  int agent_id{0};
  AlignedRect rect{};
};

// Greedy matching in detection order (descending confidence): each detection
// takes the best still-free ground-truth box with axis-aligned IoU at or
// above the threshold. Fills matched_gt in place and returns one entry per
// detection.
std::vector<std::optional<int>> match_detections(std::vector<DetectionBox>& boxes,
                                                 const std::vector<GtBox>& gt,
                                                 double iou_threshold);

}  // namespace vicsim
