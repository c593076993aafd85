#include "vicsim/fusion.hpp"

#include <algorithm>
#include <stdexcept>

namespace vicsim {

OccupancyGrid fuse(const OccupancyGrid& ego_occupancy, const FeatureBlockSet& received) {
  if (!(ego_occupancy.spec() == received.source_spec)) {
    throw std::invalid_argument("fuse: grid specs differ");
  }
  OccupancyGrid out = ego_occupancy;
  const int bs = received.block_size;
  for (const auto& b : received.blocks) {
    std::size_t p = 0;
    for (int r = b.block_row * bs; r < (b.block_row + 1) * bs; ++r) {
      for (int c = b.block_col * bs; c < (b.block_col + 1) * bs; ++c, ++p) {
        out.at(r, c) = std::max(out.at(r, c), b.payload[p]);
      }
    }
  }
  return out;
}

OccupancyGrid fuse(const SensorView& ego, const FeatureBlockSet& received) {
  return fuse(ego.occupancy, received);
}

std::vector<DetectionBox> detect(const OccupancyGrid& fused, int min_cells,
                                 double min_count) {
  const int rows = fused.rows();
  const int cols = fused.cols();
  std::vector<int> label(fused.size(), -1);
  std::vector<DetectionBox> boxes;
  std::vector<double> evidences;
  std::vector<std::size_t> stack;

  auto idx = [cols](int r, int c) {
    return static_cast<std::size_t>(r) * cols + c;
  };

  int next_label = 0;
  for (int r0 = 0; r0 < rows; ++r0) {
    for (int c0 = 0; c0 < cols; ++c0) {
      const std::size_t start = idx(r0, c0);
      if (label[start] >= 0 || fused.cells()[start] < min_count) {
        continue;
      }
      // Flood fill one 4-connected component.
      label[start] = next_label;
      stack.assign(1, start);
      int min_r = r0, max_r = r0, min_c = c0, max_c = c0;
      int n_cells = 0;
      double evidence = 0.0;
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        const int r = static_cast<int>(cur) / cols;
        const int c = static_cast<int>(cur) % cols;
        ++n_cells;
        evidence += fused.cells()[cur];
        min_r = std::min(min_r, r);
        max_r = std::max(max_r, r);
        min_c = std::min(min_c, c);
        max_c = std::max(max_c, c);
        const int nr[4] = {r - 1, r + 1, r, r};
        const int nc[4] = {c, c, c - 1, c + 1};
        for (int k = 0; k < 4; ++k) {
          if (nr[k] < 0 || nr[k] >= rows || nc[k] < 0 || nc[k] >= cols) {
            continue;
          }
          const std::size_t ni = idx(nr[k], nc[k]);
          if (label[ni] < 0 && fused.cells()[ni] >= min_count) {
            label[ni] = next_label;
            stack.push_back(ni);
          }
        }
      }
      ++next_label;
      if (n_cells < min_cells) {
        continue;
      }
      const GridSpec& spec = fused.spec();
      DetectionBox box;
      box.half_x = 0.5 * (max_c - min_c + 1) * spec.cell_size;
      box.half_y = 0.5 * (max_r - min_r + 1) * spec.cell_size;
      box.center = {spec.x_min + (min_c + max_c + 1) * 0.5 * spec.cell_size,
                    spec.y_min + (min_r + max_r + 1) * 0.5 * spec.cell_size};
      box.seed_cell = {r0, c0};
      box.confidence = evidence;  // normalized below
      boxes.push_back(box);
      evidences.push_back(evidence);
    }
  }

  double max_evidence = 0.0;
  for (double e : evidences) {
    max_evidence = std::max(max_evidence, e);
  }
  for (auto& b : boxes) {
    b.confidence = max_evidence > 0.0 ? b.confidence / max_evidence : 0.0;
  }
  std::stable_sort(boxes.begin(), boxes.end(),
                   [](const DetectionBox& a, const DetectionBox& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     if (a.seed_cell.row != b.seed_cell.row)
                       return a.seed_cell.row < b.seed_cell.row;
                     return a.seed_cell.col < b.seed_cell.col;
                   });
  return boxes;
}

std::vector<std::optional<int>> match_detections(std::vector<DetectionBox>& boxes,
                                                 const std::vector<GtBox>& gt,
                                                 double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw std::invalid_argument("match_detections: iou_threshold must be in (0, 1)");
  }
  std::vector<std::optional<int>> matches;
  matches.reserve(boxes.size());
  std::vector<bool> taken(gt.size(), false);
  for (auto& box : boxes) {
    const AlignedRect det{box.center.x - box.half_x, box.center.x + box.half_x,
                          box.center.y - box.half_y, box.center.y + box.half_y};
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (taken[g]) {
        continue;
      }
      const double iou = rect_iou(det, gt[g].rect);
      if (iou >= iou_threshold && iou > best_iou) {
        best = static_cast<int>(g);
        best_iou = iou;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      box.matched_gt = gt[best].agent_id;
      matches.push_back(gt[best].agent_id);
    } else {
      box.matched_gt = std::nullopt;
      matches.push_back(std::nullopt);
    }
  }
  return matches;
}

}  // namespace vicsim
