#include "vicsim/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace vicsim {

double corr_miou(const Heatmap& pred, const Heatmap& gt, double tau) {
  if (!(pred.spec() == gt.spec())) {
    throw std::invalid_argument("corr_miou: grid specs differ");
  }
  return 100.0 * mask_iou(build_mask(pred, tau), build_mask(gt, tau));
}

double iou_error(const Heatmap& pred, const Heatmap& gt, double tau) {
  if (!(pred.spec() == gt.spec())) {
    throw std::invalid_argument("iou_error: grid specs differ");
  }
  const CellMask pm = build_mask(pred, tau);
  const CellMask gm = build_mask(gt, tau);
  std::size_t pred_cells = 0;
  std::size_t redundant = 0;
  const auto& p = pm.cells();
  const auto& g = gm.cells();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0) {
      ++pred_cells;
      redundant += (g[i] == 0);
    }
  }
  return 100.0 * static_cast<double>(redundant) /
         static_cast<double>(std::max<std::size_t>(pred_cells, 1));
}

double average_precision(std::vector<RankedDetection> detections, int n_gt) {
  if (n_gt <= 0) {
    throw std::invalid_argument("average_precision: need at least one ground truth");
  }
  std::stable_sort(detections.begin(), detections.end(),
                   [](const RankedDetection& a, const RankedDetection& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     return a.order < b.order;
                   });
  int tp_total = 0;
  for (const auto& d : detections) {
    tp_total += d.matched;
  }
  int credited = 0;
  if (!detections.empty() && detections.front().matched) {
    ++credited;  // the recall-zero level follows the top-ranked detection
  }
  for (int level = 1; level <= 10; ++level) {
    // recall >= level/10, evaluated in exact integer arithmetic
    if (static_cast<long long>(tp_total) * 10 >= static_cast<long long>(level) * n_gt) {
      ++credited;
    }
  }
  return static_cast<double>(credited) / 11.0;
}

double critical_recall(const std::vector<CriticalOutcome>& targets, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("critical_recall: threshold must be in (0, 1)");
  }
  int critical = 0;
  int matched = 0;
  for (const auto& t : targets) {
    if (t.relevance >= threshold) {
      ++critical;
      matched += t.matched;
    }
  }
  if (critical == 0) {
    return 1.0;
  }
  return static_cast<double>(matched) / static_cast<double>(critical);
}

}  // namespace vicsim
