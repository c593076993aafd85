#pragma once

#include <cstdint>
#include <vector>

#include "vicsim/comm.hpp"
#include "vicsim/grid.hpp"

namespace vicsim {

// Overlap quality of the thresholded prediction against the thresholded
// ground truth, as a percentage.
double corr_miou(const Heatmap& pred, const Heatmap& gt, double tau);

// Redundancy: the percentage of the predicted mask that lies outside the
// ground-truth mask, normalized by the predicted area.
double iou_error(const Heatmap& pred, const Heatmap& gt, double tau);

struct RankedDetection {
  double confidence{0.0};
  bool matched{false};
  std::uint64_t order{0};  // deterministic tiebreak for equal confidences
};

// Eleven-point detection-ranking score over recall levels 0, 0.1, ..., 1.0.
// Level 0 is credited when the top-ranked detection is a true positive; each
// higher level is credited when the ranked stream attains that recall (the
// detection first attaining a level is necessarily a true positive). Depends
// only on the confidence ranking, so it is invariant to any strictly
// increasing rescaling of confidences.
double average_precision(std::vector<RankedDetection> detections, int n_gt);

struct CriticalOutcome {
  double relevance{0.0};
  bool matched{false};
};

// Fraction of targets at or above the relevance threshold that were matched
// by some detection; defined as 1 when no target is critical.
double critical_recall(const std::vector<CriticalOutcome>& targets, double threshold);

struct FrameStats {
  int scenario_index{0};
  int frame{0};
  double corr_miou{0.0};
  double iou_error{0.0};
  int gt_count{0};
  int detection_count{0};
  int matched_count{0};
  int critical_total{0};
  int critical_matched{0};
  CommStats comm;
};

struct EvalReport {
  double corr_miou{0.0};        // percent, mean over frames
  double iou_error{0.0};        // percent, mean over frames
  double ap{0.0};               // pooled over the whole run
  double critical_recall{1.0};  // pooled over the whole run
  CommStats comm;               // sums over frames
  std::vector<FrameStats> frames;
};

}  // namespace vicsim
