#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vicsim/grid.hpp"
#include "vicsim/loss.hpp"
#include "vicsim/ptcm.hpp"
#include "vicsim/scenario.hpp"

namespace vicsim {

// Rasterized motion description of one frame: instance segmentation,
// centerness, offsets to instance centers, per-instance flow to the next
// frame, and a constant plane encoding the ego intent.
struct MotionFeatureStack {
  Grid<double> seg;     // {0,1}
  Grid<double> cen;     // [0,1], exactly 1 at instance-center cells
  Grid<double> off_x;   // cell units, toward instance center
  Grid<double> off_y;
  Grid<double> flow_x;  // cell units, center displacement to the next frame
  Grid<double> flow_y;
  Grid<double> intent;  // constant plane

  const GridSpec& spec() const { return seg.spec(); }
  std::array<const Grid<double>*, 7> planes() const {
    return {&seg, &cen, &off_x, &off_y, &flow_x, &flow_y, &intent};
  }
};

// Needs frame+1 for the flow plane. Agents are processed in id order.
MotionFeatureStack rasterize_motion_features(const Scenario& scenario, int frame,
                                             const GridSpec& spec, DrivingIntent intent);

// Relevance heatmap used as supervision: each reported target splats its
// relevance over its footprint at `frame` and at its next n_future waypoint
// positions; outside a footprint the value falls off as a Gaussian (sigma of
// one cell) of the distance to the footprint boundary. Cells combine by max
// across splats and targets.
Heatmap render_gt_heatmap(const Scenario& scenario, int frame,
                          const std::vector<RelevanceReport>& relevances,
                          const GridSpec& spec, int n_future = 6);

// Fixed two-layer 3x3 convolution stack: 7 input planes -> 8 hidden planes
// (rectifier) -> 1 output plane (logistic). Weights live in one flat vector
// so training and serialization stay trivial.
class HeatmapPredictor {
 public:
  static constexpr int kInPlanes = 7;
  static constexpr int kHiddenPlanes = 8;
  static constexpr int kKernel = 3;

  HeatmapPredictor();

  static HeatmapPredictor random_init(std::uint64_t seed);
  static std::size_t parameter_count();

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // Deterministic forward pass; outputs lie strictly inside (0, 1).
  Heatmap forward(const MotionFeatureStack& feats) const;

  // Mean per-cell loss against `target` and, when grad is non-null, the
  // gradient with respect to every weight (accumulated into *grad).
  double loss_and_gradient(const MotionFeatureStack& feats, const Heatmap& target,
                           const LossParams& loss_cfg, std::vector<double>* grad) const;

 private:
  std::vector<double> weights_;
};

Heatmap predict_heatmap(const HeatmapPredictor& model, const MotionFeatureStack& feats);

struct TrainingSample {
  MotionFeatureStack features;
  Heatmap target;
};

struct TrainResult {
  HeatmapPredictor model;
  std::vector<double> loss_trace;  // one entry per iteration, before the update
};

// Largest relative disagreement between analytic and central-difference
// gradients over n_probes randomly chosen parameters.
double gradient_check(const HeatmapPredictor& model, const TrainingSample& sample,
                      const LossParams& loss_cfg, std::uint64_t seed, int n_probes);

// Full-batch gradient descent with a fixed step of 0.05 and no momentum.
// Runs the gradient check on the first sample before the first update and
// refuses to start if it disagrees beyond 1e-4. Single-threaded on purpose:
// traces must be bit-reproducible.
TrainResult train_predictor(const std::vector<TrainingSample>& dataset,
                            const LossParams& loss_cfg, int iters, std::uint64_t seed);

// Deterministic synthetic batch on a 32x32 grid (same cell size as the
// default spec), used by the training CLI and tests.
std::vector<TrainingSample> make_synthetic_batch(std::uint64_t seed, int count);
GridSpec synthetic_batch_spec();

// Flat little-endian 32-bit float file with a 16-byte header
// (magic "IDAPMWT1", u16 version, u16 in/hidden/out plane counts).
void save_predictor(const HeatmapPredictor& model, const std::string& path);
HeatmapPredictor load_predictor(const std::string& path);

}  // namespace vicsim
