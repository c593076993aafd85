#pragma once

#include "vicsim/grid.hpp"

namespace vicsim {

enum class LossVariant { RescaleFocal, Focal, L1, L2 };

const char* to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);

// Heatmap regression loss configuration. The rescale-focal variant weights
// the error by how far the prediction/target ratio has fallen from 1, with
// separate branches (and weights) for under- and over-estimation. Targets
// and predictions are clamped to [epsilon, 1-epsilon] so targets of exactly
// 0 or 1 stay inside the ratio's domain.
struct LossParams {
  double alpha_under{1.0};
  double alpha_over{1.0};
  double gamma1{2.0};
  double gamma2{2.0};
  double epsilon{1e-4};
  LossVariant variant{LossVariant::RescaleFocal};

  void validate() const;
};

// Per-cell loss. Natural logarithm throughout. At the branch boundary
// (clamped prediction equal to clamped target) the rescale-focal loss is 0.
double loss_value(double x, double gt, const LossParams& params);

// Closed-form d(loss)/dx of the active branch; defined as 0 at the branch
// boundary for every variant (both one-sided limits vanish there for the
// rescale-focal branches).
double loss_grad(double x, double gt, const LossParams& params);

// Arithmetic mean of per-cell losses, accumulated in row-major order so the
// result is bit-reproducible.
double batch_loss(const Heatmap& pred, const Heatmap& gt, const LossParams& params);

}  // namespace vicsim
