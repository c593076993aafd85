#include "vicsim/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vicsim {

const char* to_string(LossVariant v) {
  switch (v) {
    case LossVariant::RescaleFocal:
      return "rescale_focal";
    case LossVariant::Focal:
      return "focal";
    case LossVariant::L1:
      return "l1";
    case LossVariant::L2:
      return "l2";
  }
  return "rescale_focal";
}

LossVariant loss_variant_from_string(const std::string& s) {
  if (s == "rescale_focal") return LossVariant::RescaleFocal;
  if (s == "focal") return LossVariant::Focal;
  if (s == "l1") return LossVariant::L1;
  if (s == "l2") return LossVariant::L2;
  throw std::invalid_argument("unknown loss variant '" + s + "'");
}

void LossParams::validate() const {
  if (gamma1 < 0.0 || gamma2 < 0.0) {
    throw std::invalid_argument("LossParams: exponents must be non-negative");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw std::invalid_argument("LossParams: epsilon must be in (0, 0.5)");
  }
}

namespace {

void check_inputs(double x, double gt) {
  if (!(x >= 0.0 && x <= 1.0) || !(gt >= 0.0 && gt <= 1.0)) {
    throw std::invalid_argument("loss: prediction and target must be in [0, 1]");
  }
}

double clamp_eps(double v, double eps) { return std::clamp(v, eps, 1.0 - eps); }

}  // namespace

double loss_value(double x, double gt, const LossParams& params) {
  params.validate();
  check_inputs(x, gt);
  switch (params.variant) {
    case LossVariant::L1:
      return std::abs(x - gt);
    case LossVariant::L2:
      return (x - gt) * (x - gt);
    case LossVariant::Focal: {
      const double xc = clamp_eps(x, params.epsilon);
      if (gt >= 0.5) {
        return params.alpha_under * std::pow(1.0 - xc, params.gamma1) * (-std::log(xc));
      }
      return params.alpha_over * std::pow(xc, params.gamma1) * (-std::log(1.0 - xc));
    }
    case LossVariant::RescaleFocal: {
      const double xc = clamp_eps(x, params.epsilon);
      const double gc = clamp_eps(gt, params.epsilon);
      if (xc == gc) {
        return 0.0;
      }
      if (xc < gc) {
        const double u = xc / gc;
        return params.alpha_under * std::pow(1.0 - u, params.gamma1) * (-std::log(u));
      }
      const double v = (1.0 - xc) / (1.0 - gc);
      return params.alpha_over * std::pow(1.0 - v, params.gamma2) * (-std::log(v));
    }
  }
  return 0.0;
}

double loss_grad(double x, double gt, const LossParams& params) {
  params.validate();
  check_inputs(x, gt);
  switch (params.variant) {
    case LossVariant::L1:
      return x == gt ? 0.0 : (x > gt ? 1.0 : -1.0);
    case LossVariant::L2:
      return 2.0 * (x - gt);
    case LossVariant::Focal: {
      const double xc = clamp_eps(x, params.epsilon);
      if (xc != x) {
        return 0.0;  // clamp region is flat in x
      }
      const double gc = clamp_eps(gt, params.epsilon);
      if (xc == gc) {
        return 0.0;
      }
      if (gt >= 0.5) {
        const double om = 1.0 - xc;
        return params.alpha_under * (params.gamma1 * std::pow(om, params.gamma1 - 1.0) *
                                         std::log(xc) -
                                     std::pow(om, params.gamma1) / xc);
      }
      return params.alpha_over *
             (std::pow(xc, params.gamma1) / (1.0 - xc) -
              params.gamma1 * std::pow(xc, params.gamma1 - 1.0) * std::log(1.0 - xc));
    }
    case LossVariant::RescaleFocal: {
      const double xc = clamp_eps(x, params.epsilon);
      if (xc != x) {
        return 0.0;
      }
      const double gc = clamp_eps(gt, params.epsilon);
      if (xc == gc) {
        return 0.0;
      }
      if (xc < gc) {
        const double u = xc / gc;
        const double om = 1.0 - u;
        const double inner = params.gamma1 * std::pow(om, params.gamma1 - 1.0) *
                                 (-std::log(u)) +
                             std::pow(om, params.gamma1) / u;
        return -params.alpha_under * inner / gc;
      }
      const double v = (1.0 - xc) / (1.0 - gc);
      const double om = 1.0 - v;
      const double inner = params.gamma2 * std::pow(om, params.gamma2 - 1.0) *
                               (-std::log(v)) +
                           std::pow(om, params.gamma2) / v;
      return params.alpha_over * inner / (1.0 - gc);
    }
  }
  return 0.0;
}

double batch_loss(const Heatmap& pred, const Heatmap& gt, const LossParams& params) {
  if (!(pred.spec() == gt.spec())) {
    throw std::invalid_argument("batch_loss: grid specs differ");
  }
  if (pred.size() == 0) {
    throw std::invalid_argument("batch_loss: empty grids");
  }
  double sum = 0.0;
  const auto& p = pred.cells();
  const auto& g = gt.cells();
  for (std::size_t i = 0; i < p.size(); ++i) {
    sum += loss_value(p[i], g[i], params);
  }
  return sum / static_cast<double>(p.size());
}

}  // namespace vicsim
