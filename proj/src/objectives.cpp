#include "eigenspine/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigenspine/error.hpp"

namespace eigenspine {
namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

void check_label(int y) {
  if (y != 0 && y != 1) {
    throw Error(ErrorCode::kInvalidArgument, "label must be 0 or 1, got " + std::to_string(y));
  }
}

}  // namespace

void LossWeights::validate() const {
  const bool finite = std::isfinite(lambda_reg) && std::isfinite(lambda_cls) &&
                      std::isfinite(focal_gamma) && std::isfinite(focal_alpha);
  if (!finite || lambda_reg < 0 || lambda_cls < 0 || lambda_reg + lambda_cls <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be finite, non-negative, not both zero");
  }
  // alpha = 1 is allowed so focal can degenerate to plain cross-entropy.
  if (focal_gamma < 0 || focal_alpha <= 0 || focal_alpha > 1) {
    throw Error(ErrorCode::kInvalidArgument, "focal needs gamma >= 0 and alpha in (0, 1]");
  }
}

double smooth_l1_scalar(double x) {
  const double a = std::abs(x);
  return a < kSmoothL1Beta ? 0.5 * x * x / kSmoothL1Beta : a - 0.5 * kSmoothL1Beta;
}

double smooth_l1(const ContourVector& pred, const ContourVector& target) {
  if (pred.dim() != target.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "prediction has " + std::to_string(pred.dim()) + " coordinates, target " +
                    std::to_string(target.dim()));
  }
  double acc = 0.0;
  for (std::size_t d = 0; d < pred.dim(); ++d) acc += smooth_l1_scalar(pred[d] - target[d]);
  return acc;
}

double cross_entropy(double p, int y) {
  check_label(y);
  const double q = clamp_prob(p);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double focal(double p, int y, const LossWeights& weights) {
  check_label(y);
  const double q = clamp_prob(p);
  const double pt = y == 1 ? q : 1.0 - q;
  return -weights.focal_alpha * std::pow(1.0 - pt, weights.focal_gamma) * std::log(pt);
}

double total_loss(std::span<const RegressionTerm> reg_terms,
                  std::span<const ClassificationTerm> sr_terms,
                  std::span<const ClassificationTerm> ssr_terms,
                  const LossWeights& weights) {
  weights.validate();
  double reg = 0.0;
  for (const auto& t : reg_terms) {
    if (t.positive) reg += smooth_l1(t.pred, t.target);
  }
  double cls = 0.0;
  for (const auto& t : sr_terms) cls += cross_entropy(t.p, t.y);
  for (const auto& t : ssr_terms) cls += focal(t.p, t.y, weights);
  return weights.lambda_reg * reg + weights.lambda_cls * cls;
}

}  // namespace eigenspine
