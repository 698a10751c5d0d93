#pragma once

#include <span>

#include "eigenspine/contour.hpp"

// Scalar training-objective terms of the contour detector: coefficient
// regression (smooth-L1 over positive points) plus the dense cross-entropy
// and sparse focal classification losses. No gradients; these exist so the
// weighting and the loss identities can be checked in isolation.
namespace eigenspine {

struct LossWeights {
  double lambda_reg = 0.1;
  double lambda_cls = 1.0;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;

  /// Throws kInvalidArgument on non-finite or out-of-range fields.
  void validate() const;
};

/// Residual magnitude where smooth-L1 switches from quadratic to linear.
inline constexpr double kSmoothL1Beta = 1.0;
/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;

double smooth_l1(const ContourVector& pred, const ContourVector& target);
double smooth_l1_scalar(double residual);

double cross_entropy(double p, int y);
double focal(double p, int y, const LossWeights& weights);

struct RegressionTerm {
  ContourVector pred;
  ContourVector target;
  bool positive = false;
};

struct ClassificationTerm {
  double p = 0.5;
  int y = 0;
};

/// lambda_reg * sum_{positive} smooth_l1 + lambda_cls * (sum CE(sr) + sum focal(ssr))
double total_loss(std::span<const RegressionTerm> reg_terms,
                  std::span<const ClassificationTerm> sr_terms,
                  std::span<const ClassificationTerm> ssr_terms,
                  const LossWeights& weights);

}  // namespace eigenspine
