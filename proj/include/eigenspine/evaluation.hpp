#pragma once

#include <span>

#include "eigenspine/cobb.hpp"

namespace eigenspine {

inline constexpr double kMatchIou = 0.5;
inline constexpr int kRecallDetections = 20;

/// cobb_report, or an all-zero report for fewer than two instances or a
/// degenerate endplate.
CobbReport cobb_report_or_zero(const SpineSample& sample);

struct LabelMetrics {
  double ap = 0.0;     // percent
  double ar = 0.0;     // percent
  double smape = 0.0;  // percent, on the max Cobb angle
  double ed = 0.0;     // mean angle_ed, degrees
};

/// Label quality of pred against ref, aligned by sample id. Detections from
/// all samples are ranked by confidence and greedily matched to the
/// unmatched reference instance of highest IoU (>= 0.5) in the same sample.
/// AP is the all-point interpolated area under the precision-recall curve.
/// AR is the mean per-sample recall over each sample's 20 most confident
/// detections. Cobb angles come from cobb_report_or_zero. Throws
/// kIdMismatch when a predicted id is missing from ref.
LabelMetrics evaluate_labels(std::span<const SpineSample> pred, std::span<const SpineSample> ref);

}  // namespace eigenspine
