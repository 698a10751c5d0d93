#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eigenspine/cobb.hpp"
#include "eigenspine/image.hpp"
#include "eigenspine/similarity.hpp"

namespace eigenspine {

enum class Reason {
  kLowArea,
  kIllegalCoords,
  kInvalidContour,
  kTooFewInstances,
  kCenterOutlier,
  kManualReject,
  kPrivacy,
};

/// LOW_AREA, ILLEGAL_COORDS, ...
std::string to_string(Reason reason);
Reason reason_from_string(const std::string& name);

enum class SelectionMode { kNoFilter, kIndependent, kCumulative };

std::string to_string(SelectionMode mode);
SelectionMode selection_mode_from_string(const std::string& name);

struct EngineConfig {
  double tau_c = 0.3;
  double min_area_px2 = 200.0;
  int min_instances = 10;
  double center_dist_factor = 3.0;
  SelectionMode selection_mode = SelectionMode::kCumulative;
  SimilarityConfig similarity;
  int max_iterations = 10;
  /// Block an iteration while review items are pending instead of treating
  /// them as rejected for now.
  bool strict_review = false;

  void validate() const;
};

/// Keeps instances with confidence >= tau_c.
std::vector<VertebraInstance> confidence_filter(std::span<const VertebraInstance> predictions,
                                                double tau_c);

// The three per-instance checks. Each is independent of the others, so the
// kept set does not depend on the order they are applied in.
bool passes_area(const ContourVector& contour, double min_area_px2);
bool passes_bounds(const ContourVector& contour, ImageSize size);
/// Simple polygon with nonzero area.
bool passes_validity(const ContourVector& contour);

/// Failing checks in a fixed order: ILLEGAL_COORDS, INVALID_CONTOUR, LOW_AREA.
std::vector<Reason> segment_reasons(const ContourVector& contour, ImageSize size,
                                    double min_area_px2);

struct RejectedInstance {
  VertebraInstance instance;
  std::vector<Reason> reasons;
};

struct SegmentFilterResult {
  std::vector<VertebraInstance> kept;
  std::vector<RejectedInstance> rejected;
};

SegmentFilterResult segment_filters(std::span<const VertebraInstance> instances, ImageSize size,
                                    const EngineConfig& config);

/// Distances between consecutive vertebra centroids, ordered by centroid y.
std::vector<double> center_gaps(const SpineSample& sample);

struct CorpusStats {
  double mean_center_gap = 0.0;
  std::size_t n_gaps = 0;
};

/// Pooled mean of the consecutive-centroid gaps of every sample.
CorpusStats corpus_stats(std::span<const SpineSample> samples);

struct SampleVerdict {
  bool accepted = true;
  std::vector<Reason> reasons;
};

/// TOO_FEW_INSTANCES below min_instances; CENTER_OUTLIER when any gap
/// exceeds center_dist_factor times the corpus mean. Throws kMissingStats
/// when stats are absent or hold no gaps.
SampleVerdict sample_filters(const SpineSample& sample, const std::optional<CorpusStats>& stats,
                             const EngineConfig& config);

}  // namespace eigenspine
