#include "eigenspine/filters.hpp"

#include <algorithm>
#include <cmath>

#include "eigenspine/error.hpp"
#include "eigenspine/polygon.hpp"

namespace eigenspine {

std::string to_string(Reason reason) {
  switch (reason) {
    case Reason::kLowArea: return "LOW_AREA";
    case Reason::kIllegalCoords: return "ILLEGAL_COORDS";
    case Reason::kInvalidContour: return "INVALID_CONTOUR";
    case Reason::kTooFewInstances: return "TOO_FEW_INSTANCES";
    case Reason::kCenterOutlier: return "CENTER_OUTLIER";
    case Reason::kManualReject: return "MANUAL_REJECT";
    case Reason::kPrivacy: return "PRIVACY";
  }
  return "UNKNOWN";
}

Reason reason_from_string(const std::string& name) {
  for (Reason r : {Reason::kLowArea, Reason::kIllegalCoords, Reason::kInvalidContour,
                   Reason::kTooFewInstances, Reason::kCenterOutlier, Reason::kManualReject,
                   Reason::kPrivacy}) {
    if (to_string(r) == name) return r;
  }
  throw Error(ErrorCode::kParse, "unknown rejection reason '" + name + "'");
}

std::string to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::kNoFilter: return "no_filter";
    case SelectionMode::kIndependent: return "independent";
    case SelectionMode::kCumulative: return "cumulative";
  }
  return "cumulative";
}

SelectionMode selection_mode_from_string(const std::string& name) {
  if (name == "no_filter") return SelectionMode::kNoFilter;
  if (name == "independent") return SelectionMode::kIndependent;
  if (name == "cumulative") return SelectionMode::kCumulative;
  throw Error(ErrorCode::kInvalidArgument,
              "selection mode must be no_filter, independent or cumulative, got '" + name + "'");
}

void EngineConfig::validate() const {
  if (!(tau_c >= 0 && tau_c <= 1)) throw Error(ErrorCode::kInvalidArgument, "tau_c must lie in [0, 1]");
  if (!(min_area_px2 > 0)) throw Error(ErrorCode::kInvalidArgument, "min_area_px2 must be positive");
  if (min_instances < 1) throw Error(ErrorCode::kInvalidArgument, "min_instances must be >= 1");
  if (!(center_dist_factor > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "center_dist_factor must be positive");
  }
  if (max_iterations < 0) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 0");
  similarity.validate();
}

std::vector<VertebraInstance> confidence_filter(std::span<const VertebraInstance> predictions,
                                                double tau_c) {
  std::vector<VertebraInstance> kept;
  for (const auto& p : predictions) {
    if (p.confidence >= tau_c) kept.push_back(p);
  }
  return kept;
}

bool passes_area(const ContourVector& contour, double min_area_px2) {
  return geom::area(contour.points()) >= min_area_px2;
}

bool passes_bounds(const ContourVector& contour, ImageSize size) {
  for (std::size_t i = 0; i < contour.n_vertices(); ++i) {
    const Point p = contour.vertex(i);
    if (!(p.x >= 0 && p.x < size.width && p.y >= 0 && p.y < size.height)) return false;
  }
  return true;
}

bool passes_validity(const ContourVector& contour) {
  const auto pts = contour.points();
  return pts.size() >= 3 && geom::is_simple(pts) && geom::area(pts) > 0;
}

std::vector<Reason> segment_reasons(const ContourVector& contour, ImageSize size,
                                    double min_area_px2) {
  std::vector<Reason> reasons;
  if (!passes_bounds(contour, size)) reasons.push_back(Reason::kIllegalCoords);
  if (!passes_validity(contour)) reasons.push_back(Reason::kInvalidContour);
  if (!passes_area(contour, min_area_px2)) reasons.push_back(Reason::kLowArea);
  return reasons;
}

SegmentFilterResult segment_filters(std::span<const VertebraInstance> instances, ImageSize size,
                                    const EngineConfig& config) {
  SegmentFilterResult out;
  for (const auto& inst : instances) {
    auto reasons = segment_reasons(inst.contour, size, config.min_area_px2);
    if (reasons.empty()) {
      out.kept.push_back(inst);
    } else {
      out.rejected.push_back({inst, std::move(reasons)});
    }
  }
  return out;
}

std::vector<double> center_gaps(const SpineSample& sample) {
  std::vector<Point> centers;
  for (const auto& inst : sample.instances) centers.push_back(geom::centroid(inst.contour));
  std::stable_sort(centers.begin(), centers.end(),
                   [](const Point& a, const Point& b) { return a.y < b.y; });
  std::vector<double> gaps;
  for (std::size_t i = 1; i < centers.size(); ++i) {
    gaps.push_back(std::hypot(centers[i].x - centers[i - 1].x, centers[i].y - centers[i - 1].y));
  }
  return gaps;
}

CorpusStats corpus_stats(std::span<const SpineSample> samples) {
  CorpusStats stats;
  double sum = 0.0;
  for (const auto& s : samples) {
    for (double g : center_gaps(s)) {
      sum += g;
      ++stats.n_gaps;
    }
  }
  if (stats.n_gaps > 0) stats.mean_center_gap = sum / stats.n_gaps;
  return stats;
}

SampleVerdict sample_filters(const SpineSample& sample, const std::optional<CorpusStats>& stats,
                             const EngineConfig& config) {
  if (!stats || stats->n_gaps == 0 || !(stats->mean_center_gap > 0)) {
    throw Error(ErrorCode::kMissingStats, "corpus center-gap statistics are unavailable");
  }
  SampleVerdict v;
  if (static_cast<int>(sample.instances.size()) < config.min_instances) {
    v.reasons.push_back(Reason::kTooFewInstances);
  }
  const double limit = config.center_dist_factor * stats->mean_center_gap;
  for (double g : center_gaps(sample)) {
    if (g > limit) {
      v.reasons.push_back(Reason::kCenterOutlier);
      break;
    }
  }
  v.accepted = v.reasons.empty();
  return v;
}

}  // namespace eigenspine
