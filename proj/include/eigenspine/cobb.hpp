#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eigenspine/contour.hpp"

namespace eigenspine {

struct VertebraInstance {
  ContourVector contour;
  double confidence = 1.0;
  int index = 0;  // position from the top of the spine, 0-based
};

/// One image's annotation. Instances are kept sorted top-to-bottom by
/// contour centroid y; use sort_instances() after editing the list.
struct SpineSample {
  std::string sample_id;
  std::optional<std::string> image_ref;
  std::vector<VertebraInstance> instances;
};

/// Stable sort by centroid y, then renumber index fields.
void sort_instances(SpineSample& sample);

struct VertebraPair {
  int upper = 0;
  int lower = 0;
  bool operator==(const VertebraPair&) const = default;
};

/// Regional Cobb angles in degrees, each in [0, 90].
struct CobbReport {
  double pt_deg = 0.0;
  double mt_deg = 0.0;
  double tll_deg = 0.0;
  double max_deg = 0.0;
  VertebraPair pt_pair;
  VertebraPair mt_pair;
  VertebraPair tll_pair;
};

struct EndplateAngles {
  double upper_deg = 0.0;
  double lower_deg = 0.0;
};

/// Tilt of the upper and lower endplates relative to the image horizontal,
/// in (-90, 90]. Each endplate is the total-least-squares line through a
/// contiguous vertex run of the canonical ordering (see ContourVector).
/// Throws kInvalidArgument for N < 4 and kDegenerateEdge when the vertices of
/// an edge coincide.
EndplateAngles endplate_angles(const ContourVector& contour);
EndplateAngles endplate_angles(const VertebraInstance& v);

/// Angle between two line directions, folded by 180 degree periodicity into
/// [0, 90].
double line_angle_difference(double a_deg, double b_deg);

/// MT is the largest |upper(i) - lower(j)| over i <= j. PT repeats the search
/// over vertebrae at or above MT's upper vertebra, TL/L over vertebrae at or
/// below MT's lower vertebra. Throws kTooFewInstances for fewer than two
/// instances.
CobbReport cobb_report(const SpineSample& sample);

/// Same search on precomputed per-vertebra endplate tilts (top to bottom).
CobbReport cobb_report_from_tilts(std::span<const EndplateAngles> tilts);

/// Symmetric mean absolute percentage error, in percent. Terms where both
/// values are zero contribute 0.
double smape(std::span<const double> pred, std::span<const double> gt);

/// Euclidean distance over the (PT, MT, TL/L) angles, degrees.
double angle_ed(const CobbReport& pred, const CobbReport& gt);

void to_json(nlohmann::json& j, const CobbReport& report);
void from_json(const nlohmann::json& j, CobbReport& report);

/// Human-facing one-liner with angles rounded to two decimals.
std::string format_report(const CobbReport& report);

}  // namespace eigenspine
