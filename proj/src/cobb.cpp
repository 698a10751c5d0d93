#include "eigenspine/cobb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "eigenspine/error.hpp"
#include "eigenspine/polygon.hpp"

namespace eigenspine {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

// Total-least-squares direction of a point run, as an angle in (-90, 90].
double tls_angle(std::span<const Point> pts) {
  double mx = 0.0, my = 0.0;
  for (const Point& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= pts.size();
  my /= pts.size();
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const Point& p : pts) {
    const double dx = p.x - mx;
    const double dy = p.y - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx + syy <= 1e-18) {
    throw Error(ErrorCode::kDegenerateEdge, "endplate vertices coincide");
  }
  // Major axis of the 2x2 scatter matrix.
  double deg = 0.5 * std::atan2(2.0 * sxy, sxx - syy) * kRadToDeg;
  if (deg <= -90.0) deg += 180.0;
  if (deg > 90.0) deg -= 180.0;
  return deg;
}

struct RegionMax {
  double deg = 0.0;
  VertebraPair pair;
};

// Pixel-snapped contours produce exactly tied angles; rounding noise from a
// rigid transform must not reorder them, so near-equal counts as a tie.
constexpr double kTieToleranceDeg = 1e-9;

RegionMax search(std::span<const EndplateAngles> tilts, int first, int last) {
  RegionMax best{0.0, {first, first}};
  bool found = false;
  for (int i = first; i <= last; ++i) {
    for (int j = i; j <= last; ++j) {
      const double d = line_angle_difference(tilts[i].upper_deg, tilts[j].lower_deg);
      if (!found || d > best.deg + kTieToleranceDeg) {
        best = {d, {i, j}};
        found = true;
      }
    }
  }
  return best;
}

}  // namespace

void sort_instances(SpineSample& sample) {
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(sample.instances.size());
  for (std::size_t i = 0; i < sample.instances.size(); ++i) {
    keys.emplace_back(geom::centroid(sample.instances[i].contour).y, i);
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<VertebraInstance> sorted;
  sorted.reserve(keys.size());
  for (const auto& [y, i] : keys) sorted.push_back(std::move(sample.instances[i]));
  for (std::size_t i = 0; i < sorted.size(); ++i) sorted[i].index = static_cast<int>(i);
  sample.instances = std::move(sorted);
}

EndplateAngles endplate_angles(const ContourVector& contour) {
  const std::size_t n = contour.n_vertices();
  if (n < 4) {
    throw Error(ErrorCode::kInvalidArgument,
                "endplate extraction needs at least 4 vertices, got " + std::to_string(n));
  }
  const std::size_t run = (n + 3) / 4 + 1;  // ceil(N/4) + 1
  const std::size_t lower_start = n / 2;
  std::vector<Point> upper, lower;
  upper.reserve(run);
  lower.reserve(run);
  for (std::size_t k = 0; k < run; ++k) {
    upper.push_back(contour.vertex(k % n));
    lower.push_back(contour.vertex((lower_start + k) % n));
  }
  return {tls_angle(upper), tls_angle(lower)};
}

EndplateAngles endplate_angles(const VertebraInstance& v) {
  return endplate_angles(v.contour);
}

double line_angle_difference(double a_deg, double b_deg) {
  const double d = std::fmod(std::abs(a_deg - b_deg), 180.0);
  return std::min(d, 180.0 - d);
}

CobbReport cobb_report_from_tilts(std::span<const EndplateAngles> tilts) {
  if (tilts.size() < 2) {
    throw Error(ErrorCode::kTooFewInstances,
                "Cobb measurement needs at least 2 vertebrae, got " +
                    std::to_string(tilts.size()));
  }
  const int last = static_cast<int>(tilts.size()) - 1;
  const RegionMax mt = search(tilts, 0, last);
  const RegionMax pt = search(tilts, 0, mt.pair.upper);
  const RegionMax tll = search(tilts, mt.pair.lower, last);

  CobbReport r;
  r.mt_deg = mt.deg;
  r.mt_pair = mt.pair;
  r.pt_deg = pt.deg;
  r.pt_pair = pt.pair;
  r.tll_deg = tll.deg;
  r.tll_pair = tll.pair;
  r.max_deg = std::max({r.pt_deg, r.mt_deg, r.tll_deg});
  return r;
}

CobbReport cobb_report(const SpineSample& sample) {
  if (sample.instances.size() < 2) {
    throw Error(ErrorCode::kTooFewInstances,
                "sample '" + sample.sample_id + "' has " +
                    std::to_string(sample.instances.size()) + " instances");
  }
  std::vector<EndplateAngles> tilts;
  tilts.reserve(sample.instances.size());
  for (const auto& v : sample.instances) tilts.push_back(endplate_angles(v));
  return cobb_report_from_tilts(tilts);
}

double smape(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(pred.size()) + " predictions vs " +
                    std::to_string(gt.size()) + " references");
  }
  if (pred.empty()) throw Error(ErrorCode::kEmptyInput, "smape of empty lists");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double denom = std::abs(pred[i]) + std::abs(gt[i]);
    if (denom > 0.0) acc += std::abs(pred[i] - gt[i]) / denom;
  }
  return 100.0 * acc / static_cast<double>(pred.size());
}

double angle_ed(const CobbReport& pred, const CobbReport& gt) {
  const double dp = pred.pt_deg - gt.pt_deg;
  const double dm = pred.mt_deg - gt.mt_deg;
  const double dt = pred.tll_deg - gt.tll_deg;
  return std::sqrt(dp * dp + dm * dm + dt * dt);
}

void to_json(nlohmann::json& j, const CobbReport& r) {
  auto pair = [](const VertebraPair& p) { return nlohmann::json::array({p.upper, p.lower}); };
  j = nlohmann::json{
      {"pt", r.pt_deg},
      {"mt", r.mt_deg},
      {"tll", r.tll_deg},
      {"max", r.max_deg},
      {"pairs", {{"pt", pair(r.pt_pair)}, {"mt", pair(r.mt_pair)}, {"tll", pair(r.tll_pair)}}},
  };
}

void from_json(const nlohmann::json& j, CobbReport& r) {
  r.pt_deg = j.at("pt").get<double>();
  r.mt_deg = j.at("mt").get<double>();
  r.tll_deg = j.at("tll").get<double>();
  r.max_deg = j.at("max").get<double>();
  if (j.contains("pairs")) {
    const auto& p = j.at("pairs");
    auto read = [&](const char* key, VertebraPair& out) {
      if (!p.contains(key)) return;
      out.upper = p.at(key).at(0).get<int>();
      out.lower = p.at(key).at(1).get<int>();
    };
    read("pt", r.pt_pair);
    read("mt", r.mt_pair);
    read("tll", r.tll_pair);
  }
}

std::string format_report(const CobbReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "PT %.2f (%d-%d)  MT %.2f (%d-%d)  TL/L %.2f (%d-%d)  max %.2f",
                r.pt_deg, r.pt_pair.upper, r.pt_pair.lower, r.mt_deg, r.mt_pair.upper,
                r.mt_pair.lower, r.tll_deg, r.tll_pair.upper, r.tll_pair.lower, r.max_deg);
  return buf;
}

}  // namespace eigenspine
