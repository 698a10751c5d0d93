#include "eigenspine/evaluation.hpp"

#include <algorithm>
#include <unordered_map>

#include "eigenspine/error.hpp"
#include "eigenspine/polygon.hpp"

namespace eigenspine {
namespace {

struct Detection {
  std::size_t sample;
  std::size_t instance;
  double confidence;
};

class Matcher {
 public:
  Matcher(std::span<const SpineSample> pred, std::vector<const SpineSample*> ref)
      : pred_(pred), ref_(std::move(ref)) {
    for (const SpineSample* r : ref_) {
      std::vector<std::vector<Point>> polys;
      std::vector<geom::BoundingBox> boxes;
      for (const auto& v : r->instances) {
        polys.push_back(v.contour.points());
        boxes.push_back(geom::bounding_box(polys.back()));
      }
      ref_polys_.push_back(std::move(polys));
      ref_boxes_.push_back(std::move(boxes));
    }
  }

  std::size_t n_ref(std::size_t sample) const { return ref_polys_[sample].size(); }

  // Index of the best unmatched reference instance, or -1.
  long best(const Detection& d, const std::vector<char>& used) const {
    const auto pts = pred_[d.sample].instances[d.instance].contour.points();
    const geom::BoundingBox box = geom::bounding_box(pts);
    double best_iou = kMatchIou;
    long best_j = -1;
    for (std::size_t j = 0; j < ref_polys_[d.sample].size(); ++j) {
      if (used[j] || !box.overlaps(ref_boxes_[d.sample][j])) continue;
      const double iou = geom::polygon_iou(pts, ref_polys_[d.sample][j]);
      if (iou >= best_iou && (best_j < 0 || iou > best_iou)) {
        best_iou = iou;
        best_j = static_cast<long>(j);
      }
    }
    return best_j;
  }

 private:
  std::span<const SpineSample> pred_;
  std::vector<const SpineSample*> ref_;
  std::vector<std::vector<std::vector<Point>>> ref_polys_;
  std::vector<std::vector<geom::BoundingBox>> ref_boxes_;
};

bool by_confidence(const Detection& a, const Detection& b) { return a.confidence > b.confidence; }

}  // namespace

CobbReport cobb_report_or_zero(const SpineSample& s) {
  if (s.instances.size() < 2) return {};
  try {
    return cobb_report(s);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerateEdge) throw;
    return {};
  }
}

LabelMetrics evaluate_labels(std::span<const SpineSample> pred, std::span<const SpineSample> ref) {
  std::unordered_map<std::string, const SpineSample*> by_id;
  for (const auto& r : ref) by_id.emplace(r.sample_id, &r);
  std::vector<const SpineSample*> aligned;
  for (const auto& p : pred) {
    auto it = by_id.find(p.sample_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kIdMismatch, "sample '" + p.sample_id + "' missing from reference");
    }
    aligned.push_back(it->second);
  }
  LabelMetrics m;
  if (pred.empty()) return m;

  const Matcher matcher(pred, aligned);
  std::vector<Detection> all;
  std::size_t total_gt = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (std::size_t i = 0; i < pred[s].instances.size(); ++i) {
      all.push_back({s, i, pred[s].instances[i].confidence});
    }
    total_gt += matcher.n_ref(s);
  }
  std::stable_sort(all.begin(), all.end(), by_confidence);

  // Precision-recall sweep over the global ranking.
  std::vector<std::vector<char>> used(pred.size());
  for (std::size_t s = 0; s < pred.size(); ++s) used[s].assign(matcher.n_ref(s), 0);
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const long j = matcher.best(all[k], used[all[k].sample]);
    if (j >= 0) {
      used[all[k].sample][j] = 1;
      ++tp;
    }
    precision.push_back(static_cast<double>(tp) / (k + 1));
    recall.push_back(total_gt ? static_cast<double>(tp) / total_gt : 0.0);
  }
  if (total_gt > 0) {
    for (std::size_t k = precision.size(); k-- > 1;) {
      precision[k - 1] = std::max(precision[k - 1], precision[k]);
    }
    double ap = 0.0, prev_r = 0.0;
    for (std::size_t k = 0; k < precision.size(); ++k) {
      ap += (recall[k] - prev_r) * precision[k];
      prev_r = recall[k];
    }
    m.ap = 100.0 * ap;
  }

  double recall_sum = 0.0;
  std::size_t recall_n = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (matcher.n_ref(s) == 0) continue;
    std::vector<Detection> dets;
    for (std::size_t i = 0; i < pred[s].instances.size(); ++i) {
      dets.push_back({s, i, pred[s].instances[i].confidence});
    }
    std::stable_sort(dets.begin(), dets.end(), by_confidence);
    if (dets.size() > kRecallDetections) dets.resize(kRecallDetections);
    std::vector<char> taken(matcher.n_ref(s), 0);
    std::size_t hits = 0;
    for (const auto& d : dets) {
      const long j = matcher.best(d, taken);
      if (j >= 0) {
        taken[j] = 1;
        ++hits;
      }
    }
    recall_sum += static_cast<double>(hits) / matcher.n_ref(s);
    ++recall_n;
  }
  if (recall_n > 0) m.ar = 100.0 * recall_sum / recall_n;

  std::vector<double> pmax, gmax;
  double ed = 0.0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    const CobbReport p = cobb_report_or_zero(pred[s]);
    const CobbReport g = cobb_report_or_zero(*aligned[s]);
    pmax.push_back(p.max_deg);
    gmax.push_back(g.max_deg);
    ed += angle_ed(p, g);
  }
  m.smape = smape(pmax, gmax);
  m.ed = ed / pred.size();
  return m;
}

}  // namespace eigenspine
