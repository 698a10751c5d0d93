#include "eigenspine/review.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "eigenspine/annotation.hpp"
#include "eigenspine/error.hpp"

namespace eigenspine {

using nlohmann::json;

std::string to_string(ReviewStatus status) {
  switch (status) {
    case ReviewStatus::kPending: return "pending";
    case ReviewStatus::kApproved: return "approved";
    case ReviewStatus::kRejected: return "rejected";
    case ReviewStatus::kCorrected: return "corrected";
  }
  return "pending";
}

namespace {

ReviewStatus status_from_string(const std::string& s) {
  for (auto st : {ReviewStatus::kPending, ReviewStatus::kApproved, ReviewStatus::kRejected,
                  ReviewStatus::kCorrected}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::kParse, "unknown review status '" + s + "'");
}

json contour_json(const ContourVector& c) {
  json out = json::array();
  for (const Point& p : c.points()) out.push_back({p.x, p.y});
  return out;
}

ContourVector contour_from(const json& j) {
  std::vector<double> coords;
  for (const json& p : j) {
    coords.push_back(p.at(0).get<double>());
    coords.push_back(p.at(1).get<double>());
  }
  return ContourVector(std::move(coords));
}

}  // namespace

std::string to_string(ReviewFlag flag) {
  switch (flag) {
    case ReviewFlag::kNonRealistic: return "NON_REALISTIC";
    case ReviewFlag::kSpinalFracture: return "SPINAL_FRACTURE";
    case ReviewFlag::kUnclear: return "UNCLEAR";
  }
  return "UNCLEAR";
}

ReviewFlag review_flag_from_string(const std::string& name) {
  for (auto f : {ReviewFlag::kNonRealistic, ReviewFlag::kSpinalFracture, ReviewFlag::kUnclear}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::kValidation, "unknown flag '" + name + "'");
}

ReviewAction review_action_from_string(const std::string& name) {
  if (name == "approve") return ReviewAction::kApprove;
  if (name == "reject") return ReviewAction::kReject;
  if (name == "correct") return ReviewAction::kCorrect;
  if (name == "flag") return ReviewAction::kFlag;
  throw Error(ErrorCode::kValidation, "unknown action '" + name + "'");
}

void to_json(json& j, const ReviewItem& item) {
  json reasons = json::array();
  for (Reason r : item.reasons) reasons.push_back(to_string(r));
  json instances = json::array();
  for (const auto& v : item.instances) {
    instances.push_back({{"contour", contour_json(v.contour)}, {"confidence", v.confidence}});
  }
  json flags = json::array();
  for (ReviewFlag f : item.flags) flags.push_back(to_string(f));
  json corrected = json::array();
  for (const auto& c : item.corrected) corrected.push_back(contour_json(c));
  j = json{{"sample_id", item.sample_id},
           {"image", item.image},
           {"width", item.image_size.width},
           {"height", item.image_size.height},
           {"iteration", item.iteration},
           {"reasons", std::move(reasons)},
           {"instances", std::move(instances)},
           {"flags", std::move(flags)},
           {"status", to_string(item.status)},
           {"corrected", std::move(corrected)}};
}

void from_json(const json& j, ReviewItem& item) {
  item.sample_id = j.at("sample_id").get<std::string>();
  item.image = j.value("image", std::string());
  item.image_size = {j.at("width").get<int>(), j.at("height").get<int>()};
  item.iteration = j.value("iteration", 0);
  item.reasons.clear();
  for (const json& r : j.value("reasons", json::array())) {
    item.reasons.push_back(reason_from_string(r.get<std::string>()));
  }
  item.instances.clear();
  for (const json& v : j.value("instances", json::array())) {
    item.instances.push_back({contour_from(v.at("contour")), v.value("confidence", 1.0), 0});
  }
  item.flags.clear();
  for (const json& f : j.value("flags", json::array())) {
    item.flags.push_back(review_flag_from_string(f.get<std::string>()));
  }
  item.status = status_from_string(j.value("status", std::string("pending")));
  item.corrected.clear();
  for (const json& c : j.value("corrected", json::array())) item.corrected.push_back(contour_from(c));
}

ReviewQueue::ReviewQueue(const ReviewQueue& other) : min_area_px2_(other.min_area_px2_) {
  std::lock_guard lock(other.mutex_);
  items_ = other.items_;
}

ReviewQueue& ReviewQueue::operator=(const ReviewQueue& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_, other.mutex_);
  min_area_px2_ = other.min_area_px2_;
  items_ = other.items_;
  return *this;
}

bool ReviewQueue::enqueue(ReviewItem item) {
  std::lock_guard lock(mutex_);
  const std::string id = item.sample_id;
  return items_.emplace(id, std::move(item)).second;
}

std::optional<ReviewItem> ReviewQueue::find(const std::string& sample_id) const {
  std::lock_guard lock(mutex_);
  auto it = items_.find(sample_id);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

std::vector<ReviewItem> ReviewQueue::items() const {
  std::lock_guard lock(mutex_);
  std::vector<ReviewItem> out;
  for (const auto& [id, item] : items_) out.push_back(item);
  return out;
}

std::vector<ReviewItem> ReviewQueue::pending() const {
  std::vector<ReviewItem> out;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, item] : items_) {
      if (item.status == ReviewStatus::kPending) out.push_back(item);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ReviewItem& a, const ReviewItem& b) {
    return a.iteration < b.iteration;
  });
  return out;
}

std::size_t ReviewQueue::pending_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(items_.begin(), items_.end(), [](const auto& kv) {
    return kv.second.status == ReviewStatus::kPending;
  }));
}

ReviewItem ReviewQueue::resolve(const std::string& sample_id, const Resolution& resolution) {
  std::lock_guard lock(mutex_);
  auto it = items_.find(sample_id);
  if (it == items_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no review item for '" + sample_id + "'");
  }
  ReviewItem& item = it->second;
  if (item.status != ReviewStatus::kPending) {
    throw Error(ErrorCode::kInvalidArgument, "'" + sample_id + "' is already " + to_string(item.status));
  }
  switch (resolution.action) {
    case ReviewAction::kApprove:
      item.status = ReviewStatus::kApproved;
      break;
    case ReviewAction::kReject:
      item.status = ReviewStatus::kRejected;
      break;
    case ReviewAction::kFlag:
      item.status = ReviewStatus::kRejected;
      item.flags = resolution.flags;
      break;
    case ReviewAction::kCorrect: {
      if (resolution.contours.empty()) {
        throw Error(ErrorCode::kValidation, "a correction needs at least one contour");
      }
      for (std::size_t i = 0; i < resolution.contours.size(); ++i) {
        const auto reasons =
            segment_reasons(resolution.contours[i], item.image_size, min_area_px2_);
        if (!reasons.empty()) {
          throw Error(ErrorCode::kValidation,
                      "contour " + std::to_string(i) + " fails " + to_string(reasons.front()));
        }
      }
      item.status = ReviewStatus::kCorrected;
      item.corrected = resolution.contours;
      break;
    }
  }
  if (resolution.action != ReviewAction::kFlag && !resolution.flags.empty()) {
    item.flags = resolution.flags;
  }
  return item;
}

json ReviewQueue::to_json() const {
  json items = json::array();
  for (const auto& item : this->items()) items.push_back(item);
  return json{{"items", std::move(items)}};
}

ReviewQueue ReviewQueue::from_json(const json& j, double min_area_px2) {
  ReviewQueue q(min_area_px2);
  try {
    for (const json& item : j.at("items")) q.enqueue(item.get<ReviewItem>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("review queue: ") + e.what());
  }
  return q;
}

void ReviewQueue::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(2) + "\n");
}

ReviewQueue ReviewQueue::load(const std::filesystem::path& path, double min_area_px2) {
  if (!std::filesystem::exists(path)) return ReviewQueue(min_area_px2);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return from_json(json::parse(in), min_area_px2);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

}  // namespace eigenspine
