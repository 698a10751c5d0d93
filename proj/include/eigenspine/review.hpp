#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eigenspine/filters.hpp"

// Manual review of samples that failed the sample-level filters. Items are
// keyed by sample id; once resolved, a decision applies to every later
// iteration.
namespace eigenspine {

enum class ReviewStatus { kPending, kApproved, kRejected, kCorrected };
enum class ReviewFlag { kNonRealistic, kSpinalFracture, kUnclear };
enum class ReviewAction { kApprove, kReject, kCorrect, kFlag };

std::string to_string(ReviewStatus status);
std::string to_string(ReviewFlag flag);
ReviewFlag review_flag_from_string(const std::string& name);
ReviewAction review_action_from_string(const std::string& name);

struct ReviewItem {
  std::string sample_id;
  std::string image;  // path of the source image, may be empty
  ImageSize image_size;
  int iteration = 0;  // iteration that queued the item
  std::vector<Reason> reasons;
  std::vector<VertebraInstance> instances;  // the candidate labels under review
  std::vector<ReviewFlag> flags;
  ReviewStatus status = ReviewStatus::kPending;
  std::vector<ContourVector> corrected;
};

void to_json(nlohmann::json& j, const ReviewItem& item);
void from_json(const nlohmann::json& j, ReviewItem& item);

struct Resolution {
  ReviewAction action = ReviewAction::kApprove;
  std::vector<ContourVector> contours;  // required for kCorrect
  std::vector<ReviewFlag> flags;
};

/// Thread-safe: the review service resolves items while the engine reads.
class ReviewQueue {
 public:
  explicit ReviewQueue(double min_area_px2 = 200.0) : min_area_px2_(min_area_px2) {}
  ReviewQueue(const ReviewQueue& other);
  ReviewQueue& operator=(const ReviewQueue& other);

  /// Returns false (and keeps the existing item) when the id is known.
  bool enqueue(ReviewItem item);
  std::optional<ReviewItem> find(const std::string& sample_id) const;
  std::vector<ReviewItem> items() const;
  /// Pending items ordered by iteration, then id.
  std::vector<ReviewItem> pending() const;
  std::size_t pending_count() const;

  /// Throws kInvalidArgument for an unknown or already resolved id, and
  /// kValidation when a correction is empty or any replacement contour fails
  /// the segment legality checks.
  ReviewItem resolve(const std::string& sample_id, const Resolution& resolution);

  nlohmann::json to_json() const;
  static ReviewQueue from_json(const nlohmann::json& j, double min_area_px2 = 200.0);
  void save(const std::filesystem::path& path) const;
  /// A missing file yields an empty queue.
  static ReviewQueue load(const std::filesystem::path& path, double min_area_px2 = 200.0);

 private:
  double min_area_px2_;
  mutable std::mutex mutex_;
  std::map<std::string, ReviewItem> items_;
};

}  // namespace eigenspine
