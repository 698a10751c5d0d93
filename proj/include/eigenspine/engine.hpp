#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "eigenspine/annotation.hpp"
#include "eigenspine/evaluation.hpp"
#include "eigenspine/filters.hpp"
#include "eigenspine/predictor.hpp"
#include "eigenspine/review.hpp"
#include "eigenspine/similarity.hpp"

namespace eigenspine {

/// Privacy audits by sample id. Shareable between engines that use the same
/// references and similarity settings, since an audit depends only on those
/// and the image.
using PrivacyCache = std::map<std::string, PrivacyAudit>;

struct LedgerEntry {
  std::string sample_id;
  bool v = false;
  /// Blocking reasons when v = 0, plus reasons instances were dropped.
  std::vector<Reason> reasons;
};

struct LedgerIteration {
  int iteration = 0;
  std::vector<LedgerEntry> entries;  // pool order
};

class SelectionLedger {
 public:
  void append(LedgerIteration it) { iterations_.push_back(std::move(it)); }
  const std::vector<LedgerIteration>& iterations() const noexcept { return iterations_; }
  /// Ids with v = 1 after the given iteration; iteration 0 is empty.
  std::set<std::string> selected(int iteration) const;

  /// {"iteration", "sample_id", "v", "reasons"} per line.
  static std::string to_json_line(int iteration, const LedgerEntry& entry);
  std::string to_jsonl() const;

 private:
  std::vector<LedgerIteration> iterations_;
};

struct IterationMetrics {
  int iteration = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t pending_review = 0;
  LabelMetrics labels;
};

std::string metrics_csv_header();
std::string to_csv_row(const IterationMetrics& m);

struct IterationResult {
  int iteration = 0;
  LedgerIteration ledger;
  std::vector<AnnotationRecord> snapshot;  // samples with v = 1
  IterationMetrics metrics;
  bool converged = false;
};

/// The iterative labeling loop over an unlabeled pool: pseudo-label,
/// confidence gate, segment and sample filters, manual review, privacy
/// audit, selection update, predictor refresh.
///
/// Selection modes:
///   no_filter    only the confidence gate; v is decided by privacy alone
///   independent  v is recomputed from scratch every iteration
///   cumulative   v_i = v_{i-1} and pass_i, so a rejection is permanent
///
/// The center-gap statistic comes from the samples accepted in the previous
/// iteration, or from the seed set when there are none. Samples failing the
/// sample filters are queued for review; until resolved they count as
/// rejected, or block the iteration when strict_review is set.
class DataEngine {
 public:
  DataEngine(EngineConfig config, std::vector<SpineSample> seed_set, std::vector<PoolItem> pool,
             std::vector<ReferenceImage> references);

  void attach(std::shared_ptr<Predictor> predictor);
  void share_privacy_cache(std::shared_ptr<PrivacyCache> cache);

  /// Throws kNoPredictor without a predictor, kBlockedOnReview in strict
  /// mode while review items are pending (the queue keeps any items added
  /// by the attempt; engine state is unchanged).
  IterationResult run_iteration();

  /// Iterates until the selection is unchanged between consecutive
  /// iterations or max_iterations is reached.
  std::vector<IterationResult> run();

  bool converged() const noexcept { return converged_; }
  int iteration() const noexcept { return iteration_; }
  const EngineConfig& config() const noexcept { return config_; }
  const SelectionLedger& ledger() const noexcept { return ledger_; }
  const std::vector<AnnotationRecord>& snapshot() const noexcept { return snapshot_; }
  const std::vector<IterationMetrics>& metrics() const noexcept { return metrics_; }
  ReviewQueue& review_queue() noexcept { return queue_; }
  const ReviewQueue& review_queue() const noexcept { return queue_; }
  /// Audits computed so far, in pool order.
  std::vector<PrivacyAudit> privacy_audits() const;

 private:
  const PrivacyAudit& audit(const PoolItem& item);
  std::optional<CorpusStats> current_stats() const;

  EngineConfig config_;
  std::vector<SpineSample> seed_set_;
  std::vector<PoolItem> pool_;
  std::vector<ReferenceImage> references_;
  std::shared_ptr<Predictor> predictor_;
  ReviewQueue queue_;
  SelectionLedger ledger_;
  std::vector<AnnotationRecord> snapshot_;
  std::vector<IterationMetrics> metrics_;
  std::shared_ptr<PrivacyCache> audits_ = std::make_shared<PrivacyCache>();
  std::map<std::string, LedgerEntry> last_;
  int iteration_ = 0;
  bool converged_ = false;
};

struct SweepPoint {
  double tau_c = 0.0;
  double mean_ed = 0.0;
};

/// Mean angle_ed against ground truth after the confidence gate and the
/// segment filters, for each threshold. Items without truth are skipped.
std::vector<SweepPoint> tau_c_sweep(std::span<const PoolItem> pool, const Predictor& predictor,
                                    const EngineConfig& config, std::span<const double> taus);

}  // namespace eigenspine
