#include "eigenspine/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eigenspine/error.hpp"

namespace eigenspine {
namespace {

void add_reason(std::vector<Reason>& reasons, Reason r) {
  if (std::find(reasons.begin(), reasons.end(), r) == reasons.end()) reasons.push_back(r);
}

}  // namespace

std::set<std::string> SelectionLedger::selected(int iteration) const {
  std::set<std::string> out;
  for (const auto& it : iterations_) {
    if (it.iteration != iteration) continue;
    for (const auto& e : it.entries) {
      if (e.v) out.insert(e.sample_id);
    }
  }
  return out;
}

std::string SelectionLedger::to_json_line(int iteration, const LedgerEntry& entry) {
  nlohmann::json reasons = nlohmann::json::array();
  for (Reason r : entry.reasons) reasons.push_back(to_string(r));
  return nlohmann::json{{"iteration", iteration},
                        {"sample_id", entry.sample_id},
                        {"v", entry.v ? 1 : 0},
                        {"reasons", std::move(reasons)}}
      .dump();
}

std::string SelectionLedger::to_jsonl() const {
  std::string out;
  for (const auto& it : iterations_) {
    for (const auto& e : it.entries) out += to_json_line(it.iteration, e) + "\n";
  }
  return out;
}

std::string metrics_csv_header() {
  return "iteration,accepted,rejected,pending_review,ap,ar,smape,ed";
}

std::string to_csv_row(const IterationMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%zu,%zu,%zu,%.6f,%.6f,%.6f,%.6f", m.iteration, m.accepted,
                m.rejected, m.pending_review, m.labels.ap, m.labels.ar, m.labels.smape,
                m.labels.ed);
  return buf;
}

DataEngine::DataEngine(EngineConfig config, std::vector<SpineSample> seed_set,
                       std::vector<PoolItem> pool, std::vector<ReferenceImage> references)
    : config_(std::move(config)),
      seed_set_(std::move(seed_set)),
      pool_(std::move(pool)),
      references_(std::move(references)),
      queue_(config_.min_area_px2) {
  config_.validate();
  std::set<std::string> ids;
  for (const auto& item : pool_) {
    if (!ids.insert(item.sample_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate pool sample id '" + item.sample_id + "'");
    }
  }
}

void DataEngine::attach(std::shared_ptr<Predictor> predictor) {
  predictor_ = std::move(predictor);
  if (predictor_ && iteration_ == 0) predictor_->refresh(seed_set_, 0);
}

void DataEngine::share_privacy_cache(std::shared_ptr<PrivacyCache> cache) {
  if (!cache) throw Error(ErrorCode::kInvalidArgument, "null privacy cache");
  audits_ = std::move(cache);
}

std::vector<PrivacyAudit> DataEngine::privacy_audits() const {
  std::vector<PrivacyAudit> out;
  for (const auto& item : pool_) {
    auto it = audits_->find(item.sample_id);
    if (it != audits_->end()) out.push_back(it->second);
  }
  return out;
}

const PrivacyAudit& DataEngine::audit(const PoolItem& item) {
  auto it = audits_->find(item.sample_id);
  if (it != audits_->end()) return it->second;
  if (!item.load_image) {
    throw Error(ErrorCode::kInvalidArgument, "no image for '" + item.sample_id + "'");
  }
  PrivacyAudit a = privacy_audit(item.sample_id, item.load_image(), references_,
                                 config_.similarity);
  return audits_->emplace(item.sample_id, std::move(a)).first->second;
}

std::optional<CorpusStats> DataEngine::current_stats() const {
  std::vector<SpineSample> accepted;
  for (const auto& r : snapshot_) accepted.push_back(r.sample);
  CorpusStats stats = corpus_stats(accepted);
  if (stats.n_gaps == 0) stats = corpus_stats(seed_set_);
  if (stats.n_gaps == 0) return std::nullopt;
  return stats;
}

IterationResult DataEngine::run_iteration() {
  if (!predictor_) throw Error(ErrorCode::kNoPredictor, "no predictor attached");
  const int it = iteration_ + 1;
  const bool filtering = config_.selection_mode != SelectionMode::kNoFilter;
  const std::optional<CorpusStats> stats = filtering && !pool_.empty()
                                               ? current_stats()
                                               : std::optional<CorpusStats>();

  IterationResult result;
  result.iteration = it;
  result.ledger.iteration = it;
  std::vector<SpineSample> accepted_pred, accepted_truth;

  for (const auto& item : pool_) {
    SpineSample sample;
    sample.sample_id = item.sample_id;
    if (!item.image.empty()) sample.image_ref = item.image;
    const auto predictions = predictor_->predict(item);
    sample.instances = confidence_filter(predictions, config_.tau_c);

    LedgerEntry entry{item.sample_id, true, {}};
    LabelSource source = LabelSource::kPseudo;
    if (filtering) {
      auto seg = segment_filters(sample.instances, item.size, config_);
      for (const auto& rej : seg.rejected) {
        for (Reason r : rej.reasons) add_reason(entry.reasons, r);
      }
      sample.instances = std::move(seg.kept);
      sort_instances(sample);

      const SampleVerdict verdict = sample_filters(sample, stats, config_);
      const auto review = queue_.find(item.sample_id);
      if (review && review->status != ReviewStatus::kPending) {
        switch (review->status) {
          case ReviewStatus::kRejected:
            add_reason(entry.reasons, Reason::kManualReject);
            entry.v = false;
            break;
          case ReviewStatus::kCorrected:
            sample.instances.clear();
            for (const auto& c : review->corrected) sample.instances.push_back({c, 1.0, 0});
            sort_instances(sample);
            source = LabelSource::kCorrected;
            break;
          default:
            break;
        }
      } else if (!verdict.accepted) {
        for (Reason r : verdict.reasons) add_reason(entry.reasons, r);
        entry.v = false;
        if (!review) {
          ReviewItem ri;
          ri.sample_id = item.sample_id;
          ri.image = item.image;
          ri.image_size = item.size;
          ri.iteration = it;
          ri.reasons = verdict.reasons;
          ri.instances = sample.instances;
          queue_.enqueue(std::move(ri));
        }
      }
    } else {
      sort_instances(sample);
    }

    if (entry.v && audit(item).rejected) {
      add_reason(entry.reasons, Reason::kPrivacy);
      entry.v = false;
    }
    if (config_.selection_mode == SelectionMode::kCumulative && it > 1) {
      const LedgerEntry& prev = last_.at(item.sample_id);
      if (!prev.v) {
        entry.v = false;
        for (Reason r : prev.reasons) add_reason(entry.reasons, r);
      }
    }

    if (entry.v) {
      AnnotationRecord rec;
      rec.image = item.image;
      if (sample.instances.size() >= 2) rec.cobb = cobb_report_or_zero(sample);
      rec.source = source;
      if (item.truth) {
        accepted_pred.push_back(sample);
        accepted_truth.push_back(*item.truth);
      }
      rec.sample = std::move(sample);
      result.snapshot.push_back(std::move(rec));
    }
    result.ledger.entries.push_back(std::move(entry));
  }

  if (config_.strict_review && queue_.pending_count() > 0) {
    throw Error(ErrorCode::kBlockedOnReview,
                std::to_string(queue_.pending_count()) + " review item(s) pending");
  }

  IterationMetrics& m = result.metrics;
  m.iteration = it;
  m.accepted = result.snapshot.size();
  m.rejected = pool_.size() - m.accepted;
  m.pending_review = queue_.pending_count();
  m.labels = evaluate_labels(accepted_pred, accepted_truth);

  const std::set<std::string> before = ledger_.selected(iteration_);
  for (const auto& e : result.ledger.entries) last_[e.sample_id] = e;
  ledger_.append(result.ledger);
  snapshot_ = result.snapshot;
  metrics_.push_back(m);
  iteration_ = it;
  converged_ = ledger_.selected(it) == before;
  result.converged = converged_;

  std::vector<SpineSample> labeled = seed_set_;
  for (const auto& r : snapshot_) labeled.push_back(r.sample);
  predictor_->refresh(labeled, it);
  return result;
}

std::vector<IterationResult> DataEngine::run() {
  std::vector<IterationResult> out;
  while (!converged_ && iteration_ < config_.max_iterations) out.push_back(run_iteration());
  return out;
}

std::vector<SweepPoint> tau_c_sweep(std::span<const PoolItem> pool, const Predictor& predictor,
                                    const EngineConfig& config, std::span<const double> taus) {
  std::vector<std::vector<VertebraInstance>> predictions;
  for (const auto& item : pool) {
    predictions.push_back(item.truth ? predictor.predict(item) : std::vector<VertebraInstance>{});
  }
  std::vector<SweepPoint> out;
  for (double tau : taus) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!pool[i].truth) continue;
      SpineSample s;
      s.sample_id = pool[i].sample_id;
      s.instances = segment_filters(confidence_filter(predictions[i], tau), pool[i].size, config).kept;
      sort_instances(s);
      sum += angle_ed(cobb_report_or_zero(s), cobb_report_or_zero(*pool[i].truth));
      ++n;
    }
    out.push_back({tau, n ? sum / n : 0.0});
  }
  return out;
}

}  // namespace eigenspine
