#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eigenspine/cobb.hpp"
#include "eigenspine/image.hpp"
#include "eigenspine/lra.hpp"
#include "eigenspine/synth.hpp"

namespace eigenspine {

/// One unlabeled image in the engine pool.
struct PoolItem {
  std::string sample_id;
  std::string image;  // path recorded in snapshots, may be empty
  ImageSize size;
  std::function<GrayImage()> load_image;
  /// Known labels, used by oracle predictors and for label-quality metrics.
  std::optional<SpineSample> truth;
};

/// Pseudo-labeling model. predict() must be deterministic for a given state
/// and input; refresh() is called after every iteration with the labeled
/// set (seed plus accepted pseudo-labels).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<VertebraInstance> predict(const PoolItem& item) const = 0;
  virtual void refresh(std::span<const SpineSample> labeled, int iteration) = 0;
};

struct OracleSpec {
  /// Corruption at skill level 0.
  PerturbSpec base{2.0, 0.35, 0.04, 0.25, {}, 0};
  /// Log-normal sigma of the per-sample difficulty multiplier on the noise.
  double difficulty_sigma = 0.6;
  /// Noise, drop and spurious rates shrink by this factor per skill level.
  double skill_decay = 0.7;
  int max_level = 2;
};

/// Ground truth passed through perturb(). Skill grows with the labeled set:
/// level = floor(log2(labeled / seed_size)), capped at max_level and never
/// decreasing. Every sample keeps its own seed across levels, so a better
/// predictor shrinks the same error pattern instead of redrawing it.
class NoisyOracle : public Predictor {
 public:
  NoisyOracle(OracleSpec spec, std::size_t seed_size, std::uint64_t seed);

  std::vector<VertebraInstance> predict(const PoolItem& item) const override;
  void refresh(std::span<const SpineSample> labeled, int iteration) override;

  int level() const noexcept { return level_; }
  double difficulty(const std::string& sample_id) const;

 private:
  OracleSpec spec_;
  std::size_t seed_size_;
  std::uint64_t seed_;
  int level_ = 0;
};

/// Image-blind baseline: per vertebra slot (top-to-bottom position), the
/// mean eigen-spine coefficients of the labeled set, reconstructed into a
/// contour. Confidence is the fraction of labeled samples that have the slot.
class NearestCoeff : public Predictor {
 public:
  explicit NearestCoeff(int m = 16);

  std::vector<VertebraInstance> predict(const PoolItem& item) const override;
  void refresh(std::span<const SpineSample> labeled, int iteration) override;

  const std::optional<EigenSpineBasis>& basis() const noexcept { return basis_; }

 private:
  int m_;
  std::optional<EigenSpineBasis> basis_;
  std::vector<VertebraInstance> template_;
};

}  // namespace eigenspine
