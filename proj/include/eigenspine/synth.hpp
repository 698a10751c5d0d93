#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eigenspine/cobb.hpp"
#include "eigenspine/image.hpp"

// Parametric synthetic spines: ground-truth contours with an exactly known
// Cobb angle, an X-ray-like rasterization, and a seeded corruption model that
// mimics detector error.
namespace eigenspine {

enum class Centerline { kSine, kPoly3 };

struct SpineSpec {
  int n_vertebrae = 17;
  double target_max_cobb_deg = 0.0;
  Centerline centerline = Centerline::kSine;
  /// Zero derives the size from the canvas height and vertebra count.
  double vertebra_width = 0.0;
  double vertebra_height = 0.0;
  int canvas_width = 512;
  int canvas_height = 512;
  std::uint64_t seed = 0;
  /// Round vertices to integer pixels, as manual annotation tools do.
  bool snap_to_pixel = false;
  double blur_sigma = 1.0;
  double noise_sigma = 6.0;

  void validate() const;
};

struct SyntheticSpine {
  SpineSample sample;
  CobbReport truth;              // analytic, from the prescribed tilts
  std::vector<double> tilts_deg;  // per vertebra, top to bottom
};

struct GeneratedSpine {
  SpineSample sample;
  CobbReport truth;
  GrayImage image;
};

/// Places n_vertebrae rectangular 14-vertex contours along the centerline,
/// each rotated to the local tangent. The tilt profile is scaled so its
/// spread (max - min) equals target_max_cobb_deg exactly.
/// Throws kInfeasibleSpec when vertebrae overlap or leave the canvas.
SyntheticSpine generate_geometry(const SpineSpec& spec, const std::string& sample_id = "synthetic");

/// Filled vertebrae over a soft-tissue background, Gaussian blur, additive
/// noise, quantized to 8-bit levels. Deterministic in spec.seed.
GrayImage render(const SpineSample& sample, const SpineSpec& spec);

GeneratedSpine generate(const SpineSpec& spec, const std::string& sample_id = "synthetic");

struct ConfidenceModel {
  /// Confidence = exp(-rms_displacement / decay_px) (+ jitter).
  double decay_px = 4.0;
  /// Half-width of a uniform perturbation added to each confidence.
  double jitter = 0.0;
  double spurious_min = 0.02;
  double spurious_max = 0.4;
};

struct PerturbSpec {
  double coord_noise_px = 0.0;
  /// Log-normal sigma of a per-instance multiplier on coord_noise_px.
  double noise_spread = 0.0;
  double drop_rate = 0.0;
  /// Per true instance, probability of injecting one false instance nearby.
  double spurious_rate = 0.0;
  ConfidenceModel confidence;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Jittered/dropped/augmented copy of a sample. Every instance consumes the
/// same number of random draws whatever the rates are, so two specs that
/// share a seed perturb with common random numbers.
SpineSample perturb(const SpineSample& sample, const PerturbSpec& spec);

/// Stable 64-bit mix of a seed and a string key.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& key);

struct CorpusSpec {
  int n_seed = 40;
  int n_pool = 500;
  /// Fraction of pool items that are verbatim copies of seed images.
  double memorized_fraction = 0.02;
  std::uint64_t seed = 0;
  SpineSpec base;  // canvas, vertebra count, rendering parameters
};

struct CorpusItem {
  SpineSample truth;
  CobbReport cobb;
  SpineSpec spec;
  std::optional<std::string> copied_from;
};

struct SyntheticCorpus {
  std::vector<CorpusItem> seed;
  std::vector<CorpusItem> pool;
};

/// Severity bands follow the generated-dataset training split proportions:
/// <10 deg 1123, 10-30 deg 12268, 30-45 deg 1508, >45 deg 1101 (of 16000).
SyntheticCorpus make_corpus(const CorpusSpec& spec);

}  // namespace eigenspine
