#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "eigenspine/image.hpp"

namespace eigenspine {

/// Weights and stabilizers of the comprehensive similarity
///   CS = lambda_ss * SSIM + lambda_ps * PS,   PS = 1 - pixel_distance.
/// PS is the complement of the normalized mean absolute difference, so that a
/// larger CS always means "more alike".
struct SimilarityConfig {
  double lambda_ss = 0.2;
  double lambda_ps = 0.8;
  double tau_cs = 0.6;
  double c1 = (0.01 * 255) * (0.01 * 255);
  double c2 = (0.03 * 255) * (0.03 * 255);
  /// 0 selects whole-image statistics; otherwise an odd sliding window size.
  int window = 0;
  /// Matches kept per audit.
  int top_k = 3;

  void validate() const;
};

double ssim(const GrayImage& x, const GrayImage& y, const SimilarityConfig& cfg);

/// Mean |x - y| / 255, in [0, 1].
double pixel_distance(const GrayImage& x, const GrayImage& y);

double cs(const GrayImage& x, const GrayImage& y, const SimilarityConfig& cfg);

struct SimilarityScore {
  double ssim = 0.0;
  double ps = 0.0;  // pixel similarity, 1 - pixel_distance
  double cs = 0.0;
};

/// All three scores in one pass over the pixels.
SimilarityScore score(const GrayImage& x, const GrayImage& y, const SimilarityConfig& cfg);

struct ReferenceImage {
  std::string id;
  GrayImage image;
};

struct SimilarityMatch {
  std::string reference_id;
  double ssim = 0.0;
  double ps = 0.0;
  double cs = 0.0;
};

struct PrivacyAudit {
  std::string sample_id;
  std::vector<SimilarityMatch> top_matches;  // descending cs
  double acs = 0.0;                          // mean cs of the top matches
  double max_cs = 0.0;
  int memorized_count = 0;  // references with cs > tau_cs
  bool rejected = false;    // max_cs > tau_cs
};

/// Scores a candidate against every reference. The candidate is resampled
/// to each reference's size when they differ. Ties in cs keep reference
/// order. Throws kEmptyReferenceSet for an empty reference list.
PrivacyAudit privacy_audit(const std::string& sample_id, const GrayImage& candidate,
                           std::span<const ReferenceImage> references,
                           const SimilarityConfig& cfg);

/// CSV layout: new_image, then topK_image/ssim/ps/cs for K = 1..top_k, then
/// acs and rejected.
void write_audit_csv(std::ostream& out, std::span<const PrivacyAudit> audits, int top_k);

}  // namespace eigenspine
