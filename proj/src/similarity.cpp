#include "eigenspine/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "eigenspine/error.hpp"

namespace eigenspine {
namespace {

void check_same_size(const GrayImage& x, const GrayImage& y) {
  if (x.width() != y.width() || x.height() != y.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(x.width()) + "x" + std::to_string(x.height()) + " vs " +
                    std::to_string(y.width()) + "x" + std::to_string(y.height()));
  }
  if (x.empty()) throw Error(ErrorCode::kEmptyImage, "cannot compare empty images");
}

double ssim_from_moments(double mx, double my, double vx, double vy, double cov,
                         const SimilarityConfig& cfg) {
  return ((2 * mx * my + cfg.c1) * (2 * cov + cfg.c2)) /
         ((mx * mx + my * my + cfg.c1) * (vx + vy + cfg.c2));
}

struct Moments {
  double mx = 0, my = 0, vx = 0, vy = 0, cov = 0, abs_diff = 0;
};

Moments global_moments(const GrayImage& x, const GrayImage& y) {
  const auto& a = x.pixels();
  const auto& b = y.pixels();
  const std::size_t n = a.size();
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += a[i];
    sy += b[i];
  }
  Moments m;
  m.mx = sx / n;
  m.my = sy / n;
  double vx = 0, vy = 0, cov = 0, ad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = a[i] - m.mx;
    const double dy = b[i] - m.my;
    vx += dx * dx;
    vy += dy * dy;
    cov += dx * dy;
    ad += std::abs(a[i] - b[i]);
  }
  m.vx = vx / n;
  m.vy = vy / n;
  m.cov = cov / n;
  m.abs_diff = ad / n;
  return m;
}

// Summed-area table with a zero guard row/column.
class Integral {
 public:
  Integral(int w, int h) : w_(w + 1), data_(static_cast<std::size_t>(w + 1) * (h + 1), 0.0) {}
  double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  double box(int x0, int y0, int x1, int y1) const {
    return get(x1, y1) - get(x0, y1) - get(x1, y0) + get(x0, y0);
  }

 private:
  double get(int x, int y) const { return data_[static_cast<std::size_t>(y) * w_ + x]; }
  int w_;
  std::vector<double> data_;
};

double windowed_ssim(const GrayImage& x, const GrayImage& y, const SimilarityConfig& cfg) {
  const int w = x.width();
  const int h = x.height();
  const int win = cfg.window;
  if (win > w || win > h) {
    throw Error(ErrorCode::kInvalidArgument,
                "SSIM window " + std::to_string(win) + " exceeds image size");
  }
  Integral ix(w, h), iy(w, h), ixx(w, h), iyy(w, h), ixy(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double a = x.at(c, r);
      const double b = y.at(c, r);
      auto accumulate = [&](Integral& t, double v) {
        t.at(c + 1, r + 1) = v + t.at(c, r + 1) + t.at(c + 1, r) - t.at(c, r);
      };
      accumulate(ix, a);
      accumulate(iy, b);
      accumulate(ixx, a * a);
      accumulate(iyy, b * b);
      accumulate(ixy, a * b);
    }
  }
  const double n = static_cast<double>(win) * win;
  double acc = 0.0;
  long count = 0;
  for (int r = 0; r + win <= h; ++r) {
    for (int c = 0; c + win <= w; ++c) {
      const double mx = ix.box(c, r, c + win, r + win) / n;
      const double my = iy.box(c, r, c + win, r + win) / n;
      const double vx = std::max(0.0, ixx.box(c, r, c + win, r + win) / n - mx * mx);
      const double vy = std::max(0.0, iyy.box(c, r, c + win, r + win) / n - my * my);
      const double cov = ixy.box(c, r, c + win, r + win) / n - mx * my;
      acc += ssim_from_moments(mx, my, vx, vy, cov, cfg);
      ++count;
    }
  }
  return acc / count;
}

}  // namespace

void SimilarityConfig::validate() const {
  if (lambda_ss < 0 || lambda_ps < 0 || std::abs(lambda_ss + lambda_ps - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "lambda_ss + lambda_ps must equal 1");
  }
  if (!(tau_cs >= 0 && tau_cs <= 1)) {
    throw Error(ErrorCode::kInvalidArgument, "tau_cs must lie in [0, 1]");
  }
  if (!(c1 > 0 && c2 > 0)) throw Error(ErrorCode::kInvalidArgument, "c1, c2 must be positive");
  if (window < 0 || (window > 0 && window % 2 == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "window must be 0 (global) or odd");
  }
  if (top_k < 1) throw Error(ErrorCode::kInvalidArgument, "top_k must be positive");
}

SimilarityScore score(const GrayImage& x, const GrayImage& y, const SimilarityConfig& cfg) {
  check_same_size(x, y);
  const Moments m = global_moments(x, y);
  SimilarityScore s;
  s.ssim = cfg.window == 0 ? ssim_from_moments(m.mx, m.my, m.vx, m.vy, m.cov, cfg)
                           : windowed_ssim(x, y, cfg);
  s.ps = 1.0 - m.abs_diff / 255.0;
  s.cs = cfg.lambda_ss * s.ssim + cfg.lambda_ps * s.ps;
  return s;
}

double ssim(const GrayImage& x, const GrayImage& y, const SimilarityConfig& cfg) {
  check_same_size(x, y);
  if (cfg.window > 0) return windowed_ssim(x, y, cfg);
  const Moments m = global_moments(x, y);
  return ssim_from_moments(m.mx, m.my, m.vx, m.vy, m.cov, cfg);
}

double pixel_distance(const GrayImage& x, const GrayImage& y) {
  check_same_size(x, y);
  const auto& a = x.pixels();
  const auto& b = y.pixels();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc / (255.0 * a.size());
}

double cs(const GrayImage& x, const GrayImage& y, const SimilarityConfig& cfg) {
  return score(x, y, cfg).cs;
}

PrivacyAudit privacy_audit(const std::string& sample_id, const GrayImage& candidate,
                           std::span<const ReferenceImage> references,
                           const SimilarityConfig& cfg) {
  cfg.validate();
  if (references.empty()) {
    throw Error(ErrorCode::kEmptyReferenceSet, "privacy audit needs at least one reference");
  }
  std::vector<SimilarityMatch> matches;
  matches.reserve(references.size());
  GrayImage resized;
  for (const auto& ref : references) {
    const GrayImage* cand = &candidate;
    if (candidate.width() != ref.image.width() || candidate.height() != ref.image.height()) {
      if (resized.width() != ref.image.width() || resized.height() != ref.image.height()) {
        resized = resize_bilinear(candidate, ref.image.width(), ref.image.height());
      }
      cand = &resized;
    }
    const SimilarityScore s = score(*cand, ref.image, cfg);
    matches.push_back({ref.id, s.ssim, s.ps, s.cs});
  }

  PrivacyAudit audit;
  audit.sample_id = sample_id;
  for (const auto& m : matches) audit.memorized_count += m.cs > cfg.tau_cs;
  std::stable_sort(matches.begin(), matches.end(),
                   [](const SimilarityMatch& a, const SimilarityMatch& b) { return a.cs > b.cs; });
  audit.max_cs = matches.front().cs;
  audit.rejected = audit.max_cs > cfg.tau_cs;
  const std::size_t k = std::min<std::size_t>(cfg.top_k, matches.size());
  audit.top_matches.assign(matches.begin(), matches.begin() + static_cast<long>(k));
  double sum = 0.0;
  for (const auto& m : audit.top_matches) sum += m.cs;
  audit.acs = sum / static_cast<double>(k);
  return audit;
}

void write_audit_csv(std::ostream& out, std::span<const PrivacyAudit> audits, int top_k) {
  out << "new_image";
  for (int k = 1; k <= top_k; ++k) {
    out << ",top" << k << "_image,top" << k << "_ssim,top" << k << "_ps,top" << k << "_cs";
  }
  out << ",acs,rejected\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& a : audits) {
    out << a.sample_id;
    for (int k = 0; k < top_k; ++k) {
      if (k < static_cast<int>(a.top_matches.size())) {
        const auto& m = a.top_matches[k];
        out << ',' << m.reference_id << ',' << num(m.ssim) << ',' << num(m.ps) << ','
            << num(m.cs);
      } else {
        out << ",,,,";
      }
    }
    out << ',' << num(a.acs) << ',' << (a.rejected ? 1 : 0) << '\n';
  }
}

}  // namespace eigenspine
