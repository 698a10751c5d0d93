#include "eigenspine/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "eigenspine/error.hpp"
#include "eigenspine/polygon.hpp"

namespace eigenspine {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Axis-aligned rectangle in the canonical vertex layout, rotated by
// angle_deg about its centre. n must be even and >= 4.
std::vector<Point> rectangle_contour(Point center, double w, double h, double angle_deg,
                                     std::size_t n) {
  const std::size_t k = (n + 3) / 4;
  const std::size_t half = n / 2;
  const std::size_t right_interior = half - k - 1;
  const std::size_t left_interior = n - (half + k + 1);
  std::vector<Point> local;
  local.reserve(n);
  for (std::size_t i = 0; i <= k; ++i) {
    local.push_back({-w / 2 + w * static_cast<double>(i) / k, -h / 2});
  }
  for (std::size_t i = 1; i <= right_interior; ++i) {
    local.push_back({w / 2, -h / 2 + h * static_cast<double>(i) / (right_interior + 1)});
  }
  for (std::size_t i = 0; i <= k; ++i) {
    local.push_back({w / 2 - w * static_cast<double>(i) / k, h / 2});
  }
  for (std::size_t i = 1; i <= left_interior; ++i) {
    local.push_back({-w / 2, h / 2 - h * static_cast<double>(i) / (left_interior + 1)});
  }
  const double c = std::cos(angle_deg * kDegToRad);
  const double s = std::sin(angle_deg * kDegToRad);
  for (Point& p : local) {
    const Point q{p.x * c - p.y * s, p.x * s + p.y * c};
    p = {q.x + center.x, q.y + center.y};
  }
  return local;
}

std::vector<double> tilt_profile(const SpineSpec& spec, Rng& rng) {
  const int n = spec.n_vertebrae;
  std::vector<double> raw(n);
  if (spec.centerline == Centerline::kSine) {
    const double freq = uniform(rng, 0.5, 1.25);
    const double phase = uniform(rng, 0.0, 2 * std::numbers::pi);
    for (int k = 0; k < n; ++k) {
      const double s = static_cast<double>(k) / (n - 1);
      raw[k] = std::sin(2 * std::numbers::pi * freq * s + phase);
    }
  } else {
    const double a1 = uniform(rng, -1, 1), a2 = uniform(rng, -1, 1), a3 = uniform(rng, -1, 1);
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * k / (n - 1) - 1.0;
      raw[k] = a1 * t + a2 * t * t + a3 * t * t * t;
    }
  }
  auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi - lo < 1e-9) {
    for (int k = 0; k < n; ++k) raw[k] = static_cast<double>(k) / (n - 1);
    lo = 0.0;
    hi = 1.0;
  }
  std::vector<double> tilts(n);
  const double mid = 0.5 * (hi + lo);
  for (int k = 0; k < n; ++k) {
    tilts[k] = spec.target_max_cobb_deg == 0.0
                   ? 0.0
                   : (raw[k] - mid) * spec.target_max_cobb_deg / (hi - lo);
  }
  return tilts;
}

bool contours_touch(const std::vector<Point>& a, const std::vector<Point>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (geom::segments_intersect(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) {
        return true;
      }
    }
  }
  return geom::contains(a, b[0]) || geom::contains(b, a[0]);
}

void gaussian_blur(GrayImage& img, double sigma) {
  if (sigma <= 0) return;
  const int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) k /= total;
  const int w = img.width(), h = img.height();
  std::vector<double>& px = img.pixels();
  std::vector<double> line;
  // Rows, then columns, with edge pixels replicated.
  auto pass = [&](int count, int length, std::size_t stride, std::size_t step) {
    line.assign(length + 2 * radius, 0.0);
    for (int c = 0; c < count; ++c) {
      const std::size_t start = c * stride;
      for (int i = 0; i < length + 2 * radius; ++i) {
        line[i] = px[start + std::clamp(i - radius, 0, length - 1) * step];
      }
      for (int i = 0; i < length; ++i) {
        double acc = 0;
        for (int k = 0; k <= 2 * radius; ++k) acc += kernel[k] * line[i + k];
        px[start + i * step] = acc;
      }
    }
  };
  pass(h, w, w, 1);
  pass(w, h, 1, w);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, const std::string& key) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

void SpineSpec::validate() const {
  if (n_vertebrae < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 vertebrae");
  if (!(target_max_cobb_deg >= 0 && target_max_cobb_deg <= 90)) {
    throw Error(ErrorCode::kInvalidArgument, "target Cobb angle must lie in [0, 90]");
  }
  if (canvas_width <= 0 || canvas_height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "canvas must be non-empty");
  }
  if (vertebra_width < 0 || vertebra_height < 0 || blur_sigma < 0 || noise_sigma < 0) {
    throw Error(ErrorCode::kInvalidArgument, "sizes and noise levels must be non-negative");
  }
}

SyntheticSpine generate_geometry(const SpineSpec& spec, const std::string& sample_id) {
  spec.validate();
  Rng rng(spec.seed);
  const int n = spec.n_vertebrae;
  const double height =
      spec.vertebra_height > 0 ? spec.vertebra_height : 0.7 * 0.78 * spec.canvas_height / n;
  const double width = spec.vertebra_width > 0 ? spec.vertebra_width : 1.55 * height;
  const double pitch = height / 0.7;

  SyntheticSpine out;
  out.tilts_deg = tilt_profile(spec, rng);

  std::vector<Point> centers(n);
  for (int k = 1; k < n; ++k) {
    const double phi = 0.5 * (out.tilts_deg[k - 1] + out.tilts_deg[k]) * kDegToRad;
    centers[k] = {centers[k - 1].x - pitch * std::sin(phi),
                  centers[k - 1].y + pitch * std::cos(phi)};
  }
  std::vector<std::vector<Point>> polys(n);
  for (int k = 0; k < n; ++k) {
    polys[k] = rectangle_contour(centers[k], width, height, out.tilts_deg[k], kDefaultVertices);
  }

  // Centre the column on the canvas with a small random offset, keeping a
  // one-pixel margin.
  std::vector<Point> all;
  for (const auto& p : polys) all.insert(all.end(), p.begin(), p.end());
  const geom::BoundingBox box = geom::bounding_box(all);
  const double margin = 1.0;
  auto place = [&](double lo, double hi, double extent, double jitter) {
    const double span = hi - lo;
    const double free = extent - 1 - 2 * margin - span;
    if (free < 0) {
      throw Error(ErrorCode::kInfeasibleSpec, "spine does not fit on the canvas");
    }
    const double centred = margin + free / 2 - lo;
    const double j = std::clamp(jitter, -free / 2, free / 2);
    return centred + j;
  };
  const double jx = uniform(rng, -0.06, 0.06) * spec.canvas_width;
  const double jy = uniform(rng, -0.04, 0.04) * spec.canvas_height;
  const double dx = place(box.min_x, box.max_x, spec.canvas_width, jx);
  const double dy = place(box.min_y, box.max_y, spec.canvas_height, jy);
  for (auto& poly : polys) {
    for (Point& p : poly) {
      p.x += dx;
      p.y += dy;
      if (spec.snap_to_pixel) {
        p.x = std::round(p.x);
        p.y = std::round(p.y);
      }
    }
  }
  for (int k = 0; k + 1 < n; ++k) {
    if (contours_touch(polys[k], polys[k + 1])) {
      throw Error(ErrorCode::kInfeasibleSpec,
                  "vertebrae " + std::to_string(k) + " and " + std::to_string(k + 1) + " overlap");
    }
  }

  out.sample.sample_id = sample_id;
  for (int k = 0; k < n; ++k) {
    out.sample.instances.push_back({ContourVector::from_points(polys[k]), 1.0, k});
  }
  sort_instances(out.sample);

  std::vector<EndplateAngles> tilts;
  for (double t : out.tilts_deg) tilts.push_back({t, t});
  out.truth = cobb_report_from_tilts(tilts);
  return out;
}

GrayImage render(const SpineSample& sample, const SpineSpec& spec) {
  Rng rng(derive_seed(spec.seed, "render"));
  const int w = spec.canvas_width, h = spec.canvas_height;
  GrayImage img(w, h);

  double spine_x = 0.5 * w;
  if (!sample.instances.empty()) {
    double acc = 0;
    for (const auto& v : sample.instances) acc += geom::centroid(v.contour).x;
    spine_x = acc / sample.instances.size();
  }

  // Soft-tissue background: exposure level, a linear exposure gradient,
  // low-frequency texture and a body silhouette around the spine.
  const double base = uniform(rng, 10, 60);
  const double grad = uniform(rng, 0, 80);
  const double grad_dir = uniform(rng, 0, 2 * std::numbers::pi);
  struct Wave {
    double amp, kx, ky, phase;
  };
  std::vector<Wave> waves(6);
  for (auto& wv : waves) {
    wv = {uniform(rng, 8, 24), 4 * normal(rng), 4 * normal(rng),
          uniform(rng, 0, 2 * std::numbers::pi)};
  }
  const double body_half = uniform(rng, 0.16, 0.3) * w;
  const double body_level = uniform(rng, 15, 60);
  const double bone_level = uniform(rng, 70, 150);

  // Every term is a product of a row factor and a column factor, so the
  // transcendentals are evaluated once per row and once per column.
  std::vector<double> column(w), row(h);
  const double gx = grad * std::cos(grad_dir), gy = grad * std::sin(grad_dir);
  for (int x = 0; x < w; ++x) {
    const double u = static_cast<double>(x) / w;
    const double d = (x - spine_x) / body_half;
    column[x] = base + gx * (u - 0.5) + body_level * std::exp(-d * d * d * d);
  }
  for (int y = 0; y < h; ++y) row[y] = gy * (static_cast<double>(y) / h - 0.5);
  std::vector<std::vector<double>> sin_x(waves.size(), std::vector<double>(w)),
      cos_x(waves.size(), std::vector<double>(w)), sin_y(waves.size(), std::vector<double>(h)),
      cos_y(waves.size(), std::vector<double>(h));
  for (std::size_t k = 0; k < waves.size(); ++k) {
    const Wave& wv = waves[k];
    for (int x = 0; x < w; ++x) {
      const double a = 2 * std::numbers::pi * wv.kx * x / w + wv.phase;
      sin_x[k][x] = wv.amp * std::sin(a);
      cos_x[k][x] = wv.amp * std::cos(a);
    }
    for (int y = 0; y < h; ++y) {
      const double b = 2 * std::numbers::pi * wv.ky * y / h;
      sin_y[k][y] = std::sin(b);
      cos_y[k][y] = std::cos(b);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double val = column[x] + row[y];
      for (std::size_t k = 0; k < waves.size(); ++k) {
        val += sin_x[k][x] * cos_y[k][y] + cos_x[k][x] * sin_y[k][y];
      }
      img.at(x, y) = val;
    }
  }

  for (const auto& v : sample.instances) {
    const auto pts = v.contour.points();
    const geom::BoundingBox box = geom::bounding_box(pts);
    const double level = bone_level + uniform(rng, -10, 10);
    const int x0 = std::max(0, static_cast<int>(std::floor(box.min_x)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(box.max_x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(box.min_y)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(box.max_y)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (geom::contains(pts, {x + 0.5, y + 0.5})) img.at(x, y) += level;
      }
    }
  }

  gaussian_blur(img, spec.blur_sigma);
  // Sensor noise: Irwin-Hall sum of four 16-bit uniforms from one draw,
  // rescaled to unit variance.
  const double noise_scale = spec.noise_sigma * std::sqrt(3.0) / 65536.0;
  for (double& p : img.pixels()) {
    double noisy = p;
    if (spec.noise_sigma > 0) {
      const std::uint64_t r = rng();
      const double sum = static_cast<double>((r & 0xffff) + ((r >> 16) & 0xffff) +
                                             ((r >> 32) & 0xffff) + (r >> 48));
      noisy += noise_scale * (sum - 2 * 65535.0);
    }
    p = std::clamp(std::round(noisy), 0.0, 255.0);
  }
  return img;
}

GeneratedSpine generate(const SpineSpec& spec, const std::string& sample_id) {
  SyntheticSpine geo = generate_geometry(spec, sample_id);
  GrayImage image = render(geo.sample, spec);
  return {std::move(geo.sample), geo.truth, std::move(image)};
}

void PerturbSpec::validate() const {
  auto rate_ok = [](double r) { return r >= 0 && r <= 1; };
  if (!(coord_noise_px >= 0) || !(noise_spread >= 0) || !rate_ok(drop_rate) ||
      !rate_ok(spurious_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "perturbation rates must lie in [0, 1], noise >= 0");
  }
  if (!(confidence.decay_px > 0) || confidence.jitter < 0 ||
      !(confidence.spurious_min <= confidence.spurious_max)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid confidence model");
  }
}

SpineSample perturb(const SpineSample& sample, const PerturbSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SpineSample out;
  out.sample_id = sample.sample_id;
  out.image_ref = sample.image_ref;

  for (const auto& inst : sample.instances) {
    const std::size_t n = inst.contour.n_vertices();
    const double u_drop = uniform(rng, 0, 1);
    const double scale = std::exp(spec.noise_spread * normal(rng));
    std::vector<double> z(2 * n);
    for (double& v : z) v = normal(rng);
    const double u_conf = uniform(rng, 0, 1);
    const double u_spur = uniform(rng, 0, 1);
    double spur[7];
    for (double& v : spur) v = uniform(rng, 0, 1);

    if (u_drop >= spec.drop_rate) {
      const double sigma = spec.coord_noise_px * scale;
      std::vector<double> coords(inst.contour.coords().begin(), inst.contour.coords().end());
      double sq = 0;
      for (std::size_t d = 0; d < coords.size(); ++d) {
        coords[d] += sigma * z[d];
        sq += sigma * sigma * z[d] * z[d];
      }
      const double rms = std::sqrt(sq / n);
      const double conf = std::exp(-rms / spec.confidence.decay_px) +
                          spec.confidence.jitter * (2 * u_conf - 1);
      out.instances.push_back({ContourVector(std::move(coords)), std::clamp(conf, 0.0, 1.0), 0});
    }

    if (u_spur < spec.spurious_rate && n >= 4 && n % 2 == 0) {
      const std::size_t k = (n + 3) / 4;
      const Point tl = inst.contour.vertex(0);
      const Point tr = inst.contour.vertex(k);
      const Point br = inst.contour.vertex(n / 2);
      const double w = std::hypot(tr.x - tl.x, tr.y - tl.y);
      const double h = std::hypot(br.x - tr.x, br.y - tr.y);
      const Point c = geom::centroid(inst.contour);
      const double side = spur[0] < 0.5 ? -1.0 : 1.0;
      const Point center{c.x + side * (0.6 + 1.9 * spur[1]) * w, c.y + (spur[2] - 0.5) * h};
      const double angle = -50 + 100 * spur[3];
      const double size = 0.35 + 0.75 * spur[4];
      auto pts = rectangle_contour(center, w * size, h * size, angle, n);
      if (spur[5] < 0.15) std::swap(pts[1], pts[n / 2 + 1]);
      const double conf = spec.confidence.spurious_min +
                          (spec.confidence.spurious_max - spec.confidence.spurious_min) * spur[6];
      out.instances.push_back({ContourVector::from_points(pts), conf, 0});
    }
  }
  sort_instances(out);
  return out;
}

SyntheticCorpus make_corpus(const CorpusSpec& spec) {
  if (spec.n_seed < 0 || spec.n_pool < 0 || spec.memorized_fraction < 0 ||
      spec.memorized_fraction > 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid corpus spec");
  }
  Rng rng(derive_seed(spec.seed, "corpus"));
  // Not / mild / moderate / severe counts of the generated training split.
  std::discrete_distribution<int> band({1123, 12268, 1508, 1101});
  constexpr double kBandLo[] = {0, 10, 30, 45};
  constexpr double kBandHi[] = {10, 30, 45, 90};

  auto make_item = [&](const std::string& id) {
    const int b = band(rng);
    SpineSpec s = spec.base;
    s.target_max_cobb_deg = uniform(rng, kBandLo[b], kBandHi[b]);
    s.centerline = uniform(rng, 0, 1) < 0.7 ? Centerline::kSine : Centerline::kPoly3;
    for (int attempt = 0;; ++attempt) {
      s.seed = derive_seed(spec.seed, id + "#" + std::to_string(attempt));
      try {
        SyntheticSpine g = generate_geometry(s, id);
        return CorpusItem{std::move(g.sample), g.truth, s, std::nullopt};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasibleSpec || attempt >= 50) throw;
      }
    }
  };

  SyntheticCorpus corpus;
  char id[32];
  for (int i = 0; i < spec.n_seed; ++i) {
    std::snprintf(id, sizeof id, "seed_%04d", i);
    corpus.seed.push_back(make_item(id));
  }
  for (int i = 0; i < spec.n_pool; ++i) {
    std::snprintf(id, sizeof id, "gen_%06d", i);
    const double u = uniform(rng, 0, 1);
    const double pick = uniform(rng, 0, 1);
    if (u < spec.memorized_fraction && !corpus.seed.empty()) {
      const auto& src = corpus.seed[static_cast<std::size_t>(pick * corpus.seed.size())];
      CorpusItem copy = src;
      copy.truth.sample_id = id;
      copy.copied_from = src.truth.sample_id;
      corpus.pool.push_back(std::move(copy));
    } else {
      corpus.pool.push_back(make_item(id));
    }
  }
  return corpus;
}

}  // namespace eigenspine
