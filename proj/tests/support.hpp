#pragma once

// Fixture builders shared by the unit and acceptance tests.

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "eigenspine/cobb.hpp"
#include "eigenspine/contour.hpp"
#include "eigenspine/image.hpp"

namespace fixture {

using eigenspine::ContourVector;

// 14-vertex rectangle in the canonical order: clockwise (in image
// coordinates) from the top-left corner, top edge on vertices 0..4 and
// bottom edge on vertices 7..11. Rotated by deg about its centre.
inline ContourVector rect(double cx, double cy, double w, double h, double deg = 0.0) {
  std::vector<std::pair<double, double>> local;
  for (int i = 0; i <= 4; ++i) local.push_back({-w / 2 + w * i / 4.0, -h / 2});
  for (int i = 1; i <= 2; ++i) local.push_back({w / 2, -h / 2 + h * i / 3.0});
  for (int i = 0; i <= 4; ++i) local.push_back({w / 2 - w * i / 4.0, h / 2});
  for (int i = 1; i <= 2; ++i) local.push_back({-w / 2, h / 2 - h * i / 3.0});
  const double t = deg * std::numbers::pi / 180.0;
  std::vector<double> xy;
  for (auto [x, y] : local) {
    xy.push_back(cx + x * std::cos(t) - y * std::sin(t));
    xy.push_back(cy + x * std::sin(t) + y * std::cos(t));
  }
  return ContourVector(xy);
}

// Wedge whose top edge is tilted by top_deg and bottom edge by bottom_deg,
// both passing through the vertical axis at +-h/2.
inline ContourVector wedge(double cx, double cy, double w, double h, double top_deg,
                           double bottom_deg) {
  const double tt = std::tan(top_deg * std::numbers::pi / 180.0);
  const double tb = std::tan(bottom_deg * std::numbers::pi / 180.0);
  std::vector<double> xy;
  auto push = [&](double x, double y) {
    xy.push_back(cx + x);
    xy.push_back(cy + y);
  };
  for (int i = 0; i <= 4; ++i) {
    const double x = -w / 2 + w * i / 4.0;
    push(x, -h / 2 + tt * x);
  }
  for (int i = 1; i <= 2; ++i) {
    const double y0 = -h / 2 + tt * w / 2, y1 = h / 2 + tb * w / 2;
    push(w / 2, y0 + (y1 - y0) * i / 3.0);
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = w / 2 - w * i / 4.0;
    push(x, h / 2 + tb * x);
  }
  for (int i = 1; i <= 2; ++i) {
    const double y0 = h / 2 - tb * w / 2, y1 = -h / 2 - tt * w / 2;
    push(-w / 2, y0 + (y1 - y0) * i / 3.0);
  }
  return ContourVector(xy);
}

// n axis-aligned vertebrae stacked vertically, centre gap `gap`.
inline eigenspine::SpineSample column(const std::string& id, int n, double gap = 30.0,
                                      double w = 40.0, double h = 20.0, double x0 = 100.0,
                                      double y0 = 40.0) {
  eigenspine::SpineSample s;
  s.sample_id = id;
  for (int k = 0; k < n; ++k) s.instances.push_back({rect(x0, y0 + gap * k, w, h), 0.9, k});
  return s;
}

inline eigenspine::GrayImage noise_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 255);
  eigenspine::GrayImage img(w, h);
  for (double& p : img.pixels()) p = u(rng);
  return img;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("eigenspine_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixture
