#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace eigenspine {

/// Vertices per vertebra contour used throughout the toolkit.
inline constexpr std::size_t kDefaultVertices = 14;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// One vertebra boundary stored as interleaved pixel coordinates
/// [x1, y1, ..., xN, yN].
///
/// Canonical vertex ordering: clockwise on screen (y grows downwards),
/// starting at the top-left corner. With N vertices the first ceil(N/4)+1
/// vertices trace the upper endplate and the run starting at index N/2 traces
/// the lower endplate from right to left.
class ContourVector {
 public:
  ContourVector() = default;

  /// Throws Error(kInvalidArgument) when coords is empty, has odd length, or
  /// holds a non-finite value.
  explicit ContourVector(std::vector<double> coords);

  static ContourVector from_points(std::span<const Point> points);

  std::size_t n_vertices() const noexcept { return coords_.size() / 2; }
  std::size_t dim() const noexcept { return coords_.size(); }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const { return coords_[i]; }

  Point vertex(std::size_t i) const {
    return {coords_[2 * i], coords_[2 * i + 1]};
  }
  std::vector<Point> points() const;

  bool operator==(const ContourVector&) const = default;

 private:
  std::vector<double> coords_;
};

}  // namespace eigenspine
