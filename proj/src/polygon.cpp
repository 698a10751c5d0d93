#include "eigenspine/polygon.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>

namespace eigenspine::geom {
namespace {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint>;

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(Point o, Point a, Point b) {
  const double c = cross(o, a, b);
  const double scale = std::max({std::abs(a.x - o.x), std::abs(a.y - o.y),
                                  std::abs(b.x - o.x), std::abs(b.y - o.y), 1.0});
  if (std::abs(c) <= 1e-12 * scale * scale) return 0;
  return c > 0 ? 1 : -1;
}

bool on_segment(Point p, Point q, Point r) {
  // q collinear with p-r; check it lies within the bounding box of p-r.
  return q.x <= std::max(p.x, r.x) && q.x >= std::min(p.x, r.x) &&
         q.y <= std::max(p.y, r.y) && q.y >= std::min(p.y, r.y);
}

BgPolygon to_boost(std::span<const Point> poly) {
  BgPolygon out;
  for (const Point& p : poly) bg::append(out.outer(), BgPoint(p.x, p.y));
  bg::correct(out);
  return out;
}

double sampled_intersection(std::span<const Point> a, std::span<const Point> b,
                            double& area_a, double& area_b) {
  const BoundingBox ba = bounding_box(a);
  const BoundingBox bb = bounding_box(b);
  const double min_x = std::min(ba.min_x, bb.min_x);
  const double min_y = std::min(ba.min_y, bb.min_y);
  const double max_x = std::max(ba.max_x, bb.max_x);
  const double max_y = std::max(ba.max_y, bb.max_y);
  constexpr double kStep = 0.25;
  long in_a = 0, in_b = 0, in_both = 0;
  for (double y = min_y + kStep / 2; y < max_y; y += kStep) {
    for (double x = min_x + kStep / 2; x < max_x; x += kStep) {
      const bool ia = contains(a, {x, y});
      const bool ib = contains(b, {x, y});
      in_a += ia;
      in_b += ib;
      in_both += ia && ib;
    }
  }
  const double cell = kStep * kStep;
  area_a = in_a * cell;
  area_b = in_b * cell;
  return in_both * cell;
}

}  // namespace

double signed_area(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    acc += p.x * q.y - q.x * p.y;
  }
  return 0.5 * acc;
}

double area(std::span<const Point> poly) { return std::abs(signed_area(poly)); }

Point centroid(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n == 0) return {};
  const double a = signed_area(poly);
  if (std::abs(a) > 1e-12) {
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Point& p = poly[i];
      const Point& q = poly[(i + 1) % n];
      const double w = p.x * q.y - q.x * p.y;
      cx += (p.x + q.x) * w;
      cy += (p.y + q.y) * w;
    }
    return {cx / (6.0 * a), cy / (6.0 * a)};
  }
  Point mean;
  for (const Point& p : poly) {
    mean.x += p.x;
    mean.y += p.y;
  }
  return {mean.x / n, mean.y / n};
}

Point centroid(const ContourVector& contour) {
  const auto pts = contour.points();
  return centroid(pts);
}

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, q1, p2)) return true;
  if (o2 == 0 && on_segment(p1, q2, p2)) return true;
  if (o3 == 0 && on_segment(q1, p1, q2)) return true;
  if (o4 == 0 && on_segment(q1, p2, q2)) return true;
  return false;
}

bool is_simple(std::span<const Point> poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % n];
    if (a.x == b.x && a.y == b.y) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point a1 = poly[i];
    const Point a2 = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point b1 = poly[j];
      const Point b2 = poly[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex is expected; a collinear fold-back is not.
        const Point shared = j == i + 1 ? a2 : a1;
        const Point other_a = j == i + 1 ? a1 : a2;
        const Point other_b = j == i + 1 ? b2 : b1;
        if (orientation(shared, other_a, other_b) == 0) {
          const double dot = (other_a.x - shared.x) * (other_b.x - shared.x) +
                             (other_a.y - shared.y) * (other_b.y - shared.y);
          if (dot > 0) return false;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

BoundingBox bounding_box(std::span<const Point> poly) {
  BoundingBox box{poly[0].x, poly[0].y, poly[0].x, poly[0].y};
  for (const Point& p : poly) {
    box.min_x = std::min(box.min_x, p.x);
    box.min_y = std::min(box.min_y, p.y);
    box.max_x = std::max(box.max_x, p.x);
    box.max_y = std::max(box.max_y, p.y);
  }
  return box;
}

bool contains(std::span<const Point> poly, Point p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

double polygon_iou(std::span<const Point> a, std::span<const Point> b) {
  if (a.size() < 3 || b.size() < 3) return 0.0;
  if (!bounding_box(a).overlaps(bounding_box(b))) return 0.0;

  double area_a = 0.0, area_b = 0.0, inter = 0.0;
  if (is_simple(a) && is_simple(b)) {
    const BgPolygon pa = to_boost(a);
    const BgPolygon pb = to_boost(b);
    std::vector<BgPolygon> out;
    bg::intersection(pa, pb, out);
    for (const auto& p : out) inter += bg::area(p);
    area_a = bg::area(pa);
    area_b = bg::area(pb);
  } else {
    inter = sampled_intersection(a, b, area_a, area_b);
  }
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace eigenspine::geom
