#pragma once

#include <span>

#include "eigenspine/contour.hpp"

// Planar polygon helpers shared by the annotation filters, the Cobb geometry
// and label evaluation. Polygons are closed implicitly (last vertex connects
// back to the first).
namespace eigenspine::geom {

/// Shoelace signed area. Positive for clockwise-on-screen ordering (y down).
double signed_area(std::span<const Point> poly);
double area(std::span<const Point> poly);

/// Area-weighted centroid; falls back to the vertex mean for degenerate
/// (zero-area) polygons.
Point centroid(std::span<const Point> poly);
Point centroid(const ContourVector& contour);

/// True when segments [p1,p2] and [q1,q2] share at least one point.
bool segments_intersect(Point p1, Point p2, Point q1, Point q2);

/// A polygon is simple when no two non-adjacent edges touch, adjacent edges
/// meet only at their shared vertex, and no edge has zero length.
bool is_simple(std::span<const Point> poly);

struct BoundingBox {
  double min_x, min_y, max_x, max_y;
  bool overlaps(const BoundingBox& other) const {
    return min_x <= other.max_x && other.min_x <= max_x &&
           min_y <= other.max_y && other.min_y <= max_y;
  }
};
BoundingBox bounding_box(std::span<const Point> poly);

/// Even-odd point-in-polygon test.
bool contains(std::span<const Point> poly, Point p);

/// Intersection-over-union of two polygons. Simple polygons use exact
/// polygon clipping; anything else falls back to supersampled even-odd
/// coverage on a 0.25 px grid.
double polygon_iou(std::span<const Point> a, std::span<const Point> b);

}  // namespace eigenspine::geom
