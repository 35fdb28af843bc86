#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace lbstab {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

using Edge = std::pair<std::size_t, std::size_t>;  // always first < second

// Edges of the Delaunay triangulation of `points` (equivalently, pairs of
// sites whose Voronoi cells share a boundary segment), sorted ascending.
//
// A pair is an edge when some circle through both points has no other point
// strictly inside. When four or more points are cocircular the candidate
// diagonals cross; they are resolved greedily in lexicographic id order, so a
// square's corners (0,1,2,3 counter-clockwise) yield diagonal (0,2).
//
// Two points give their single edge. Coincident points, or three or more
// points that are all collinear, throw GeometryError. Runs in O(n^3).
std::vector<Edge> delaunay_edges(std::span<const Point2> points);

// Twice the signed area of (a, b, c); positive when counter-clockwise.
double orient2d(const Point2& a, const Point2& b, const Point2& c);

}  // namespace lbstab
