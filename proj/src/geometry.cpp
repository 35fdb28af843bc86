#include "lbstab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lbstab/error.hpp"

namespace lbstab {

double orient2d(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

namespace {

enum class EdgeKind { None, Strict, Tied };

// Feasible interval of circle centres along the perpendicular bisector of
// (pi, pj), parameterised by signed distance t from the midpoint along the
// left normal. A point k on the left forces t <= t_k, one on the right t >= t_k.
EdgeKind classify(std::span<const Point2> pts, std::size_t i, std::size_t j, double tol) {
  const Point2& a = pts[i];
  const Point2& b = pts[j];
  const double mx = 0.5 * (a.x + b.x);
  const double my = 0.5 * (a.y + b.y);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  const double nx = -dy / len;
  const double ny = dx / len;
  const double r0 = 0.25 * (dx * dx + dy * dy);

  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k == i || k == j) continue;
    const double px = pts[k].x - mx;
    const double py = pts[k].y - my;
    const double side = nx * px + ny * py;
    const double dist2 = px * px + py * py;
    if (std::fabs(side) <= tol) {
      // On the line through a and b: strictly between them it sits inside
      // every circle through a and b.
      if (dist2 < r0 - tol * len) return EdgeKind::None;
      continue;
    }
    const double t = (dist2 - r0) / (2.0 * side);
    if (side > 0.0)
      upper = std::min(upper, t);
    else
      lower = std::max(lower, t);
    if (lower > upper + tol) return EdgeKind::None;
  }
  return lower < upper - tol ? EdgeKind::Strict : EdgeKind::Tied;
}

bool properly_cross(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double o1 = orient2d(a, b, c);
  const double o2 = orient2d(a, b, d);
  const double o3 = orient2d(c, d, a);
  const double o4 = orient2d(c, d, b);
  return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
}

}  // namespace

std::vector<Edge> delaunay_edges(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  if (n < 2) return {};
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(pts[i].x) || !std::isfinite(pts[i].y))
      throw GeometryError("site " + std::to_string(i) + " has a non-finite position");
    for (std::size_t j = i + 1; j < n; ++j)
      if (pts[i] == pts[j]) {
        std::ostringstream os;
        os << "sites " << i << " and " << j << " coincide";
        throw GeometryError(os.str());
      }
  }
  if (n == 2) return {{0, 1}};

  double min_x = pts[0].x, max_x = pts[0].x, min_y = pts[0].y, max_y = pts[0].y;
  for (const auto& p : pts) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double scale = std::hypot(max_x - min_x, max_y - min_y);
  const double tol = 1e-10 * scale;

  bool all_collinear = true;
  for (std::size_t k = 2; k < n && all_collinear; ++k)
    if (std::fabs(orient2d(pts[0], pts[1], pts[k])) > tol * scale) all_collinear = false;
  if (all_collinear) {
    std::ostringstream os;
    os << "degenerate site set: all " << n << " sites are collinear";
    throw GeometryError(os.str());
  }

  std::vector<Edge> kept;
  std::vector<Edge> tied;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      switch (classify(pts, i, j, tol)) {
        case EdgeKind::Strict: kept.emplace_back(i, j); break;
        case EdgeKind::Tied: tied.emplace_back(i, j); break;
        case EdgeKind::None: break;
      }
    }
  for (const auto& e : tied) {
    const bool crosses = std::any_of(kept.begin(), kept.end(), [&](const Edge& f) {
      return properly_cross(pts[e.first], pts[e.second], pts[f.first], pts[f.second]);
    });
    if (!crosses) kept.push_back(e);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace lbstab
