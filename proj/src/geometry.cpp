#include "eit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eit/errors.hpp"

namespace eit {

namespace {

Eigen::Matrix2d rotation(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

// Distance from (y0, y1) in the closed first quadrant to the ellipse
// x0^2/e0^2 + x1^2/e1^2 = 1 with e0 >= e1 > 0. Root-finding form of the
// closest-point problem: F(t) = (e0 y0/(t+e0^2))^2 + (e1 y1/(t+e1^2))^2 - 1
// is decreasing on (-e1^2, inf) and brackets cleanly, so bisection is safe.
double quadrant_ellipse_distance(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0 && y0 > 0.0) {
    auto f = [&](double t) {
      const double r0 = e0 * y0 / (t + e0 * e0);
      const double r1 = e1 * y1 / (t + e1 * e1);
      return r0 * r0 + r1 * r1 - 1.0;
    };
    double lo = -e1 * e1 + e1 * y1;
    double hi = -e1 * e1 + std::hypot(e0 * y0, e1 * y1);
    for (int it = 0; it < 140; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (f(mid) > 0.0 ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    const double x0 = e0 * e0 * y0 / (t + e0 * e0);
    const double x1 = e1 * e1 * y1 / (t + e1 * e1);
    return std::hypot(x0 - y0, x1 - y1);
  }
  if (y1 == 0.0) {
    const double num = e0 * y0;
    const double denom = e0 * e0 - e1 * e1;
    if (denom > 0.0 && num < denom) {
      // interior points near the center project off-axis
      const double frac = num / denom;
      const double x0 = e0 * frac;
      const double x1 = e1 * std::sqrt(std::max(0.0, 1.0 - frac * frac));
      return std::hypot(x0 - y0, x1);
    }
    return std::abs(y0 - e0);
  }
  return std::abs(y1 - e1);  // y0 == 0
}

struct SdVisitor {
  const Vec2& x;

  double operator()(const Circle& c) const { return (x - c.center).norm() - c.radius; }

  double operator()(const Ellipse& e) const {
    if (e.a <= 0.0 || e.b <= 0.0) throw Error("ellipse semi-axes must be positive");
    Vec2 q = rotation(e.angle).transpose() * (x - e.center);
    double e0 = e.a, e1 = e.b;
    double y0 = std::abs(q.x()), y1 = std::abs(q.y());
    if (e1 > e0) {
      std::swap(e0, e1);
      std::swap(y0, y1);
    }
    const double d = quadrant_ellipse_distance(e0, e1, y0, y1);
    const double level = (y0 / e0) * (y0 / e0) + (y1 / e1) * (y1 / e1);
    return level < 1.0 ? -d : d;
  }

  double operator()(const Rect& r) const {
    if (r.hx <= 0.0 || r.hy <= 0.0) throw Error("rectangle half-widths must be positive");
    const Vec2 q(std::abs(x.x() - r.center.x()) - r.hx,
                 std::abs(x.y() - r.center.y()) - r.hy);
    const Vec2 outside(std::max(q.x(), 0.0), std::max(q.y(), 0.0));
    return outside.norm() + std::min(std::max(q.x(), q.y()), 0.0);
  }
};

struct BoxVisitor {
  Vec2& lo;
  Vec2& hi;

  void operator()(const Circle& c) const {
    lo = c.center - Vec2(c.radius, c.radius);
    hi = c.center + Vec2(c.radius, c.radius);
  }
  void operator()(const Ellipse& e) const {
    // extent of a rotated ellipse along each axis
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double ex = std::hypot(e.a * c, e.b * s);
    const double ey = std::hypot(e.a * s, e.b * c);
    lo = e.center - Vec2(ex, ey);
    hi = e.center + Vec2(ex, ey);
  }
  void operator()(const Rect& r) const {
    lo = r.center - Vec2(r.hx, r.hy);
    hi = r.center + Vec2(r.hx, r.hy);
  }
};

}  // namespace

double signed_distance(const Primitive& p, const Vec2& x) {
  return std::visit(SdVisitor{x}, p);
}

bool inside(const Primitive& p, const Vec2& x) { return signed_distance(p, x) < 0.0; }

void bounding_box(const Primitive& p, Vec2& lo, Vec2& hi) {
  std::visit(BoxVisitor{lo, hi}, p);
}

bool Region::inside(const Vec2& x) const {
  bool in = false;
  for (const auto& p : add) {
    if (eit::inside(p, x)) {
      in = true;
      break;
    }
  }
  if (!in) return false;
  for (const auto& p : subtract) {
    if (eit::inside(p, x)) return false;
  }
  return true;
}

double union_signed_distance(const std::vector<Primitive>& prims, const Vec2& x) {
  if (prims.empty()) throw Error("signed distance of an empty shape list");
  double d = signed_distance(prims.front(), x);
  for (std::size_t i = 1; i < prims.size(); ++i)
    d = std::min(d, signed_distance(prims[i], x));
  return d;
}

double region_level_function(const Region& region, const Vec2& x) {
  if (region.empty()) throw Error("level function of an empty region");
  double d = union_signed_distance(region.add, x);
  if (!region.subtract.empty())
    d = std::max(d, -union_signed_distance(region.subtract, x));
  return d;
}

double sampled_area(const std::function<bool(const Vec2&)>& a, int grid) {
  if (grid < 1) throw Error("sampling grid must be positive");
  long count = 0;
  for (int j = 0; j < grid; ++j)
    for (int i = 0; i < grid; ++i)
      if (a(Vec2((i + 0.5) / grid, (j + 0.5) / grid))) ++count;
  return static_cast<double>(count) / (static_cast<double>(grid) * grid);
}

double symmetric_difference_area(const std::function<bool(const Vec2&)>& a,
                                 const std::function<bool(const Vec2&)>& b, int grid) {
  return sampled_area([&](const Vec2& x) { return a(x) != b(x); }, grid);
}

double jaccard_index(const std::function<bool(const Vec2&)>& a,
                     const std::function<bool(const Vec2&)>& b, int grid) {
  if (grid < 1) throw Error("sampling grid must be positive");
  long inter = 0, uni = 0;
  for (int j = 0; j < grid; ++j)
    for (int i = 0; i < grid; ++i) {
      const Vec2 x((i + 0.5) / grid, (j + 0.5) / grid);
      const bool ia = a(x), ib = b(x);
      inter += ia && ib;
      uni += ia || ib;
    }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

RegionDistance::RegionDistance(const Region& region, int grid) : region_(region) {
  if (grid < 2) throw Error("sampling grid must be at least 2");
  samples_.reserve(256);
  for (int j = 0; j < grid; ++j)
    for (int i = 0; i < grid; ++i) {
      const Vec2 x((i + 0.5) / grid, (j + 0.5) / grid);
      if (region_.inside(x)) samples_.push_back(x);
    }
}

double RegionDistance::operator()(const Vec2& x) const {
  if (region_.inside(x)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples_) best = std::min(best, (x - s).norm());
  return best;
}

}  // namespace eit
