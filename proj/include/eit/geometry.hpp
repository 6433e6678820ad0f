#pragma once

#include <Eigen/Core>
#include <functional>
#include <variant>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

using Vec2 = Eigen::Vector2d;

struct Circle {
  Vec2 center;
  double radius;
};

// Semi-axes a, b and a counterclockwise rotation of the a-axis.
struct Ellipse {
  Vec2 center;
  double a;
  double b;
  double angle;
};

// Axis-aligned rectangle given by center and half-widths.
struct Rect {
  Vec2 center;
  double hx;
  double hy;
};

using Primitive = std::variant<Circle, Ellipse, Rect>;

bool inside(const Primitive& p, const Vec2& x);

// Negative inside the shape. The ellipse case solves the closest-point
// problem by bisection; accurate to ~1e-12.
double signed_distance(const Primitive& p, const Vec2& x);

void bounding_box(const Primitive& p, Vec2& lo, Vec2& hi);

// Union of `add` minus union of `subtract`. Used for composite inclusions
// such as a notched ellipse.
struct Region {
  std::vector<Primitive> add;
  std::vector<Primitive> subtract;

  bool inside(const Vec2& x) const;
  bool empty() const { return add.empty(); }
};

// Pointwise minimum of the member signed distances. Exact for points outside
// all members and for disjoint unions; sign-exact always.
double union_signed_distance(const std::vector<Primitive>& prims, const Vec2& x);

// Sign-exact level function for a region with subtractions.
double region_level_function(const Region& region, const Vec2& x);

// Monte-Carlo-free area measures over [0,1]^2 using grid x grid midpoint
// sampling. Good to O(1/grid) for shapes with bounded perimeter.
double sampled_area(const std::function<bool(const Vec2&)>& a, int grid);
double symmetric_difference_area(const std::function<bool(const Vec2&)>& a,
                                 const std::function<bool(const Vec2&)>& b, int grid);
double jaccard_index(const std::function<bool(const Vec2&)>& a,
                     const std::function<bool(const Vec2&)>& b, int grid);

// Distance from a point to the closed set covered by `region`, estimated via
// midpoint samples of the region on a grid x grid lattice (error ~1/grid).
class RegionDistance {
 public:
  RegionDistance(const Region& region, int grid);
  double operator()(const Vec2& x) const;

 private:
  Region region_;
  std::vector<Vec2> samples_;
};

}  // namespace eit
