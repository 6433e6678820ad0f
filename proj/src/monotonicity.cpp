#include "eit/monotonicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eit {

namespace {

constexpr double kEigSlack = 1e-8;       // relative to ||test matrix||_F
constexpr double kShiftScale = 1e-10;    // relative to ||difference||_F
constexpr double kSupportScale = 1e-3;   // relative to cbar

bool psd_up_to_slack(const Eigen::MatrixXd& test) {
  const double tol = kEigSlack * test.norm();
  return lambda_min(test) >= -tol;
}

Eigen::VectorXd bounds_from_factor(const SpdFactor& factor,
                                   const SensitivityStack& stack, double cbar) {
  const int count = stack.regions.count();
  Eigen::VectorXd out(count);
  for (int k = 0; k < count; ++k) {
    const Eigen::MatrixXd w = factor.whiten(stack.matrices[k]);
    const double lmin = lambda_min(0.5 * (w + w.transpose()));
    const double ck =
        lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
    out[k] = std::min(cbar, ck);
  }
  return out;
}

}  // namespace

std::vector<Circle> default_test_balls() {
  std::vector<Circle> balls;
  balls.reserve(100);
  for (int j = 0; j < 10; ++j)
    for (int i = 0; i < 10; ++i)
      balls.push_back({Vec2((i + 0.5) / 10.0, (j + 0.5) / 10.0), 0.05});
  return balls;
}

bool standard_test(const CrossedMesh& mesh, const CurrentBasis& basis, double sigma0,
                   double sigma1, const NtdMatrix& lam_sigma, const Circle& ball,
                   double alpha) {
  if (!(sigma0 > 0.0) || !(sigma1 > sigma0))
    throw Error("need 0 < sigma0 < sigma1");
  if (!(alpha > 0.0) || alpha > sigma1 - sigma0 + 1e-12)
    throw Error("alpha outside (0, sigma1 - sigma0]");
  if (!(ball.radius > 0.0)) throw Error("degenerate test ball");
  if (lam_sigma.mat.rows() != basis.m) throw Error("matrix does not match the basis");

  Region region;
  region.add.push_back(Circle{ball.center, ball.radius});
  const ConductivityField bumped = rasterize_region(mesh, region, sigma0, sigma0 + alpha);
  bool hit = false;
  for (auto v : bumped.inclusion) hit |= v != 0;
  if (!hit) throw Error("degenerate test ball: no triangles covered");

  const NtdMatrix lam_bumped = ntd_matrix(mesh, bumped, basis);
  return psd_up_to_slack(lam_bumped.mat - lam_sigma.mat);
}

TestBallGrid linearized_scan(const NtdMatrix& diff, const SensitivityStack& ball_stack,
                             double alpha, double delta, double alpha_max, int heat_np) {
  if (ball_stack.regions.kind != RegionIndex::Kind::Balls)
    throw Error("scan needs a ball stack");
  if (!(alpha > 0.0) || alpha > alpha_max + 1e-12)
    throw Error("alpha outside (0, alpha_max]");
  if (delta < 0.0) throw Error("noise level must be nonnegative");
  if (diff.mat.rows() != ball_stack.m) throw Error("matrix does not match the stack");
  if (heat_np < 1) throw Error("heat map resolution must be positive");

  const int count = ball_stack.regions.count();
  const int m = ball_stack.m;
  const Eigen::MatrixXd shift = delta * Eigen::MatrixXd::Identity(m, m);

  TestBallGrid grid;
  grid.balls = ball_stack.regions.balls;
  grid.marked.resize(count);
  for (int k = 0; k < count; ++k) {
    const Eigen::MatrixXd test = alpha * ball_stack.matrices[k] - diff.mat + shift;
    grid.marked[k] = psd_up_to_slack(test) ? 1 : 0;
  }

  grid.heat_np = heat_np;
  grid.heat.assign(static_cast<std::size_t>(heat_np) * heat_np, 0);
  for (int j = 0; j < heat_np; ++j)
    for (int i = 0; i < heat_np; ++i) {
      const double x0 = static_cast<double>(i) / heat_np;
      const double x1 = static_cast<double>(i + 1) / heat_np;
      const double y0 = static_cast<double>(j) / heat_np;
      const double y1 = static_cast<double>(j + 1) / heat_np;
      int& cell = grid.heat[static_cast<std::size_t>(j) * heat_np + i];
      for (int k = 0; k < count; ++k) {
        if (!grid.marked[k]) continue;
        const Vec2& c = grid.balls[k].center;
        const double dx = std::max({x0 - c.x(), 0.0, c.x() - x1});
        const double dy = std::max({y0 - c.y(), 0.0, c.y() - y1});
        if (std::hypot(dx, dy) < grid.balls[k].radius) ++cell;
      }
    }
  return grid;
}

PixelBounds pixel_bounds(const NtdMatrix& lam_background, const NtdMatrix& lam_sigma,
                         const SensitivityStack& pixel_stack, double cbar) {
  if (!(cbar > 0.0)) throw Error("cbar must be positive");
  if (lam_background.mat.rows() != pixel_stack.m ||
      lam_sigma.mat.rows() != pixel_stack.m)
    throw Error("matrix does not match the stack");

  Eigen::MatrixXd a = lam_background.mat - lam_sigma.mat;
  const double tol_shift = kShiftScale * a.norm();
  const double lmin = lambda_min(a);
  if (lmin < -tol_shift)
    throw Error("data not monotonically consistent: negative difference eigenvalue");
  if (lmin <= tol_shift)
    a += tol_shift * Eigen::MatrixXd::Identity(a.rows(), a.cols());

  PixelBounds out;
  out.cbar = cbar;
  out.values = bounds_from_factor(cholesky_spd(a), pixel_stack, cbar);
  return out;
}

PixelBounds pixel_bounds_noisy(const NtdMatrix& noisy_diff, double delta,
                               const SensitivityStack& pixel_stack, double cbar) {
  if (!(cbar > 0.0)) throw Error("cbar must be positive");
  if (!(delta > 0.0)) throw Error("noisy bounds need delta > 0");
  if (noisy_diff.mat.rows() != pixel_stack.m)
    throw Error("matrix does not match the stack");

  const int m = static_cast<int>(noisy_diff.mat.rows());
  const Eigen::MatrixXd a =
      matrix_abs(noisy_diff.mat) + delta * Eigen::MatrixXd::Identity(m, m);

  PixelBounds out;
  out.cbar = cbar;
  out.values = bounds_from_factor(cholesky_spd(a), pixel_stack, cbar);
  return out;
}

PixelBounds simplified_bounds(int count, double cbar) {
  if (count < 1) throw Error("pixel count must be positive");
  if (!(cbar > 0.0)) throw Error("cbar must be positive");
  PixelBounds out;
  out.cbar = cbar;
  out.values = Eigen::VectorXd::Constant(count, cbar);
  return out;
}

PixelPartition regularized_reconstruction(const NtdMatrix& target,
                                          const SensitivityStack& pixel_stack,
                                          const PixelBounds& bounds, double tol,
                                          int max_sweeps) {
  if (pixel_stack.regions.kind != RegionIndex::Kind::Pixels)
    throw Error("reconstruction needs a pixel stack");
  if (target.mat.rows() != pixel_stack.m)
    throw Error("matrix does not match the stack");
  if (bounds.values.size() != pixel_stack.regions.count())
    throw Error("bounds do not match the stack");

  BoxQpProblem problem;
  problem.stack = pixel_stack.matrices;
  problem.target = target.mat;
  problem.upper = bounds.values;
  const BoxQpSolution sol = solve_box_qp(problem, tol, max_sweeps);

  PixelPartition part;
  part.np = pixel_stack.regions.np;
  part.cbar = bounds.cbar;
  part.bounds = bounds.values;
  part.coeffs = sol.coeffs;
  part.qp_objective = sol.objective;
  part.qp_sweeps = sol.sweeps;
  part.support.resize(sol.coeffs.size());
  const double threshold = kSupportScale * bounds.cbar;
  for (int k = 0; k < sol.coeffs.size(); ++k)
    part.support[k] = sol.coeffs[k] > threshold ? 1 : 0;
  return part;
}

}  // namespace eit
