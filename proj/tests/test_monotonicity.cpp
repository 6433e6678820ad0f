#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "eit/monotonicity.hpp"

using namespace eit;

namespace {

Region disk_region() {
  Region r;
  r.add.push_back(Circle{Vec2(0.5, 0.5), 0.2});
  return r;
}

ConductivityField pixelwise_random(const CrossedMesh& mesh, const RegionIndex& pixels,
                                   std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  ConductivityField sigma = uniform_conductivity(mesh, 1.0);
  for (int p = 0; p < pixels.count(); ++p) {
    const double v = dist(rng);
    for (int t : pixels.tris[p]) sigma.values[t] = v;
  }
  return sigma;
}

double weighted_energy(const CrossedMesh& mesh, const PotentialField& u,
                       const std::vector<double>& weight) {
  double sum = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    sum += weight[t] * mesh.tri_area[t] * tri_gradient(mesh, u.values, t).squaredNorm();
  return sum;
}

}  // namespace

TEST_SUITE("monotonicity") {

TEST_CASE("default ball grid sits at the pixel midpoints") {
  const std::vector<Circle> balls = default_test_balls();
  REQUIRE(balls.size() == 100);
  CHECK(balls[0].center == Vec2(0.05, 0.05));
  CHECK(balls[0].radius == 0.05);
  CHECK(balls[11].center == Vec2(0.15, 0.15));
  CHECK(balls[99].center == Vec2(0.95, 0.95));
}

TEST_CASE("standard test separates inside from outside balls") {
  const CrossedMesh mesh = build_crossed_grid(32);
  const CurrentBasis basis = make_current_basis(mesh, 8, true);
  const ConductivityField sigma = rasterize_region(mesh, disk_region(), 1.0, 2.0);
  const NtdMatrix lam_sigma = ntd_matrix(mesh, sigma, basis);

  const Circle inside_ball{Vec2(0.5, 0.5), 0.05};
  const Circle outside_ball{Vec2(0.1, 0.85), 0.05};
  CHECK(standard_test(mesh, basis, 1.0, 2.0, lam_sigma, inside_ball, 1.0));
  CHECK(!standard_test(mesh, basis, 1.0, 2.0, lam_sigma, outside_ball, 1.0));

  CHECK_THROWS_AS(
      (void)standard_test(mesh, basis, 1.0, 2.0, lam_sigma, inside_ball, 1.5), Error);
  CHECK_THROWS_AS(
      (void)standard_test(mesh, basis, 1.0, 2.0, lam_sigma, inside_ball, 0.0), Error);
}

TEST_CASE("energy comparison chains for random conductivity pairs") {
  const CrossedMesh mesh = build_crossed_grid(16);
  const RegionIndex pixels = rasterize_pixels(mesh, 4);
  const CurrentBasis basis = make_current_basis(mesh, 3, false);
  std::mt19937_64 rng(41);

  for (int pair = 0; pair < 3; ++pair) {
    const ConductivityField sigma = pixelwise_random(mesh, pixels, rng, 0.6, 2.4);
    const ConductivityField tau = pixelwise_random(mesh, pixels, rng, 0.6, 2.4);
    const NtdMatrix lam_sigma = ntd_matrix(mesh, sigma, basis);
    const NtdMatrix lam_tau = ntd_matrix(mesh, tau, basis);
    const NeumannSolver solver_tau(mesh, tau);

    std::vector<double> upper(mesh.num_triangles()), lower(mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      upper[t] = sigma.values[t] - tau.values[t];
      lower[t] = tau.values[t] / sigma.values[t] * (sigma.values[t] - tau.values[t]);
    }

    for (int k = 0; k < basis.m; ++k) {
      const PotentialField u_tau = solver_tau.solve(basis.currents[k]);
      const double lhs = weighted_energy(mesh, u_tau, upper);
      const double mid = lam_tau.mat(k, k) - lam_sigma.mat(k, k);
      const double rhs = weighted_energy(mesh, u_tau, lower);
      const double scale =
          std::max({std::abs(lhs), std::abs(mid), std::abs(rhs), 1e-30});
      CHECK((lhs - mid) / scale >= -1e-8);
      CHECK((mid - rhs) / scale >= -1e-8);
    }
  }
}

TEST_CASE("linearized scan marks every ball inside the inclusion") {
  const CrossedMesh mesh = build_crossed_grid(32);
  const CurrentBasis basis = make_current_basis(mesh, 8, true);
  const NtdMatrix bg = ntd_matrix(mesh, uniform_conductivity(mesh, 1.0), basis);
  const NtdMatrix fw = ntd_matrix(mesh, rasterize_region(mesh, disk_region(), 1.0, 2.0),
                                  basis);
  const NtdMatrix diff = ntd_difference(fw, bg);

  const std::vector<Circle> balls = default_test_balls();
  const SensitivityStack stack =
      sensitivity_stack(mesh, 1.0, basis, rasterize_balls(mesh, balls));
  const TestBallGrid scan = linearized_scan(diff, stack, 0.5, 0.0, 0.5);

  REQUIRE(scan.marked.size() == balls.size());
  int marked = 0;
  for (std::size_t k = 0; k < balls.size(); ++k) {
    const double center_gap = (balls[k].center - Vec2(0.5, 0.5)).norm();
    if (center_gap + balls[k].radius <= 0.2) CHECK(scan.marked[k] == 1);
    marked += scan.marked[k];
  }
  CHECK(marked >= 4);
  CHECK(marked < 100);

  // heat map: marked balls overlapping each pixel
  REQUIRE(scan.heat_np == 10);
  for (int pj = 0; pj < 10; ++pj)
    for (int pi = 0; pi < 10; ++pi) {
      int expect = 0;
      // the 0.05 balls are exactly tangent to the pixel edges, so the edge
      // coordinates must be computed as in the scan for the ties to agree
      for (std::size_t k = 0; k < balls.size(); ++k) {
        if (!scan.marked[k]) continue;
        const double dx = std::max({pi / 10.0 - balls[k].center.x(),
                                    balls[k].center.x() - (pi + 1) / 10.0, 0.0});
        const double dy = std::max({pj / 10.0 - balls[k].center.y(),
                                    balls[k].center.y() - (pj + 1) / 10.0, 0.0});
        if (std::hypot(dx, dy) < balls[k].radius) ++expect;
      }
      CHECK(scan.heat[pj * 10 + pi] == expect);
    }
}

TEST_CASE("noise compensation grows the marked set with delta") {
  const CrossedMesh mesh = build_crossed_grid(32);
  const CurrentBasis basis = make_current_basis(mesh, 8, true);
  const NtdMatrix bg = ntd_matrix(mesh, uniform_conductivity(mesh, 1.0), basis);
  const NtdMatrix fw = ntd_matrix(mesh, rasterize_region(mesh, disk_region(), 1.0, 2.0),
                                  basis);
  const NtdMatrix diff = ntd_difference(fw, bg);
  const SensitivityStack stack =
      sensitivity_stack(mesh, 1.0, basis, rasterize_balls(mesh, default_test_balls()));

  std::vector<std::uint8_t> prev;
  for (double delta : {1e-4, 1e-3, 5e-3}) {
    const NtdMatrix noisy = add_operator_noise(diff, delta, 7);
    const TestBallGrid scan = linearized_scan(noisy, stack, 0.5, delta, 0.5);
    if (!prev.empty())
      for (std::size_t k = 0; k < prev.size(); ++k)
        if (prev[k]) CHECK(scan.marked[k] == 1);
    prev = scan.marked;
  }
}

TEST_CASE("pixel bounds are positive, capped, and match the generalized spectrum") {
  const CrossedMesh mesh = build_crossed_grid(32);
  const CurrentBasis basis = make_current_basis(mesh, 12, true);
  const NtdMatrix bg = ntd_matrix(mesh, uniform_conductivity(mesh, 1.0), basis);
  const NtdMatrix fw = ntd_matrix(mesh, rasterize_region(mesh, disk_region(), 1.0, 2.0),
                                  basis);
  const SensitivityStack stack =
      sensitivity_stack(mesh, 1.0, basis, rasterize_pixels(mesh, 8));

  const double cbar = 0.5;
  const PixelBounds bounds = pixel_bounds(bg, fw, stack, cbar);
  REQUIRE(bounds.values.size() == 64);
  CHECK(bounds.cbar == cbar);
  for (int k = 0; k < 64; ++k) {
    CHECK(bounds.values[k] > 0.0);
    CHECK(bounds.values[k] <= cbar + 1e-15);
  }

  CHECK_THROWS_WITH_AS((void)pixel_bounds(fw, bg, stack, cbar),
                       doctest::Contains("monotonically consistent"), Error);
}

TEST_CASE("pixel bounds match the generalized eigenvalue formula") {
  // synthetic operators with a well separated spectrum, so the conditioning
  // shift stays inactive and the formula can be checked verbatim
  const int m = 6;
  std::mt19937_64 rng(123);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd q(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) q(i, j) = gauss(rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  const Eigen::MatrixXd orth = qr.householderQ();
  Eigen::VectorXd spec(m);
  for (int i = 0; i < m; ++i) spec[i] = 0.05 * std::pow(2.0, i);
  const Eigen::MatrixXd pos = orth * spec.asDiagonal() * orth.transpose();

  NtdMatrix bg, fw;
  bg.mat = pos;
  fw.mat = Eigen::MatrixXd::Zero(m, m);

  SensitivityStack stack;
  stack.m = m;
  stack.regions.kind = RegionIndex::Kind::Pixels;
  stack.regions.np = 2;
  stack.regions.tris.resize(4);
  for (int k = 0; k < 4; ++k) {
    Eigen::MatrixXd b(m, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) b(i, j) = gauss(rng);
    stack.matrices.push_back(-b * b.transpose());
  }

  const double cbar = 2.0;
  const PixelBounds bounds = pixel_bounds(bg, fw, stack, cbar);
  for (int k = 0; k < 4; ++k) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ref(stack.matrices[k],
                                                                  pos);
    REQUIRE(ref.info() == Eigen::Success);
    const double lam = ref.eigenvalues()[0];
    REQUIRE(lam < 0.0);
    CHECK(bounds.values[k] ==
          doctest::Approx(std::min(cbar, -1.0 / lam)).epsilon(1e-9));
  }
}

TEST_CASE("noisy pixel bounds require positive delta") {
  const CrossedMesh mesh = build_crossed_grid(16);
  const CurrentBasis basis = make_current_basis(mesh, 6, true);
  const NtdMatrix bg = ntd_matrix(mesh, uniform_conductivity(mesh, 1.0), basis);
  const NtdMatrix fw = ntd_matrix(mesh, rasterize_region(mesh, disk_region(), 1.0, 2.0),
                                  basis);
  const NtdMatrix noisy = add_operator_noise(ntd_difference(fw, bg), 0.01, 5);
  const SensitivityStack stack =
      sensitivity_stack(mesh, 1.0, basis, rasterize_pixels(mesh, 5));

  const PixelBounds bounds = pixel_bounds_noisy(noisy, 0.01, stack, 0.5);
  for (int k = 0; k < bounds.values.size(); ++k) {
    CHECK(bounds.values[k] > 0.0);
    CHECK(bounds.values[k] <= 0.5 + 1e-15);
  }
  CHECK_THROWS_AS((void)pixel_bounds_noisy(noisy, 0.0, stack, 0.5), Error);
}

TEST_CASE("simplified bounds are the constant cap") {
  const PixelBounds b = simplified_bounds(9, 0.5);
  REQUIRE(b.values.size() == 9);
  for (int k = 0; k < 9; ++k) CHECK(b.values[k] == 0.5);
}

TEST_CASE("regularized reconstruction concentrates on the inclusion") {
  const CrossedMesh mesh = build_crossed_grid(32);
  const CurrentBasis basis = make_current_basis(mesh, 12, true);
  const NtdMatrix bg = ntd_matrix(mesh, uniform_conductivity(mesh, 1.0), basis);
  const NtdMatrix fw = ntd_matrix(mesh, rasterize_region(mesh, disk_region(), 1.0, 2.0),
                                  basis);
  const NtdMatrix diff = ntd_difference(fw, bg);
  const SensitivityStack stack =
      sensitivity_stack(mesh, 1.0, basis, rasterize_pixels(mesh, 10));
  const PixelBounds bounds = pixel_bounds(bg, fw, stack, 0.5);
  const PixelPartition part = regularized_reconstruction(diff, stack, bounds);

  REQUIRE(part.np == 10);
  REQUIRE(part.coeffs.size() == 100);
  CHECK(part.cbar == 0.5);
  CHECK(part.qp_objective >= 0.0);
  CHECK(part.qp_sweeps >= 1);

  int on = 0;
  for (int k = 0; k < 100; ++k) {
    CHECK(part.coeffs[k] >= -1e-15);
    CHECK(part.coeffs[k] <= bounds.values[k] + 1e-15);
    CHECK((part.support[k] == 1) == (part.coeffs[k] > 1e-3 * part.cbar));
    if (part.support[k]) {
      ++on;
      const Vec2 center((k % 10 + 0.5) / 10.0, (k / 10 + 0.5) / 10.0);
      CHECK((center - Vec2(0.5, 0.5)).norm() < 0.2 + 0.25);
    }
  }
  CHECK(on >= 4);
}

TEST_CASE("scan input validation") {
  const CrossedMesh mesh = build_crossed_grid(16);
  const CurrentBasis basis = make_current_basis(mesh, 4, true);
  const NtdMatrix bg = ntd_matrix(mesh, uniform_conductivity(mesh, 1.0), basis);
  const NtdMatrix fw = ntd_matrix(mesh, rasterize_region(mesh, disk_region(), 1.0, 2.0),
                                  basis);
  const NtdMatrix diff = ntd_difference(fw, bg);
  const SensitivityStack pixel_stack =
      sensitivity_stack(mesh, 1.0, basis, rasterize_pixels(mesh, 4));
  // a pixel stack is not a ball stack
  CHECK_THROWS_AS((void)linearized_scan(diff, pixel_stack, 0.5, 0.0, 0.5), Error);

  const SensitivityStack ball_stack =
      sensitivity_stack(mesh, 1.0, basis, rasterize_balls(mesh, default_test_balls()));
  CHECK_THROWS_AS((void)linearized_scan(diff, ball_stack, 0.7, 0.0, 0.5), Error);
  CHECK_THROWS_AS((void)linearized_scan(diff, ball_stack, 0.5, -1e-3, 0.5), Error);
  // and a ball stack is not a pixel partition
  const PixelBounds bounds = simplified_bounds(ball_stack.regions.count(), 0.5);
  CHECK_THROWS_AS((void)regularized_reconstruction(diff, ball_stack, bounds), Error);
}

}  // TEST_SUITE
