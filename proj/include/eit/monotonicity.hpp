#pragma once

#include <cstdint>
#include <vector>

#include "eit/matops.hpp"
#include "eit/ntd.hpp"

namespace eit {

// 10 x 10 ball centers at the pixel midpoints of [0,1]^2, radius 0.05,
// row-major to match the pixel partition.
std::vector<Circle> default_test_balls();

// Nonlinear inclusion test: B lies in the inclusion iff
// Lam(sigma0 + alpha chi_B) - Lam(sigma) is PSD up to 1e-8 ||.||_F slack.
// Requires 0 < alpha <= sigma1 - sigma0.
bool standard_test(const CrossedMesh& mesh, const CurrentBasis& basis, double sigma0,
                   double sigma1, const NtdMatrix& lam_sigma, const Circle& ball,
                   double alpha);

struct TestBallGrid {
  std::vector<Circle> balls;
  std::vector<std::uint8_t> marked;
  int heat_np = 0;
  std::vector<int> heat;  // marked balls overlapping each pixel, row-major
};

// Linearized test over a ball family: ball k is marked iff
// alpha S_k - diff + delta I is PSD up to 1e-8 ||.||_F slack, where diff is
// Lam(sigma) - Lam(sigma0), exact or noisy. Requires 0 < alpha <= alpha_max.
TestBallGrid linearized_scan(const NtdMatrix& diff, const SensitivityStack& ball_stack,
                             double alpha, double delta, double alpha_max,
                             int heat_np = 10);

struct PixelBounds {
  Eigen::VectorXd values;  // min(cbar, c_k), all positive
  double cbar = 0.0;
};

// c_k = -1 / lambda_min(L^{-1} S_k L^{-T}) with L L^T = Lam(sigma0) - Lam(sigma).
// A spectral shift of 1e-10 ||.||_F absorbs a vanishing smallest eigenvalue;
// more negative input is rejected as monotonically inconsistent.
PixelBounds pixel_bounds(const NtdMatrix& lam_background, const NtdMatrix& lam_sigma,
                         const SensitivityStack& pixel_stack, double cbar);
// Noisy variant: L L^T = |Lam^delta| + delta I, delta > 0.
PixelBounds pixel_bounds_noisy(const NtdMatrix& noisy_diff, double delta,
                               const SensitivityStack& pixel_stack, double cbar);
// Box [0, cbar] on every pixel.
PixelBounds simplified_bounds(int count, double cbar);

struct PixelPartition {
  int np = 0;
  double cbar = 0.0;
  Eigen::VectorXd bounds;
  Eigen::VectorXd coeffs;
  std::vector<std::uint8_t> support;  // coeffs above 1e-3 cbar
  double qp_objective = 0.0;
  int qp_sweeps = 0;
};

// Monotonicity-regularized linearized reconstruction:
// minimize ||target - sum a_k S_k||_F^2 subject to 0 <= a_k <= bounds_k.
PixelPartition regularized_reconstruction(const NtdMatrix& target,
                                          const SensitivityStack& pixel_stack,
                                          const PixelBounds& bounds, double tol = 1e-8,
                                          int max_sweeps = 20000);

}  // namespace eit
