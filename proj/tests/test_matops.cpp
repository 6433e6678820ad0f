#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "eit/matops.hpp"

using namespace eit;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
  return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = random_symmetric(n, rng);
  return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

double qp_objective(const BoxQpProblem& problem, const Eigen::VectorXd& a) {
  Eigen::MatrixXd residual = problem.target;
  for (int k = 0; k < a.size(); ++k) residual -= a[k] * problem.stack[k];
  return residual.squaredNorm();
}

}  // namespace

TEST_SUITE("matops") {

TEST_CASE("jacobi eigendecomposition against Eigen") {
  std::mt19937_64 rng(7);
  for (int n : {2, 5, 20}) {
    const Eigen::MatrixXd a = random_symmetric(n, rng);
    const SymEigen mine = sym_eigen(a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    REQUIRE(ref.info() == Eigen::Success);
    for (int k = 0; k < n; ++k)
      CHECK(std::abs(mine.values[k] - ref.eigenvalues()[k]) < 1e-11 * a.norm());
    CHECK((mine.vectors.transpose() * mine.vectors -
           Eigen::MatrixXd::Identity(n, n)).norm() < 1e-12);
    CHECK((a * mine.vectors - mine.vectors * mine.values.asDiagonal()).norm() <
          1e-10 * std::max(1.0, a.norm()));
    // ascending order
    for (int k = 1; k < n; ++k) CHECK(mine.values[k] >= mine.values[k - 1]);
  }
}

TEST_CASE("asymmetric input is rejected") {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 2.0, 0.5, 1.0;
  CHECK_THROWS_AS((void)sym_eigen(a), Error);
}

TEST_CASE("lambda_min of a known matrix") {
  Eigen::MatrixXd a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  CHECK(lambda_min(a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cholesky factorization and failure") {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd a = random_spd(6, rng);
  const SpdFactor f = cholesky_spd(a);
  CHECK((f.l * f.l.transpose() - a).norm() < 1e-11 * a.norm());
  CHECK(f.l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().norm() == 0.0);

  Eigen::MatrixXd indef = a;
  indef(2, 2) = -5.0;
  CHECK_THROWS_WITH_AS((void)cholesky_spd(indef),
                       doctest::Contains("not positive definite"), Error);
}

TEST_CASE("whitening reproduces generalized eigenvalues") {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd a = random_spd(8, rng);
  const Eigen::MatrixXd s = random_symmetric(8, rng);
  const SpdFactor f = cholesky_spd(a);
  const SymEigen mine = sym_eigen(f.whiten(s));
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ref(s, a);
  REQUIRE(ref.info() == Eigen::Success);
  const double scale = std::abs(ref.eigenvalues()[0]) + std::abs(ref.eigenvalues()[7]);
  for (int k = 0; k < 8; ++k)
    CHECK(std::abs(mine.values[k] - ref.eigenvalues()[k]) < 1e-10 * scale);
}

TEST_CASE("matrix absolute value") {
  std::mt19937_64 rng(19);
  const Eigen::MatrixXd s = random_symmetric(7, rng);
  const Eigen::MatrixXd abs_s = matrix_abs(s);
  CHECK(lambda_min(abs_s) >= -1e-12);
  CHECK((abs_s * abs_s - s * s).norm() < 1e-10 * std::max(1.0, s.squaredNorm()));

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
  d.diagonal() << -2.0, 0.5, -0.25;
  const Eigen::MatrixXd abs_d = matrix_abs(d);
  CHECK(abs_d(0, 0) == doctest::Approx(2.0));
  CHECK(abs_d(1, 1) == doctest::Approx(0.5));
  CHECK(abs_d(2, 2) == doctest::Approx(0.25));
}

TEST_CASE("box qp recovers an interior combination exactly") {
  std::mt19937_64 rng(23);
  BoxQpProblem problem;
  for (int k = 0; k < 3; ++k) problem.stack.push_back(random_symmetric(5, rng));
  Eigen::VectorXd truth(3);
  truth << 0.3, 0.55, 0.2;
  problem.target = Eigen::MatrixXd::Zero(5, 5);
  for (int k = 0; k < 3; ++k) problem.target += truth[k] * problem.stack[k];
  problem.upper = Eigen::VectorXd::Constant(3, 1.0);

  const BoxQpSolution sol = solve_box_qp(problem);
  for (int k = 0; k < 3; ++k)
    CHECK(sol.coeffs[k] == doctest::Approx(truth[k]).epsilon(1e-6));
  CHECK(sol.objective < 1e-12);
  CHECK(sol.optimality <= 1e-8);
}

TEST_CASE("box qp respects active bounds") {
  std::mt19937_64 rng(29);
  BoxQpProblem problem;
  for (int k = 0; k < 4; ++k) problem.stack.push_back(random_symmetric(4, rng));
  // target far outside the reachable box
  problem.target = 5.0 * problem.stack[0] + 4.0 * problem.stack[1];
  problem.upper = Eigen::VectorXd::Constant(4, 0.5);
  const BoxQpSolution sol = solve_box_qp(problem);
  for (int k = 0; k < 4; ++k) {
    CHECK(sol.coeffs[k] >= -1e-15);
    CHECK(sol.coeffs[k] <= 0.5 + 1e-15);
  }
  CHECK(sol.optimality <= 1e-8);
}

TEST_CASE("box qp matches a dense grid search") {
  std::mt19937_64 rng(31);
  for (int inst = 0; inst < 2; ++inst) {
    BoxQpProblem problem;
    for (int k = 0; k < 3; ++k) problem.stack.push_back(random_symmetric(4, rng));
    problem.target = random_symmetric(4, rng);
    problem.upper = Eigen::VectorXd::Constant(3, 0.8);

    const BoxQpSolution sol = solve_box_qp(problem);

    const double step = 2e-2;
    double best = 1e300;
    const int steps = static_cast<int>(0.8 / step) + 1;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j)
        for (int k = 0; k <= steps; ++k) {
          Eigen::VectorXd a(3);
          a << std::min(0.8, i * step), std::min(0.8, j * step),
              std::min(0.8, k * step);
          best = std::min(best, qp_objective(problem, a));
        }
    CHECK(sol.objective <= best + 1e-9);
    // the grid point nearest the optimum bounds the gap by the curvature
    Eigen::MatrixXd gram(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        gram(i, j) = (problem.stack[i].cwiseProduct(problem.stack[j])).sum();
    const double gap = gram.operatorNorm() * 3.0 * (step / 2.0) * (step / 2.0) +
                       sol.optimality * step * 3.0;
    CHECK(best - sol.objective <= gap + 1e-12);
  }
}

TEST_CASE("degenerate qp inputs") {
  BoxQpProblem problem;
  problem.stack.push_back(Eigen::MatrixXd::Zero(3, 3));
  problem.target = Eigen::MatrixXd::Identity(3, 3);
  problem.upper = Eigen::VectorXd::Constant(1, 1.0);
  CHECK_THROWS_AS((void)solve_box_qp(problem), Error);

  BoxQpProblem empty;
  empty.target = Eigen::MatrixXd::Identity(3, 3);
  empty.upper = Eigen::VectorXd();
  CHECK_THROWS_AS((void)solve_box_qp(empty), Error);
}

TEST_CASE("qp non-convergence carries the last iterate") {
  std::mt19937_64 rng(37);
  BoxQpProblem problem;
  for (int k = 0; k < 3; ++k) problem.stack.push_back(random_symmetric(5, rng));
  problem.target = random_symmetric(5, rng);
  problem.upper = Eigen::VectorXd::Constant(3, 1.0);
  try {
    (void)solve_box_qp(problem, 0.0, 1);  // unattainable tolerance
    FAIL("expected QpNoConvergence");
  } catch (const QpNoConvergence& e) {
    CHECK(e.last_solution.coeffs.size() == 3);
    for (int k = 0; k < 3; ++k) {
      CHECK(e.last_solution.coeffs[k] >= 0.0);
      CHECK(e.last_solution.coeffs[k] <= 1.0);
    }
  }
}

}  // TEST_SUITE
