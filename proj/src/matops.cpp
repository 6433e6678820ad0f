#include "eit/matops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace eit {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymEigen sym_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error("eigensolver needs a square matrix");
  const int n = static_cast<int>(a.rows());
  const double scale = a.norm();
  if ((a - a.transpose()).norm() > 1e-8 * (scale + 1e-30))
    throw Error("eigensolver needs a symmetric matrix");

  Eigen::MatrixXd w = 0.5 * (a + a.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double stop = 1e-12 * (scale + 1e-300);

  for (int sweep = 0; sweep < 60 && off_diagonal_norm(w) > stop; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double tau = (w(q, q) - w(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // two-sided rotation in the (p, q) plane
        for (int k = 0; k < n; ++k) {
          const double wkp = w(k, p), wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(k, q) = s * wkp + c * wkq;
        }
        for (int k = 0; k < n; ++k) {
          const double wpk = w(p, k), wqk = w(q, k);
          w(p, k) = c * wpk - s * wqk;
          w(q, k) = s * wpk + c * wqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_diagonal_norm(w) > stop && scale > 0.0)
    throw Error("Jacobi iteration did not converge");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return w(i, i) < w(j, j); });

  SymEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[k] = w(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double lambda_min(const Eigen::MatrixXd& a) { return sym_eigen(a).values[0]; }

Eigen::MatrixXd SpdFactor::solve_lower(const Eigen::MatrixXd& b) const {
  return l.triangularView<Eigen::Lower>().solve(b);
}

Eigen::MatrixXd SpdFactor::whiten(const Eigen::MatrixXd& s) const {
  const Eigen::MatrixXd x = solve_lower(s);
  return solve_lower(x.transpose());
}

SpdFactor cholesky_spd(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error("Cholesky needs a square matrix");
  const int n = static_cast<int>(a.rows());
  if ((a - a.transpose()).norm() > 1e-8 * (a.norm() + 1e-30))
    throw Error("Cholesky needs a symmetric matrix");

  SpdFactor f;
  f.l = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= f.l(j, k) * f.l(j, k);
    if (!(d > 0.0)) throw Error("matrix is not positive definite");
    f.l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= f.l(i, k) * f.l(j, k);
      f.l(i, j) = s / f.l(j, j);
    }
  }
  return f;
}

Eigen::MatrixXd matrix_abs(const Eigen::MatrixXd& a) {
  const SymEigen eig = sym_eigen(a);
  return eig.vectors * eig.values.cwiseAbs().asDiagonal() * eig.vectors.transpose();
}

BoxQpSolution solve_box_qp(const BoxQpProblem& problem, double tol, int max_sweeps) {
  const int n = static_cast<int>(problem.stack.size());
  if (n == 0) throw Error("empty matrix stack");
  if (static_cast<int>(problem.upper.size()) != n)
    throw Error("bounds do not match the stack");
  for (int k = 0; k < n; ++k) {
    if (problem.stack[k].rows() != problem.target.rows() ||
        problem.stack[k].cols() != problem.target.cols())
      throw Error("stack matrix shape does not match the target");
    if (!(problem.upper[k] >= 0.0)) throw Error("upper bounds must be nonnegative");
  }

  // Everything reduces to the Gram form: objective(a) = const - 2 b.a + a.G a.
  Eigen::MatrixXd gram(n, n);
  Eigen::VectorXd b(n);
  for (int k = 0; k < n; ++k) {
    b[k] = (problem.stack[k].array() * problem.target.array()).sum();
    for (int j = 0; j <= k; ++j) {
      const double gkj = (problem.stack[k].array() * problem.stack[j].array()).sum();
      gram(k, j) = gkj;
      gram(j, k) = gkj;
    }
    if (!(gram(k, k) > 0.0)) throw Error("stack contains a zero matrix");
  }
  const double target_sq = problem.target.squaredNorm();

  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ga = Eigen::VectorXd::Zero(n);  // G a, kept incrementally
  auto objective = [&]() { return target_sq - 2.0 * b.dot(a) + a.dot(ga); };
  auto projected_gradient = [&]() {
    double pg = 0.0;
    for (int k = 0; k < n; ++k) {
      const double g = 2.0 * (ga[k] - b[k]);
      double step = -g;
      if (a[k] <= 0.0) step = std::max(step, 0.0);
      if (a[k] >= problem.upper[k]) step = std::min(step, 0.0);
      pg = std::max(pg, std::abs(step));
    }
    return pg;
  };

  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    // the incremental product drifts over many sweeps; refresh once per sweep
    ga.noalias() = gram * a;
    bool moved = false;
    for (int k = 0; k < n; ++k) {
      // unconstrained minimizer in coordinate k, then clipped to the box
      const double num = b[k] - ga[k] + a[k] * gram(k, k);
      double cand = num / gram(k, k);
      cand = std::clamp(cand, 0.0, problem.upper[k]);
      const double delta = cand - a[k];
      if (delta != 0.0) {
        a[k] = cand;
        ga += delta * gram.col(k);
        moved = true;
      }
    }
    const double pg = projected_gradient();
    // a sweep that moves nothing is a fixed point at working precision
    if (pg <= tol || !moved) {
      BoxQpSolution sol{a, objective(), pg, sweep + 1};
      return sol;
    }
  }

  BoxQpSolution last{a, objective(), projected_gradient(), sweep};
  throw QpNoConvergence("coordinate descent did not reach the requested tolerance",
                        std::move(last));
}

}  // namespace eit
