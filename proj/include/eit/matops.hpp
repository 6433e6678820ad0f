#pragma once

#include <Eigen/Core>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

struct SymEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, A v_i = values_i v_i
};

// Cyclic Jacobi iteration; input must be symmetric to 1e-8 relative.
SymEigen sym_eigen(const Eigen::MatrixXd& a);
double lambda_min(const Eigen::MatrixXd& a);

struct SpdFactor {
  Eigen::MatrixXd l;  // lower triangular, A = L L^T
  // L^{-1} B by forward substitution
  Eigen::MatrixXd solve_lower(const Eigen::MatrixXd& b) const;
  // L^{-1} S L^{-T}
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& s) const;
};

SpdFactor cholesky_spd(const Eigen::MatrixXd& a);

// Spectral absolute value V |D| V^T.
Eigen::MatrixXd matrix_abs(const Eigen::MatrixXd& a);

// minimize ||target - sum_k a_k stack_k||_F^2 over 0 <= a_k <= upper_k
struct BoxQpProblem {
  std::vector<Eigen::MatrixXd> stack;
  Eigen::MatrixXd target;
  Eigen::VectorXd upper;
};

struct BoxQpSolution {
  Eigen::VectorXd coeffs;
  double objective = 0.0;
  double optimality = 0.0;  // sup-norm of the projected gradient
  int sweeps = 0;
};

class QpNoConvergence : public Error {
 public:
  QpNoConvergence(const std::string& what, BoxQpSolution last)
      : Error(what), last_solution(std::move(last)) {}
  BoxQpSolution last_solution;
};

// Cyclic coordinate descent with closed-form clipped updates. Converges for
// this convex box-constrained problem; a sweep that moves no coordinate is a
// fixed point at working precision and also returns. Throws QpNoConvergence
// (carrying the last iterate) if neither happens within max_sweeps.
BoxQpSolution solve_box_qp(const BoxQpProblem& problem, double tol = 1e-8,
                           int max_sweeps = 20000);

}  // namespace eit
