#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "eit/fem.hpp"

namespace eit {

// Trigonometric boundary currents: the k-th member is
//   sin(k pi y) on {x=0} - sin(k pi y) on {x=1}
// + cos(k pi x) on {y=0} - cos(k pi x) on {y=1},
// sampled at the boundary loop nodes. Corner nodes accumulate both sides.
struct CurrentBasis {
  int n = 0;
  int m = 0;
  bool orthonormal = false;
  std::vector<BoundaryFunction> currents;
  // Row k holds the coefficients of currents[k] over the raw family above;
  // identity when no orthonormalization was applied. Lets the same combined
  // currents be sampled on another mesh.
  Eigen::MatrixXd combo;
};

CurrentBasis make_current_basis(const CrossedMesh& mesh, int m, bool orthonormalize);
// Samples the raw family on `mesh` and applies basis.combo.
CurrentBasis transfer_basis(const CrossedMesh& mesh, const CurrentBasis& basis);

enum class Provenance { Exact, Difference, Sensitivity, Noisy };

std::string provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

struct NtdMatrix {
  Eigen::MatrixXd mat;
  Provenance provenance = Provenance::Exact;
  double delta = 0.0;
};

// Galerkin Neumann-to-Dirichlet matrix: entry (i,j) = <g_j, trace u_i> with
// the boundary trapezoid pairing; symmetrized.
NtdMatrix ntd_matrix(const CrossedMesh& mesh, const ConductivityField& sigma,
                     const CurrentBasis& basis);
// lam_sigma - lam_background
NtdMatrix ntd_difference(const NtdMatrix& lam_sigma, const NtdMatrix& lam_background);

// Triangle index sets for a family of test regions, by the centroid rule.
struct RegionIndex {
  enum class Kind { Balls, Pixels };
  Kind kind = Kind::Pixels;
  int np = 0;                   // pixels per side when kind == Pixels
  std::vector<Circle> balls;    // when kind == Balls
  std::vector<Vec2> centers;
  std::vector<std::vector<int>> tris;
  int count() const { return static_cast<int>(tris.size()); }
};

RegionIndex rasterize_balls(const CrossedMesh& mesh, const std::vector<Circle>& balls);
RegionIndex rasterize_pixels(const CrossedMesh& mesh, int np);

// S_R(i,j) = - integral over R of grad u_i . grad u_j at background sigma0;
// the derivative of the NtD quadratic form for a perturbation supported on R.
struct SensitivityStack {
  int m = 0;
  double sigma0 = 1.0;
  RegionIndex regions;
  std::vector<Eigen::MatrixXd> matrices;
};

SensitivityStack sensitivity_stack(const CrossedMesh& mesh, double sigma0,
                                   const CurrentBasis& basis, const RegionIndex& regions);
NtdMatrix sensitivity_matrix(const CrossedMesh& mesh, double sigma0,
                             const CurrentBasis& basis, const std::vector<int>& tris);

// diff + delta ||diff||_F E / ||E||_F with E a symmetrized iid Gaussian draw.
NtdMatrix add_operator_noise(const NtdMatrix& diff, double delta, std::uint64_t seed);
// f + iid N(0, (eta ||f||_inf)^2) per node.
BoundaryFunction add_voltage_noise(const BoundaryFunction& f, double eta,
                                   std::uint64_t seed);

void save_ntd(const std::string& path, const NtdMatrix& m);
NtdMatrix load_ntd(const std::string& path);

}  // namespace eit
