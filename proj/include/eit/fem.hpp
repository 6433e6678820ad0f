#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cstdint>
#include <memory>
#include <vector>

#include "eit/mesh.hpp"

namespace eit {

enum class BoundaryRole { Current, Voltage };

// Values attached to the boundary loop nodes of a CrossedMesh, in loop order.
struct BoundaryFunction {
  int n = 0;
  BoundaryRole role = BoundaryRole::Current;
  std::vector<double> values;
};

// Piecewise constant conductivity, one value per triangle, strictly positive.
struct ConductivityField {
  double sigma0 = 1.0;
  double sigma1 = 1.0;
  std::vector<double> values;
  std::vector<std::uint8_t> inclusion;  // optional indicator of the inclusion
};

ConductivityField uniform_conductivity(const CrossedMesh& mesh, double sigma0);
// Triangle belongs to the inclusion iff its centroid does.
ConductivityField rasterize_region(const CrossedMesh& mesh, const Region& region,
                                   double sigma0, double sigma1);
ConductivityField conductivity_from_mask(const CrossedMesh& mesh,
                                         const std::vector<std::uint8_t>& mask,
                                         double sigma0, double sigma1);

struct PotentialField {
  int n = 0;
  std::vector<double> values;  // one per mesh vertex
};

// Uniform trapezoid rule on the boundary loop: h * sum a_i b_i.
double boundary_inner_product(const CrossedMesh& mesh, const BoundaryFunction& a,
                              const BoundaryFunction& b);
double boundary_mean(const CrossedMesh& mesh, const BoundaryFunction& g);
BoundaryFunction trace(const CrossedMesh& mesh, const PotentialField& u,
                       BoundaryRole role = BoundaryRole::Voltage);

// Neumann problem div(sigma grad u) = 0, sigma du/dnu = g, zero-mean trace,
// enforced through a Lagrange multiplier on the bordered system.
class NeumannSolver {
 public:
  NeumannSolver(const CrossedMesh& mesh, const ConductivityField& sigma);
  PotentialField solve(const BoundaryFunction& g) const;

 private:
  const CrossedMesh& mesh_;
  int nv_ = 0;
  Eigen::SparseMatrix<double> system_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

// Dirichlet problem: boundary nodes pinned, interior solved.
class DirichletSolver {
 public:
  DirichletSolver(const CrossedMesh& mesh, const ConductivityField& sigma);
  PotentialField solve(const BoundaryFunction& f) const;

 private:
  const CrossedMesh& mesh_;
  std::vector<int> interior_index_;  // vertex -> interior index or -1
  std::vector<int> interior_nodes_;
  // couplings (interior index, boundary loop index, stiffness value)
  struct Coupling {
    int row;
    int loop;
    double value;
  };
  std::vector<Coupling> couplings_;
  Eigen::SparseMatrix<double> kii_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

PotentialField solve_neumann(const CrossedMesh& mesh, const ConductivityField& sigma,
                             const BoundaryFunction& g);
PotentialField solve_dirichlet(const CrossedMesh& mesh, const ConductivityField& sigma,
                               const BoundaryFunction& f);

Vec2 tri_gradient(const CrossedMesh& mesh, const std::vector<double>& nodal, int t);
// integral of sigma |grad u|^2 over the mesh
double energy(const CrossedMesh& mesh, const ConductivityField& sigma,
              const PotentialField& u);

void check_conductivity(const ConductivityField& sigma, int num_triangles);

}  // namespace eit
