#include "eit/fem.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "eit/errors.hpp"

namespace eit {

namespace {

constexpr double kResidualTol = 1e-10;

std::vector<Eigen::Triplet<double>> stiffness_triplets(const CrossedMesh& mesh,
                                                       const ConductivityField& sigma) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double w = sigma.values[t] * mesh.tri_area[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tri[i], tri[j], w * mesh.tri_grad[t][i].dot(mesh.tri_grad[t][j]));
  }
  return trips;
}

void check_boundary_function(const CrossedMesh& mesh, const BoundaryFunction& f) {
  if (f.n != mesh.n || static_cast<int>(f.values.size()) != 4 * mesh.n)
    throw Error("boundary function does not match the mesh");
}

}  // namespace

void check_conductivity(const ConductivityField& sigma, int num_triangles) {
  if (static_cast<int>(sigma.values.size()) != num_triangles)
    throw Error("conductivity does not match the mesh");
  for (double v : sigma.values)
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error("conductivity must be strictly positive");
}

ConductivityField uniform_conductivity(const CrossedMesh& mesh, double sigma0) {
  if (!(sigma0 > 0.0)) throw Error("conductivity must be strictly positive");
  ConductivityField field;
  field.sigma0 = sigma0;
  field.sigma1 = sigma0;
  field.values.assign(mesh.num_triangles(), sigma0);
  field.inclusion.assign(mesh.num_triangles(), 0);
  return field;
}

ConductivityField rasterize_region(const CrossedMesh& mesh, const Region& region,
                                   double sigma0, double sigma1) {
  if (!(sigma0 > 0.0) || !(sigma1 > 0.0))
    throw Error("conductivity must be strictly positive");
  ConductivityField field;
  field.sigma0 = sigma0;
  field.sigma1 = sigma1;
  field.values.assign(mesh.num_triangles(), sigma0);
  field.inclusion.assign(mesh.num_triangles(), 0);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    if (region.inside(mesh.centroid(t))) {
      field.values[t] = sigma1;
      field.inclusion[t] = 1;
    }
  }
  return field;
}

ConductivityField conductivity_from_mask(const CrossedMesh& mesh,
                                         const std::vector<std::uint8_t>& mask,
                                         double sigma0, double sigma1) {
  if (static_cast<int>(mask.size()) != mesh.num_triangles())
    throw Error("inclusion mask does not match the mesh");
  if (!(sigma0 > 0.0) || !(sigma1 > 0.0))
    throw Error("conductivity must be strictly positive");
  ConductivityField field;
  field.sigma0 = sigma0;
  field.sigma1 = sigma1;
  field.values.resize(mesh.num_triangles());
  field.inclusion = mask;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    field.values[t] = mask[t] ? sigma1 : sigma0;
  return field;
}

double boundary_inner_product(const CrossedMesh& mesh, const BoundaryFunction& a,
                              const BoundaryFunction& b) {
  check_boundary_function(mesh, a);
  check_boundary_function(mesh, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return mesh.h * s;
}

double boundary_mean(const CrossedMesh& mesh, const BoundaryFunction& g) {
  check_boundary_function(mesh, g);
  double s = 0.0;
  for (double v : g.values) s += v;
  return s / static_cast<double>(g.values.size());
}

BoundaryFunction trace(const CrossedMesh& mesh, const PotentialField& u,
                       BoundaryRole role) {
  if (u.n != mesh.n || static_cast<int>(u.values.size()) != mesh.num_vertices())
    throw Error("potential does not match the mesh");
  BoundaryFunction f;
  f.n = mesh.n;
  f.role = role;
  f.values.reserve(mesh.boundary_nodes.size());
  for (int v : mesh.boundary_nodes) f.values.push_back(u.values[v]);
  return f;
}

NeumannSolver::NeumannSolver(const CrossedMesh& mesh, const ConductivityField& sigma)
    : mesh_(mesh), nv_(mesh.num_vertices()) {
  check_conductivity(sigma, mesh.num_triangles());
  auto trips = stiffness_triplets(mesh, sigma);
  // bordered row/column enforcing the zero-mean trace
  for (int v : mesh.boundary_nodes) {
    trips.emplace_back(v, nv_, mesh.h);
    trips.emplace_back(nv_, v, mesh.h);
  }
  system_.resize(nv_ + 1, nv_ + 1);
  system_.setFromTriplets(trips.begin(), trips.end());
  system_.makeCompressed();
  lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
  lu_->compute(system_);
  if (lu_->info() != Eigen::Success) throw Error("Neumann system factorization failed");
}

PotentialField NeumannSolver::solve(const BoundaryFunction& g) const {
  check_boundary_function(mesh_, g);
  double linf = 0.0;
  for (double v : g.values) linf = std::max(linf, std::abs(v));
  const double mean = boundary_mean(mesh_, g);
  if (std::abs(mean) > 1e-8 * (linf + 1e-30))
    throw Error("incompatible Neumann datum: nonzero boundary mean");

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv_ + 1);
  for (std::size_t k = 0; k < mesh_.boundary_nodes.size(); ++k)
    rhs[mesh_.boundary_nodes[k]] = mesh_.h * g.values[k];

  Eigen::VectorXd x = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success) throw Error("Neumann solve failed");
  const double rnorm = (system_ * x - rhs).norm();
  if (rnorm > kResidualTol * std::max(rhs.norm(), 1e-30))
    throw Error("Neumann solve residual above tolerance");

  PotentialField u;
  u.n = mesh_.n;
  u.values.assign(x.data(), x.data() + nv_);
  return u;
}

DirichletSolver::DirichletSolver(const CrossedMesh& mesh, const ConductivityField& sigma)
    : mesh_(mesh) {
  check_conductivity(sigma, mesh.num_triangles());
  const int nv = mesh.num_vertices();
  interior_index_.assign(nv, -1);
  for (int v = 0; v < nv; ++v)
    if (mesh.boundary_index_of[v] < 0) {
      interior_index_[v] = static_cast<int>(interior_nodes_.size());
      interior_nodes_.push_back(v);
    }

  std::vector<Eigen::Triplet<double>> inner;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double w = sigma.values[t] * mesh.tri_area[t];
    for (int i = 0; i < 3; ++i) {
      const int ri = interior_index_[tri[i]];
      if (ri < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const double val = w * mesh.tri_grad[t][i].dot(mesh.tri_grad[t][j]);
        const int rj = interior_index_[tri[j]];
        if (rj >= 0)
          inner.emplace_back(ri, rj, val);
        else
          couplings_.push_back({ri, mesh.boundary_index_of[tri[j]], val});
      }
    }
  }
  const int ni = static_cast<int>(interior_nodes_.size());
  kii_.resize(ni, ni);
  kii_.setFromTriplets(inner.begin(), inner.end());
  kii_.makeCompressed();
  ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(kii_);
  if (ldlt_->info() != Eigen::Success)
    throw Error("Dirichlet system factorization failed");
}

PotentialField DirichletSolver::solve(const BoundaryFunction& f) const {
  check_boundary_function(mesh_, f);
  const int ni = static_cast<int>(interior_nodes_.size());
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
  for (const auto& c : couplings_) rhs[c.row] -= c.value * f.values[c.loop];
  Eigen::VectorXd x = ldlt_->solve(rhs);
  if (ldlt_->info() != Eigen::Success) throw Error("Dirichlet solve failed");
  const double rnorm = (kii_ * x - rhs).norm();
  if (rnorm > kResidualTol * std::max(rhs.norm(), 1e-30))
    throw Error("Dirichlet solve residual above tolerance");

  PotentialField u;
  u.n = mesh_.n;
  u.values.assign(mesh_.num_vertices(), 0.0);
  for (int k = 0; k < ni; ++k) u.values[interior_nodes_[k]] = x[k];
  for (std::size_t k = 0; k < mesh_.boundary_nodes.size(); ++k)
    u.values[mesh_.boundary_nodes[k]] = f.values[k];
  return u;
}

PotentialField solve_neumann(const CrossedMesh& mesh, const ConductivityField& sigma,
                             const BoundaryFunction& g) {
  return NeumannSolver(mesh, sigma).solve(g);
}

PotentialField solve_dirichlet(const CrossedMesh& mesh, const ConductivityField& sigma,
                               const BoundaryFunction& f) {
  return DirichletSolver(mesh, sigma).solve(f);
}

Vec2 tri_gradient(const CrossedMesh& mesh, const std::vector<double>& nodal, int t) {
  const auto& tri = mesh.triangles[t];
  return nodal[tri[0]] * mesh.tri_grad[t][0] + nodal[tri[1]] * mesh.tri_grad[t][1] +
         nodal[tri[2]] * mesh.tri_grad[t][2];
}

double energy(const CrossedMesh& mesh, const ConductivityField& sigma,
              const PotentialField& u) {
  check_conductivity(sigma, mesh.num_triangles());
  if (u.n != mesh.n || static_cast<int>(u.values.size()) != mesh.num_vertices())
    throw Error("potential does not match the mesh");
  double e = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    e += sigma.values[t] * mesh.tri_area[t] * tri_gradient(mesh, u.values, t).squaredNorm();
  return e;
}

}  // namespace eit
