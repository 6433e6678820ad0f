#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "eit/errors.hpp"
#include "eit/fem.hpp"
#include "eit/ntd.hpp"

namespace eit {

// Nodal values on the (n+1)^2 lattice of a CrossedMesh; the inclusion is
// {phi < 0}. Cell-center values are taken as the mean of the four corners.
struct LevelSetField {
  int n = 0;
  std::vector<double> phi;

  double at(int i, int j) const { return phi[j * (n + 1) + i]; }
  double& at(int i, int j) { return phi[j * (n + 1) + i]; }
  // bilinear interpolation on the lattice
  double interpolate(const Vec2& x) const;
};

// Pointwise minimum of the primitives' signed distances. Every shape must lie
// strictly inside the unit square. An empty list is an explicit "no
// inclusion" request and yields a positive constant field.
LevelSetField init_signed_distance(const std::vector<Primitive>& shapes,
                                   const CrossedMesh& mesh);

std::vector<std::uint8_t> inclusion_mask(const CrossedMesh& mesh,
                                         const LevelSetField& phi);
ConductivityField conductivity_from_levelset(const CrossedMesh& mesh,
                                             const LevelSetField& phi, double sigma0,
                                             double sigma1);

struct VelocityField {
  int n = 0;
  std::vector<Vec2> values;  // one per mesh vertex
  double max_abs() const;    // max over lattice nodes of max(|vx|, |vy|)
};

struct Measurement {
  BoundaryFunction g;
  BoundaryFunction f;
  // Noise-free trace of the same current through the homogeneous background,
  // simulated on the data mesh like f. Difference-form functionals pair f
  // against this reference so that discretization error common to both sides
  // cancels; it is the voltage analogue of the background operator the
  // monotonicity stage already consumes.
  BoundaryFunction f0;
};

// Current/voltage pairs on the reconstruction mesh, simulated on a finer data
// mesh so that inversion never sees its own discretization.
struct MeasurementSet {
  int data_n = 0;
  int recon_n = 0;
  double eta = 0.0;
  std::vector<Measurement> pairs;
};

BoundaryFunction resample_boundary(const CrossedMesh& from, const BoundaryFunction& f,
                                   const CrossedMesh& to);

MeasurementSet simulate_measurements(const CrossedMesh& data_mesh,
                                     const CrossedMesh& recon_mesh, const Region& inclusion,
                                     double sigma0, double sigma1, int m, double eta,
                                     std::uint64_t seed, bool allow_same_mesh = false);

struct KvSolution {
  double objective = 0.0;
  std::vector<PotentialField> u;  // Neumann solutions
  std::vector<PotentialField> v;  // Dirichlet solutions
  ConductivityField sigma;
};

// Kohn-Vogelius misfit: sum_k integral sigma |grad(u_k - v_k)|^2.
KvSolution kv_solve(const CrossedMesh& mesh, const ConductivityField& sigma,
                    const MeasurementSet& meas);
double kv_objective(const CrossedMesh& mesh, const ConductivityField& sigma,
                    const MeasurementSet& meas);

// A(W) = (div W) I - DW - DW^T is the transport Jacobian of the misfit; the
// identity variant replaces (div W) I by I and exists only for comparison.
enum class DerivativeFormula { Standard, IdentityVariant };

// Nodal load b with b[2a+d] = dJ(D; psi_a e_d): the distributed shape
// derivative sum_k integral sigma [A(W) grad v . grad v - A(W) grad u . grad u].
std::vector<double> shape_derivative_load(const CrossedMesh& mesh, const KvSolution& sol,
                                          DerivativeFormula formula = DerivativeFormula::Standard);
double shape_derivative_value(const CrossedMesh& mesh, const std::vector<double>& load,
                              const VelocityField& v);

// H1 smoothing: componentwise Poisson solves of integral DV : DW = -dJ(D; W)
// with zero boundary values. The factorization is reused across calls.
class VelocitySmoother {
 public:
  explicit VelocitySmoother(const CrossedMesh& mesh);
  VelocityField smooth(const std::vector<double>& load) const;

 private:
  const CrossedMesh& mesh_;
  std::vector<int> interior_index_;
  std::vector<int> interior_nodes_;
  Eigen::SparseMatrix<double> kii_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

VelocityField shape_gradient_velocity(const CrossedMesh& mesh, const KvSolution& sol,
                                      DerivativeFormula formula = DerivativeFormula::Standard);

class CflError : public Error {
 public:
  CflError(const std::string& what, double admissible_dt)
      : Error(what), admissible(admissible_dt) {}
  double admissible;
};

double cfl_timestep(const CrossedMesh& mesh, const VelocityField& v);
// Forward Euler step of phi_t + V . grad phi = 0 with a local Lax-Friedrichs
// Hamiltonian; rejects dt above the CFL bound 0.5 h / max|V|.
LevelSetField transport_levelset(const LevelSetField& phi, const VelocityField& v,
                                 double dt, double h);

// Fast-sweeping redistancing. Nodes adjacent to the zero level are frozen at
// first-order subcell distances; the rest is filled by Godunov sweeps. Signs
// never flip. A field without a zero crossing is returned unchanged.
LevelSetField reinitialize(const LevelSetField& phi);
// Fraction of near-interface lattice cells with |grad phi| in [0.5, 1.5].
double reinit_quality(const LevelSetField& phi);

struct Polyline {
  std::vector<Vec2> points;
  bool closed = false;
};

// Zero-level contour by marching on the four subtriangles of each lattice
// cell (center value = corner mean), so no ambiguous saddle cases arise.
std::vector<Polyline> zero_contour(const LevelSetField& phi);

struct DescentRecord {
  int iter = 0;
  double j_before = 0.0;
  double j_after = 0.0;
  double dt = 0.0;
  int rejects = 0;
  double sigma1 = 0.0;
};

struct DescentOptions {
  double sigma0 = 1.0;
  double sigma1 = 2.0;
  double dt_min = 1e-6;
  double shrink = 0.5;
  double stop_tol = 1e-4;
  int stop_window = 10;
  int max_iter = 300;
  int reinit_every = 5;
  DerivativeFormula formula = DerivativeFormula::Standard;
};

struct DescentResult {
  LevelSetField phi;
  std::vector<DescentRecord> records;
  double sigma1 = 0.0;
  double objective = 0.0;
  bool hit_max_iter = false;
  std::string stop_reason;
};

// Updates sigma1 after an accepted step; returns the refined value.
using Sigma1Update =
    std::function<double(int iter, const LevelSetField& phi, double sigma1)>;

// Level-set descent on the Kohn-Vogelius misfit with backtracking line search
// (strict decrease), periodic reinitialization folded into the accepted step,
// and a windowed relative-decrease stopping rule.
DescentResult levelset_reconstruct(const LevelSetField& phi0, const CrossedMesh& mesh,
                                   const MeasurementSet& meas, const DescentOptions& opts,
                                   const Sigma1Update& update_sigma1 = nullptr);

}  // namespace eit
