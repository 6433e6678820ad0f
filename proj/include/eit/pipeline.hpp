#pragma once

#include <string>
#include <vector>

#include "eit/levelset.hpp"
#include "eit/monotonicity.hpp"

namespace eit {

struct Phantom {
  std::string name;
  Region region;
  double sigma0 = 1.0;
  double sigma1 = 2.0;
};

const std::vector<Phantom>& phantom_gallery();
const Phantom& find_phantom(const std::string& name);

struct ExperimentConfig {
  std::string phantom = "disk";
  double sigma0 = 1.0;
  double sigma1 = 2.0;
  int data_n = 128;
  int inversion_n = 64;
  int m = 23;           // currents for the monotonicity stage
  int levelset_m = 5;   // currents for the level-set stage
  int pixels = 10;
  double ball_radius = 0.05;
  double alpha = -1.0;  // <= 0 means the linearization bound sigma0 - sigma0^2/sigma1
  double cbar = -1.0;   // <= 0 means the same bound
  double delta = 0.0;   // operator noise
  double eta = 0.0;     // voltage noise
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string bound_mode = "minck";  // or "simplified"
  double dt_min = 1e-6;
  double shrink = 0.5;
  double stop_tol = 1e-4;
  int stop_window = 10;
  int max_iter = 300;
  int reinit_every = 5;
  std::string formula = "standard";  // or "identity"
  double sigma1_max = -1.0;  // <= 0 means 10 sigma0
  std::string outdir = "out";

  double effective_alpha() const;
  double effective_cbar() const;
  double effective_sigma1_max() const;
  DerivativeFormula derivative_formula() const;
  void validate() const;
  // sorted key=value lines for the run manifest
  std::vector<std::string> echo() const;
};

struct InitialGuess {
  std::vector<Primitive> primitives;
};

// Threshold the coefficient field at half its maximum, split into 4-connected
// components (at least 2 pixels each), and fit an ellipse per component from
// the weighted second moments, scaled to the component area. Near-circular
// fits degrade to circles. Shapes are shrunk if needed to stay inside the
// domain.
InitialGuess extract_initial_guess(const PixelPartition& partition);

struct ParameterResidual {
  double value = 0.0;       // sum_k [ energy(sigma_est, u_k) - <g_k, f_k> ]
  double derivative = 0.0;  // - sum_k integral over D of |grad u_k|^2
};

ParameterResidual parameter_residual(const CrossedMesh& mesh,
                                     const std::vector<std::uint8_t>& inclusion,
                                     double sigma0, double sigma1_est,
                                     const MeasurementSet& meas);

struct CombinedResult {
  NtdMatrix lam_background;
  NtdMatrix lam_sigma;
  NtdMatrix lam_diff;   // exact difference
  NtdMatrix lam_used;   // noisy when delta > 0, else the exact difference
  PixelBounds bounds;
  PixelPartition partition;
  InitialGuess guess;
  LevelSetField phi0;
  MeasurementSet measurements;
  DescentResult descent;
  double symmetric_difference = -1.0;  // vs the phantom, when measured
};

// Monotonicity initialization followed by level-set refinement with known
// sigma1.
CombinedResult combined_reconstruct(const ExperimentConfig& cfg, const Phantom& phantom);

struct SimultaneousResult {
  CombinedResult combined;
  double sigma1_final = 0.0;
  std::vector<double> sigma1_history;
};

// Same pipeline, but sigma1 is treated as unknown: after every accepted
// descent step one safeguarded Newton update of the energy-gap residual
// refines the estimate inside a shrinking bracket.
SimultaneousResult simultaneous_reconstruct(const ExperimentConfig& cfg,
                                            const Phantom& phantom);

}  // namespace eit
