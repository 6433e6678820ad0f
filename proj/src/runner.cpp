#include "eit/runner.hpp"

#include <filesystem>
#include <sstream>

#include "eit/io.hpp"
#include "eit/version.hpp"

namespace eit {

namespace {

std::string manifest_text(const ExperimentConfig& cfg, const std::string& command) {
  std::ostringstream os;
  os << "command = " << command << '\n';
  os << "version = " << kVersion << '\n';
  for (const std::string& line : cfg.echo()) os << line << '\n';
  return os.str();
}

std::string joined(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.outdir) / name).string();
}

std::vector<Circle> ball_grid(const ExperimentConfig& cfg) {
  std::vector<Circle> balls;
  balls.reserve(static_cast<std::size_t>(cfg.pixels) * cfg.pixels);
  for (int j = 0; j < cfg.pixels; ++j)
    for (int i = 0; i < cfg.pixels; ++i)
      balls.push_back(
          {Vec2((i + 0.5) / cfg.pixels, (j + 0.5) / cfg.pixels), cfg.ball_radius});
  return balls;
}

std::vector<Vec2> pixel_centers(int np) {
  std::vector<Vec2> centers;
  centers.reserve(static_cast<std::size_t>(np) * np);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i) centers.emplace_back((i + 0.5) / np, (j + 0.5) / np);
  return centers;
}

struct SimulatedData {
  CrossedMesh data_mesh;
  CurrentBasis data_basis;
  NtdMatrix lam_background;
  NtdMatrix lam_sigma;
  NtdMatrix lam_diff;
};

// The monotonicity stage is single-mesh: the bound and test eigenproblems
// compare sensitivities against the measured operators direction by
// direction, and those ratios are only meaningful when both sides share one
// discretization.
SimulatedData simulate_ntd(const ExperimentConfig& cfg) {
  SimulatedData sim;
  sim.data_mesh = build_crossed_grid(cfg.data_n);
  sim.data_basis = make_current_basis(sim.data_mesh, cfg.m, true);
  const Phantom& phantom = find_phantom(cfg.phantom);
  const ConductivityField sigma_true =
      rasterize_region(sim.data_mesh, phantom.region, cfg.sigma0, cfg.sigma1);
  sim.lam_background = ntd_matrix(
      sim.data_mesh, uniform_conductivity(sim.data_mesh, cfg.sigma0), sim.data_basis);
  sim.lam_sigma = ntd_matrix(sim.data_mesh, sigma_true, sim.data_basis);
  sim.lam_diff = ntd_difference(sim.lam_sigma, sim.lam_background);
  return sim;
}

LevelSetField level_function_field(const Region& region, const CrossedMesh& mesh) {
  LevelSetField f;
  f.n = mesh.n;
  f.phi.resize(static_cast<std::size_t>(mesh.n + 1) * (mesh.n + 1));
  for (int j = 0; j <= mesh.n; ++j)
    for (int i = 0; i <= mesh.n; ++i)
      f.at(i, j) = region_level_function(region, mesh.vertices[mesh.grid_node(i, j)]);
  return f;
}

void write_partition(const ExperimentConfig& cfg, const PixelBounds& bounds,
                     const PixelPartition& partition) {
  const std::vector<Vec2> centers = pixel_centers(partition.np);
  std::vector<double> vals(centers.size());
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = bounds.values[k];
  write_grid_csv(joined(cfg, "grid_bounds.csv"), centers, vals);
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = partition.coeffs[k];
  write_grid_csv(joined(cfg, "grid_coeffs.csv"), centers, vals);
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = partition.support[k] ? 1.0 : 0.0;
  write_grid_csv(joined(cfg, "grid_support.csv"), centers, vals);
}

void write_descent(const ExperimentConfig& cfg, const CrossedMesh& mesh,
                   const LevelSetField& phi0, const DescentResult& descent) {
  write_contour_csv(joined(cfg, "contour_init.csv"), zero_contour(phi0));
  write_contour_csv(joined(cfg, "contour_final.csv"), zero_contour(descent.phi));
  const Phantom& phantom = find_phantom(cfg.phantom);
  write_contour_csv(joined(cfg, "contour_true.csv"),
                    zero_contour(level_function_field(phantom.region, mesh)));
  write_history_csv(joined(cfg, "history.csv"), descent.records);

  std::vector<Vec2> nodes(descent.phi.phi.size());
  for (int j = 0; j <= mesh.n; ++j)
    for (int i = 0; i <= mesh.n; ++i)
      nodes[mesh.grid_node(i, j)] = mesh.vertices[mesh.grid_node(i, j)];
  write_grid_csv(joined(cfg, "phi_final.csv"), nodes, descent.phi.phi);
}

std::string descent_summary(const DescentResult& descent, double symdiff) {
  std::ostringstream os;
  os << "objective = " << format_double(descent.objective) << '\n';
  os << "iterations = " << descent.records.size() << '\n';
  os << "stop_reason = " << descent.stop_reason << '\n';
  os << "symmetric_difference = " << format_double(symdiff) << '\n';
  return os.str();
}

}  // namespace

ScanArtifacts run_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  ScanArtifacts art;

  SimulatedData sim;
  try {
    sim = simulate_ntd(cfg);
    art.lam_background = sim.lam_background;
    art.lam_sigma = sim.lam_sigma;
    art.lam_used = cfg.delta > 0.0 ? add_operator_noise(sim.lam_diff, cfg.delta, cfg.seed)
                                   : sim.lam_diff;
  } catch (const Error& e) {
    throw StageError("forward", e.what());
  }

  try {
    const SensitivityStack ball_stack =
        sensitivity_stack(sim.data_mesh, cfg.sigma0, sim.data_basis,
                          rasterize_balls(sim.data_mesh, ball_grid(cfg)));
    const double amax = cfg.sigma0 - cfg.sigma0 * cfg.sigma0 / cfg.sigma1;
    art.scan = linearized_scan(art.lam_used, ball_stack, cfg.effective_alpha(), cfg.delta,
                               amax, cfg.pixels);
  } catch (const Error& e) {
    throw StageError("scan", e.what());
  }

  write_text_file(joined(cfg, "manifest.txt"), manifest_text(cfg, "scan"));
  save_ntd(joined(cfg, "ntd_background.txt"), art.lam_background);
  save_ntd(joined(cfg, "ntd_sigma.txt"), art.lam_sigma);
  save_ntd(joined(cfg, "ntd_diff.txt"),
           ntd_difference(art.lam_sigma, art.lam_background));
  if (cfg.delta > 0.0) save_ntd(joined(cfg, "ntd_noisy.txt"), art.lam_used);
  write_scan_csv(joined(cfg, "scan_balls.csv"), art.scan);
  return art;
}

RegularizeArtifacts run_regularize(const ExperimentConfig& cfg,
                                   const std::string& resume_diff) {
  cfg.validate();
  RegularizeArtifacts art;

  CrossedMesh data_mesh;
  CurrentBasis data_basis;
  NtdMatrix lam_background, lam_sigma, lam_diff;
  bool have_operators = false;
  try {
    if (resume_diff.empty()) {
      SimulatedData sim = simulate_ntd(cfg);
      data_mesh = std::move(sim.data_mesh);
      data_basis = std::move(sim.data_basis);
      lam_background = std::move(sim.lam_background);
      lam_sigma = std::move(sim.lam_sigma);
      lam_diff = std::move(sim.lam_diff);
      have_operators = true;
    } else {
      lam_diff = load_ntd(resume_diff);
      if (lam_diff.mat.rows() != cfg.m)
        throw Error("resumed difference has " + std::to_string(lam_diff.mat.rows()) +
                    " currents, configured m = " + std::to_string(cfg.m));
      data_mesh = build_crossed_grid(cfg.data_n);
      data_basis = make_current_basis(data_mesh, cfg.m, true);
    }
  } catch (const Error& e) {
    throw StageError("forward", e.what());
  }

  try {
    if (lam_diff.provenance == Provenance::Noisy)
      art.lam_used = lam_diff;  // keep the stored noise level
    else
      art.lam_used = cfg.delta > 0.0 ? add_operator_noise(lam_diff, cfg.delta, cfg.seed)
                                     : lam_diff;
  } catch (const Error& e) {
    throw StageError("noise", e.what());
  }

  SensitivityStack pixel_stack;
  try {
    pixel_stack = sensitivity_stack(data_mesh, cfg.sigma0, data_basis,
                                    rasterize_pixels(data_mesh, cfg.pixels));
  } catch (const Error& e) {
    throw StageError("sensitivity", e.what());
  }

  try {
    if (cfg.bound_mode == "simplified") {
      art.bounds = simplified_bounds(pixel_stack.regions.count(), cfg.effective_cbar());
    } else if (art.lam_used.provenance == Provenance::Noisy) {
      art.bounds =
          pixel_bounds_noisy(art.lam_used, art.lam_used.delta, pixel_stack,
                             cfg.effective_cbar());
    } else if (have_operators) {
      art.bounds =
          pixel_bounds(lam_background, lam_sigma, pixel_stack, cfg.effective_cbar());
    } else {
      // only the difference is on hand; its negation is the factor matrix
      NtdMatrix zero;
      zero.mat = Eigen::MatrixXd::Zero(lam_diff.mat.rows(), lam_diff.mat.cols());
      NtdMatrix as_sigma;
      as_sigma.mat = lam_diff.mat;
      art.bounds = pixel_bounds(zero, as_sigma, pixel_stack, cfg.effective_cbar());
    }
  } catch (const Error& e) {
    throw StageError("bounds", e.what());
  }

  try {
    art.partition = regularized_reconstruction(art.lam_used, pixel_stack, art.bounds);
  } catch (const Error& e) {
    throw StageError("regularize", e.what());
  }

  write_text_file(joined(cfg, "manifest.txt"), manifest_text(cfg, "regularize"));
  if (have_operators) {
    save_ntd(joined(cfg, "ntd_background.txt"), lam_background);
    save_ntd(joined(cfg, "ntd_sigma.txt"), lam_sigma);
    save_ntd(joined(cfg, "ntd_diff.txt"), lam_diff);
  }
  if (art.lam_used.provenance == Provenance::Noisy)
    save_ntd(joined(cfg, "ntd_noisy.txt"), art.lam_used);
  write_partition(cfg, art.bounds, art.partition);
  return art;
}

LevelsetArtifacts run_levelset(const ExperimentConfig& cfg,
                               const std::vector<Primitive>& init_shapes,
                               const std::string& resume_coeffs) {
  cfg.validate();
  LevelsetArtifacts art;

  const CrossedMesh inv_mesh = build_crossed_grid(cfg.inversion_n);
  try {
    if (!resume_coeffs.empty()) {
      const GridCsv grid = read_grid_csv(resume_coeffs);
      PixelPartition partition;
      partition.np = grid.np;
      partition.coeffs =
          Eigen::Map<const Eigen::VectorXd>(grid.values.data(), grid.values.size());
      const InitialGuess guess = extract_initial_guess(partition);
      if (guess.primitives.empty())
        throw Error("no component of at least two pixels above threshold");
      art.phi0 = init_signed_distance(guess.primitives, inv_mesh);
    } else if (!init_shapes.empty()) {
      art.phi0 = init_signed_distance(init_shapes, inv_mesh);
    } else {
      art.phi0 = init_signed_distance({Circle{Vec2(0.5, 0.5), 0.25}}, inv_mesh);
    }
  } catch (const Error& e) {
    throw StageError("initial-guess", e.what());
  }

  MeasurementSet meas;
  try {
    const CrossedMesh data_mesh = build_crossed_grid(cfg.data_n);
    const Phantom& phantom = find_phantom(cfg.phantom);
    meas = simulate_measurements(data_mesh, inv_mesh, phantom.region, cfg.sigma0,
                                 cfg.sigma1, cfg.levelset_m, cfg.eta,
                                 cfg.seed + 0x51ed270b8913b1b5ull);
  } catch (const Error& e) {
    throw StageError("measurements", e.what());
  }

  try {
    DescentOptions opts;
    opts.sigma0 = cfg.sigma0;
    opts.sigma1 = cfg.sigma1;
    opts.dt_min = cfg.dt_min;
    opts.shrink = cfg.shrink;
    opts.stop_tol = cfg.stop_tol;
    opts.stop_window = cfg.stop_window;
    opts.max_iter = cfg.max_iter;
    opts.reinit_every = cfg.reinit_every;
    opts.formula = cfg.derivative_formula();
    art.descent = levelset_reconstruct(art.phi0, inv_mesh, meas, opts);
  } catch (const Error& e) {
    throw StageError("levelset", e.what());
  }

  const Phantom& phantom = find_phantom(cfg.phantom);
  const LevelSetField& phi = art.descent.phi;
  art.symmetric_difference = symmetric_difference_area(
      [&](const Vec2& x) { return phi.interpolate(x) < 0.0; },
      [&](const Vec2& x) { return phantom.region.inside(x); }, 2048);

  write_text_file(joined(cfg, "manifest.txt"), manifest_text(cfg, "levelset"));
  write_descent(cfg, inv_mesh, art.phi0, art.descent);
  write_text_file(joined(cfg, "results.txt"),
                  descent_summary(art.descent, art.symmetric_difference));
  return art;
}

CombinedResult run_combined(const ExperimentConfig& cfg) {
  const Phantom& phantom = find_phantom(cfg.phantom);
  CombinedResult result = combined_reconstruct(cfg, phantom);

  write_text_file(joined(cfg, "manifest.txt"), manifest_text(cfg, "combined"));
  save_ntd(joined(cfg, "ntd_background.txt"), result.lam_background);
  save_ntd(joined(cfg, "ntd_sigma.txt"), result.lam_sigma);
  save_ntd(joined(cfg, "ntd_diff.txt"), result.lam_diff);
  if (cfg.delta > 0.0) save_ntd(joined(cfg, "ntd_noisy.txt"), result.lam_used);
  write_partition(cfg, result.bounds, result.partition);
  const CrossedMesh inv_mesh = build_crossed_grid(cfg.inversion_n);
  write_descent(cfg, inv_mesh, result.phi0, result.descent);
  write_text_file(joined(cfg, "results.txt"),
                  descent_summary(result.descent, result.symmetric_difference));
  return result;
}

SimultaneousResult run_simultaneous(const ExperimentConfig& cfg) {
  const Phantom& phantom = find_phantom(cfg.phantom);
  SimultaneousResult result = simultaneous_reconstruct(cfg, phantom);

  write_text_file(joined(cfg, "manifest.txt"), manifest_text(cfg, "simultaneous"));
  save_ntd(joined(cfg, "ntd_background.txt"), result.combined.lam_background);
  save_ntd(joined(cfg, "ntd_sigma.txt"), result.combined.lam_sigma);
  save_ntd(joined(cfg, "ntd_diff.txt"), result.combined.lam_diff);
  if (cfg.delta > 0.0) save_ntd(joined(cfg, "ntd_noisy.txt"), result.combined.lam_used);
  write_partition(cfg, result.combined.bounds, result.combined.partition);
  const CrossedMesh inv_mesh = build_crossed_grid(cfg.inversion_n);
  write_descent(cfg, inv_mesh, result.combined.phi0, result.combined.descent);

  std::ostringstream history;
  history << "step,sigma1\n";
  for (std::size_t k = 0; k < result.sigma1_history.size(); ++k)
    history << k << ',' << format_double(result.sigma1_history[k]) << '\n';
  write_text_file(joined(cfg, "sigma1_history.csv"), history.str());

  std::ostringstream extra;
  extra << descent_summary(result.combined.descent,
                           result.combined.symmetric_difference);
  extra << "sigma1_final = " << format_double(result.sigma1_final) << '\n';
  write_text_file(joined(cfg, "results.txt"), extra.str());
  return result;
}

}  // namespace eit
