#include "eit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

#include "eit/io.hpp"

namespace eit {

const std::vector<Phantom>& phantom_gallery() {
  static const std::vector<Phantom> gallery = [] {
    std::vector<Phantom> g;

    Phantom disk;
    disk.name = "disk";
    disk.region.add.push_back(Circle{Vec2(0.5, 0.5), 0.2});
    g.push_back(disk);

    Phantom square;
    square.name = "square";
    square.region.add.push_back(Rect{Vec2(0.5, 0.5), 0.15, 0.15});
    g.push_back(square);

    // concave inclusion: an ellipse with a disk-shaped bite from below
    Phantom kite;
    kite.name = "kite";
    kite.region.add.push_back(Ellipse{Vec2(0.5, 0.5), 0.25, 0.15, 0.0});
    kite.region.subtract.push_back(Circle{Vec2(0.5, 0.38), 0.13});
    g.push_back(kite);

    Phantom pair;
    pair.name = "pair";
    pair.region.add.push_back(Circle{Vec2(0.32, 0.66), 0.12});
    pair.region.add.push_back(Rect{Vec2(0.68, 0.32), 0.11, 0.11});
    g.push_back(pair);

    return g;
  }();
  return gallery;
}

const Phantom& find_phantom(const std::string& name) {
  for (const auto& p : phantom_gallery())
    if (p.name == name) return p;
  throw Error("unknown phantom '" + name + "'");
}

double ExperimentConfig::effective_alpha() const {
  return alpha > 0.0 ? alpha : sigma0 - sigma0 * sigma0 / sigma1;
}

double ExperimentConfig::effective_cbar() const {
  return cbar > 0.0 ? cbar : sigma0 - sigma0 * sigma0 / sigma1;
}

double ExperimentConfig::effective_sigma1_max() const {
  return sigma1_max > 0.0 ? sigma1_max : 10.0 * sigma0;
}

DerivativeFormula ExperimentConfig::derivative_formula() const {
  if (formula == "standard") return DerivativeFormula::Standard;
  if (formula == "identity") return DerivativeFormula::IdentityVariant;
  throw Error("unknown derivative formula '" + formula + "'");
}

void ExperimentConfig::validate() const {
  find_phantom(phantom);
  if (!(sigma0 > 0.0) || !(sigma1 > sigma0)) throw Error("need 0 < sigma0 < sigma1");
  if (inversion_n < 2) throw Error("inversion grid too coarse");
  if (data_n < inversion_n) throw Error("data grid must be at least the inversion grid");
  if (data_n % inversion_n != 0)
    throw Error("data grid must be a multiple of the inversion grid");
  if (m < 1 || levelset_m < 1) throw Error("current counts must be positive");
  if (pixels < 1) throw Error("pixel count must be positive");
  if (!(ball_radius > 0.0)) throw Error("ball radius must be positive");
  if (delta < 0.0 || eta < 0.0) throw Error("noise levels must be nonnegative");
  const double amax = sigma0 - sigma0 * sigma0 / sigma1;
  if (effective_alpha() > amax + 1e-12)
    throw Error("alpha exceeds the linearization bound sigma0 - sigma0^2/sigma1");
  if (bound_mode != "minck" && bound_mode != "simplified")
    throw Error("unknown bound mode '" + bound_mode + "'");
  derivative_formula();
  if ((delta > 0.0 || eta > 0.0) && !seed_given)
    throw Error("noisy runs require an explicit seed");
  if (!(effective_sigma1_max() > sigma0)) throw Error("sigma1_max must exceed sigma0");
}

std::vector<std::string> ExperimentConfig::echo() const {
  std::vector<std::string> lines;
  auto put = [&](const std::string& key, const std::string& value) {
    lines.push_back(key + " = " + value);
  };
  put("alpha", format_double(effective_alpha()));
  put("ball_radius", format_double(ball_radius));
  put("bound_mode", bound_mode);
  put("cbar", format_double(effective_cbar()));
  put("data_n", std::to_string(data_n));
  put("delta", format_double(delta));
  put("dt_min", format_double(dt_min));
  put("eta", format_double(eta));
  put("formula", formula);
  put("inversion_n", std::to_string(inversion_n));
  put("levelset_m", std::to_string(levelset_m));
  put("m", std::to_string(m));
  put("max_iter", std::to_string(max_iter));
  put("phantom", phantom);
  put("pixels", std::to_string(pixels));
  put("reinit_every", std::to_string(reinit_every));
  put("seed", std::to_string(seed));
  put("shrink", format_double(shrink));
  put("sigma0", format_double(sigma0));
  put("sigma1", format_double(sigma1));
  put("sigma1_max", format_double(effective_sigma1_max()));
  put("stop_tol", format_double(stop_tol));
  put("stop_window", std::to_string(stop_window));
  return lines;
}

namespace {

// moment-based ellipse fit of one connected pixel component
Primitive fit_component(const std::vector<int>& pixels, const Eigen::VectorXd& coeffs,
                        int np) {
  const double w = 1.0 / np;
  double mass = 0.0;
  Vec2 center = Vec2::Zero();
  for (int k : pixels) {
    const double a = coeffs[k];
    mass += a;
    center += a * Vec2((k % np + 0.5) * w, (k / np + 0.5) * w);
  }
  center /= mass;

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int k : pixels) {
    const Vec2 d = Vec2((k % np + 0.5) * w, (k / np + 0.5) * w) - center;
    cov += coeffs[k] * d * d.transpose();
  }
  cov /= mass;
  cov += (w * w / 12.0) * Eigen::Matrix2d::Identity();  // pixel self-moment

  SymEigen eig = sym_eigen(cov);
  const double lam_small = std::max(eig.values[0], 1e-16);
  const double lam_big = std::max(eig.values[1], lam_small);
  double semi_b = 2.0 * std::sqrt(lam_small);
  double semi_a = 2.0 * std::sqrt(lam_big);

  // rescale so the fitted shape carries the component area
  const double area = static_cast<double>(pixels.size()) * w * w;
  const double scale = std::sqrt(area / (std::numbers::pi * semi_a * semi_b));
  semi_a *= scale;
  semi_b *= scale;

  // keep the shape strictly inside the domain
  const double margin = 0.02;
  const double reach = std::min({center.x() - margin, center.y() - margin,
                                 1.0 - margin - center.x(), 1.0 - margin - center.y()});
  if (semi_a > reach && reach > 0.0) {
    const double shrink = reach / semi_a;
    semi_a *= shrink;
    semi_b *= shrink;
  }

  if (semi_a / semi_b <= 1.25)
    return Circle{center, std::sqrt(semi_a * semi_b)};
  const Vec2 axis = eig.vectors.col(1);
  return Ellipse{center, semi_a, semi_b, std::atan2(axis.y(), axis.x())};
}

}  // namespace

InitialGuess extract_initial_guess(const PixelPartition& partition) {
  const int np = partition.np;
  if (np < 1) throw Error("partition has no pixel grid");
  const double peak = partition.coeffs.size() ? partition.coeffs.maxCoeff() : 0.0;
  if (!(peak > 0.0)) throw Error("empty monotonicity reconstruction");

  const double threshold = 0.5 * peak;
  std::vector<char> mask(np * np, 0);
  for (int k = 0; k < partition.coeffs.size(); ++k)
    mask[k] = partition.coeffs[k] >= threshold ? 1 : 0;

  InitialGuess guess;
  std::vector<char> seen(np * np, 0);
  for (int start = 0; start < np * np; ++start) {
    if (!mask[start] || seen[start]) continue;
    std::vector<int> component;
    std::queue<int> queue;
    queue.push(start);
    seen[start] = 1;
    while (!queue.empty()) {
      const int k = queue.front();
      queue.pop();
      component.push_back(k);
      const int i = k % np, j = k / np;
      const int neighbors[4] = {i > 0 ? k - 1 : -1, i < np - 1 ? k + 1 : -1,
                                j > 0 ? k - np : -1, j < np - 1 ? k + np : -1};
      for (int nb : neighbors)
        if (nb >= 0 && mask[nb] && !seen[nb]) {
          seen[nb] = 1;
          queue.push(nb);
        }
    }
    if (component.size() < 2) continue;  // single pixels are treated as artifacts
    guess.primitives.push_back(fit_component(component, partition.coeffs, np));
  }
  return guess;
}

ParameterResidual parameter_residual(const CrossedMesh& mesh,
                                     const std::vector<std::uint8_t>& inclusion,
                                     double sigma0, double sigma1_est,
                                     const MeasurementSet& meas) {
  if (!(sigma1_est > sigma0))
    throw Error("sigma1 estimate must exceed the background");
  if (meas.recon_n != mesh.n) throw Error("measurements do not match the mesh");

  const ConductivityField sigma =
      conductivity_from_mask(mesh, inclusion, sigma0, sigma1_est);
  const ConductivityField sigma_bg = uniform_conductivity(mesh, sigma0);
  NeumannSolver solver(mesh, sigma);
  NeumannSolver bg_solver(mesh, sigma_bg);

  // Each term carries its background twin subtracted: the twin is identically
  // zero by the energy identity whenever data and model share a mesh, and on
  // split meshes it cancels the quadrature error common to both solves, which
  // otherwise dwarfs the inclusion signal near the root.
  ParameterResidual out;
  for (const auto& pair : meas.pairs) {
    const PotentialField u = solver.solve(pair.g);
    double inclusion_energy = 0.0;
    double total = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
      const double e = mesh.tri_area[t] * tri_gradient(mesh, u.values, t).squaredNorm();
      total += sigma.values[t] * e;
      if (inclusion[t]) inclusion_energy += e;
    }
    const PotentialField u0 = bg_solver.solve(pair.g);
    const double bg_total = energy(mesh, sigma_bg, u0);
    out.value += total - boundary_inner_product(mesh, pair.g, pair.f);
    out.value -= bg_total - boundary_inner_product(mesh, pair.g, pair.f0);
    out.derivative -= inclusion_energy;
  }
  return out;
}

namespace {

struct PipelineState {
  CrossedMesh data_mesh;  // monotonicity stage: operators, bounds, QP
  CrossedMesh inv_mesh;   // level-set stage
  CurrentBasis data_basis;  // orthonormalized on the data mesh
};

// The monotonicity stage is single-mesh on the data grid: the bound and test
// eigenproblems compare sensitivities against the measured operators
// direction by direction, and those ratios are only meaningful when both
// sides share one discretization. The level-set stage keeps the two-mesh
// protocol through simulate_measurements.
PipelineState build_state(const ExperimentConfig& cfg) {
  PipelineState st;
  st.data_mesh = build_crossed_grid(cfg.data_n);
  st.inv_mesh = build_crossed_grid(cfg.inversion_n);
  st.data_basis = make_current_basis(st.data_mesh, cfg.m, true);
  return st;
}

}  // namespace

CombinedResult combined_reconstruct(const ExperimentConfig& cfg, const Phantom& phantom) {
  cfg.validate();
  CombinedResult result;

  PipelineState st;
  try {
    st = build_state(cfg);
    const ConductivityField sigma_true =
        rasterize_region(st.data_mesh, phantom.region, cfg.sigma0, cfg.sigma1);
    result.lam_background =
        ntd_matrix(st.data_mesh, uniform_conductivity(st.data_mesh, cfg.sigma0),
                   st.data_basis);
    result.lam_sigma = ntd_matrix(st.data_mesh, sigma_true, st.data_basis);
    result.lam_diff = ntd_difference(result.lam_sigma, result.lam_background);
  } catch (const Error& e) {
    throw StageError("forward", e.what());
  }

  try {
    result.lam_used = cfg.delta > 0.0
                          ? add_operator_noise(result.lam_diff, cfg.delta, cfg.seed)
                          : result.lam_diff;
  } catch (const Error& e) {
    throw StageError("noise", e.what());
  }

  SensitivityStack pixel_stack;
  try {
    pixel_stack = sensitivity_stack(st.data_mesh, cfg.sigma0, st.data_basis,
                                    rasterize_pixels(st.data_mesh, cfg.pixels));
  } catch (const Error& e) {
    throw StageError("sensitivity", e.what());
  }

  try {
    if (cfg.bound_mode == "simplified")
      result.bounds = simplified_bounds(pixel_stack.regions.count(), cfg.effective_cbar());
    else if (cfg.delta > 0.0)
      result.bounds =
          pixel_bounds_noisy(result.lam_used, cfg.delta, pixel_stack, cfg.effective_cbar());
    else
      result.bounds = pixel_bounds(result.lam_background, result.lam_sigma, pixel_stack,
                                   cfg.effective_cbar());
  } catch (const Error& e) {
    throw StageError("bounds", e.what());
  }

  try {
    result.partition =
        regularized_reconstruction(result.lam_used, pixel_stack, result.bounds);
  } catch (const Error& e) {
    throw StageError("regularize", e.what());
  }

  try {
    result.guess = extract_initial_guess(result.partition);
    if (result.guess.primitives.empty())
      throw Error("no component of at least two pixels above threshold");
    result.phi0 = init_signed_distance(result.guess.primitives, st.inv_mesh);
  } catch (const Error& e) {
    throw StageError("initial-guess", e.what());
  }

  try {
    result.measurements = simulate_measurements(
        st.data_mesh, st.inv_mesh, phantom.region, cfg.sigma0, cfg.sigma1,
        cfg.levelset_m, cfg.eta, cfg.seed + 0x51ed270b8913b1b5ull);
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
    result.descent =
        levelset_reconstruct(result.phi0, st.inv_mesh, result.measurements, opts);
  } catch (const Error& e) {
    throw StageError("levelset", e.what());
  }

  const LevelSetField& phi = result.descent.phi;
  result.symmetric_difference = symmetric_difference_area(
      [&](const Vec2& x) { return phi.interpolate(x) < 0.0; },
      [&](const Vec2& x) { return phantom.region.inside(x); }, 2048);
  return result;
}

SimultaneousResult simultaneous_reconstruct(const ExperimentConfig& cfg,
                                            const Phantom& phantom) {
  cfg.validate();
  SimultaneousResult result;
  CombinedResult& combined = result.combined;

  // Initialization as in the combined pipeline; sigma1 enters only through
  // the box bound cbar, which rescales the coefficient field but not its
  // thresholded support.
  PipelineState st;
  try {
    st = build_state(cfg);
    const ConductivityField sigma_true =
        rasterize_region(st.data_mesh, phantom.region, cfg.sigma0, cfg.sigma1);
    combined.lam_background =
        ntd_matrix(st.data_mesh, uniform_conductivity(st.data_mesh, cfg.sigma0),
                   st.data_basis);
    combined.lam_sigma = ntd_matrix(st.data_mesh, sigma_true, st.data_basis);
    combined.lam_diff = ntd_difference(combined.lam_sigma, combined.lam_background);
    combined.lam_used = cfg.delta > 0.0
                            ? add_operator_noise(combined.lam_diff, cfg.delta, cfg.seed)
                            : combined.lam_diff;
    SensitivityStack pixel_stack =
        sensitivity_stack(st.data_mesh, cfg.sigma0, st.data_basis,
                          rasterize_pixels(st.data_mesh, cfg.pixels));
    if (cfg.bound_mode == "simplified")
      combined.bounds =
          simplified_bounds(pixel_stack.regions.count(), cfg.effective_cbar());
    else if (cfg.delta > 0.0)
      combined.bounds = pixel_bounds_noisy(combined.lam_used, cfg.delta, pixel_stack,
                                           cfg.effective_cbar());
    else
      combined.bounds = pixel_bounds(combined.lam_background, combined.lam_sigma,
                                     pixel_stack, cfg.effective_cbar());
    combined.partition =
        regularized_reconstruction(combined.lam_used, pixel_stack, combined.bounds);
    combined.guess = extract_initial_guess(combined.partition);
    if (combined.guess.primitives.empty())
      throw Error("no component of at least two pixels above threshold");
    combined.phi0 = init_signed_distance(combined.guess.primitives, st.inv_mesh);
    combined.measurements = simulate_measurements(
        st.data_mesh, st.inv_mesh, phantom.region, cfg.sigma0, cfg.sigma1,
        cfg.levelset_m, cfg.eta, cfg.seed + 0x51ed270b8913b1b5ull);
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("initialization", e.what());
  }

  try {
    const double lo0 = cfg.sigma0 + 1e-3;
    const double hi0 = cfg.effective_sigma1_max();

    auto residual_at = [&](const LevelSetField& phi, double s1) {
      return parameter_residual(st.inv_mesh, inclusion_mask(st.inv_mesh, phi),
                                cfg.sigma0, s1, combined.measurements);
    };

    // the residual is decreasing in sigma1, so a sign bracket must hold
    const ParameterResidual at_lo = residual_at(combined.phi0, lo0);
    const ParameterResidual at_hi = residual_at(combined.phi0, hi0);
    if (!(at_lo.value > 0.0) || !(at_hi.value < 0.0)) {
      std::ostringstream os;
      os << "bracket loss at initialization: residual(" << format_double(lo0)
         << ") = " << format_double(at_lo.value) << ", residual(" << format_double(hi0)
         << ") = " << format_double(at_hi.value);
      throw Error(os.str());
    }

    // The estimate enters the alternation at the root of the residual for the
    // frozen initial shape. Starting at the bracket midpoint instead lets the
    // first descent steps run at a far-off contrast, and the deformation they
    // cause is never recovered.
    double sigma1_est = 0.5 * (lo0 + hi0);
    {
      double lo = lo0, hi = hi0;
      for (int it = 0; it < 25; ++it) {
        const ParameterResidual r = residual_at(combined.phi0, sigma1_est);
        if (r.value > 0.0)
          lo = sigma1_est;
        else
          hi = sigma1_est;
        double next = sigma1_est;
        if (r.derivative < 0.0) next = sigma1_est - r.value / r.derivative;
        if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
        const bool settled = std::abs(next - sigma1_est) < 1e-8 * sigma1_est;
        sigma1_est = next;
        if (settled) break;
      }
    }
    result.sigma1_history.push_back(sigma1_est);

    auto history_tail = [&]() {
      std::ostringstream os;
      const std::size_t n = result.sigma1_history.size();
      os << "; last estimates:";
      for (std::size_t i = n > 6 ? n - 6 : 0; i < n; ++i)
        os << ' ' << format_double(result.sigma1_history[i]);
      return os.str();
    };

    // The shape moves between updates, so the bracket is rebuilt from the
    // current residual sign each time; endpoints carried over from an earlier
    // shape can exclude the root of the current one and pin the iteration.
    Sigma1Update updater = [&](int /*iter*/, const LevelSetField& phi,
                               double current) -> double {
      const ParameterResidual r = residual_at(phi, current);
      if (r.value > 0.0 && hi0 - current <= 1e-9) {
        std::ostringstream os;
        os << "bracket loss: residual(" << format_double(current) << ") = "
           << format_double(r.value) << " still positive at the ceiling"
           << history_tail();
        throw Error(os.str());
      }
      if (r.value < 0.0 && current - lo0 <= 1e-9) {
        std::ostringstream os;
        os << "bracket loss: residual(" << format_double(current) << ") = "
           << format_double(r.value) << " still negative at the floor"
           << history_tail();
        throw Error(os.str());
      }
      const double lo = r.value > 0.0 ? current : lo0;
      const double hi = r.value > 0.0 ? hi0 : current;
      double next = current;
      if (r.derivative < 0.0) next = current - r.value / r.derivative;  // Newton
      if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);         // bisection
      result.sigma1_history.push_back(next);
      return next;
    };

    DescentOptions opts;
    opts.sigma0 = cfg.sigma0;
    opts.sigma1 = sigma1_est;
    opts.dt_min = cfg.dt_min;
    opts.shrink = cfg.shrink;
    opts.stop_tol = cfg.stop_tol;
    opts.stop_window = cfg.stop_window;
    opts.max_iter = cfg.max_iter;
    opts.reinit_every = cfg.reinit_every;
    opts.formula = cfg.derivative_formula();
    combined.descent = levelset_reconstruct(combined.phi0, st.inv_mesh,
                                            combined.measurements, opts, updater);
    result.sigma1_final = combined.descent.sigma1;
  } catch (const Error& e) {
    throw StageError("simultaneous", e.what());
  }

  const LevelSetField& phi = combined.descent.phi;
  combined.symmetric_difference = symmetric_difference_area(
      [&](const Vec2& x) { return phi.interpolate(x) < 0.0; },
      [&](const Vec2& x) { return phantom.region.inside(x); }, 2048);
  return result;
}

}  // namespace eit
