#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "eit/runner.hpp"
#include "eit/version.hpp"

namespace {

// every option also carries the snake_case name of the config field it sets,
// so declarative config files use the field names directly
void add_common_options(CLI::App* cmd, eit::ExperimentConfig& cfg, CLI::Option*& seed_opt,
                        std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "declarative key = value configuration file (flags take precedence)");
  cmd->add_option("--phantom", cfg.phantom, "phantom name (see `eit phantom list`)")
      ->capture_default_str();
  cmd->add_option("--sigma0", cfg.sigma0, "background conductivity")
      ->capture_default_str();
  cmd->add_option("--sigma1", cfg.sigma1, "inclusion conductivity")
      ->capture_default_str();
  cmd->add_option("--data-n,--data_n", cfg.data_n, "grid for simulating the data")
      ->capture_default_str();
  cmd->add_option("--inversion-n,--inversion_n", cfg.inversion_n,
                  "grid for the inversion")
      ->capture_default_str();
  cmd->add_option("--currents,--m", cfg.m,
                  "boundary currents for the monotonicity stage")
      ->capture_default_str();
  cmd->add_option("--levelset-currents,--levelset_m", cfg.levelset_m,
                  "current/voltage pairs for the level-set stage")
      ->capture_default_str();
  cmd->add_option("--pixels", cfg.pixels, "pixel partition resolution")
      ->capture_default_str();
  cmd->add_option("--ball-radius,--ball_radius", cfg.ball_radius, "test ball radius")
      ->capture_default_str();
  cmd->add_option("--alpha", cfg.alpha,
                  "test contrast; nonpositive selects sigma0 - sigma0^2/sigma1");
  cmd->add_option("--cbar", cfg.cbar,
                  "global coefficient cap; nonpositive selects the same bound");
  cmd->add_option("--delta", cfg.delta, "relative operator noise")
      ->capture_default_str();
  cmd->add_option("--eta", cfg.eta, "relative voltage noise")->capture_default_str();
  seed_opt = cmd->add_option("--seed", cfg.seed, "rng seed (required for noisy runs)");
  cmd->add_option("--bounds,--bound-mode,--bound_mode", cfg.bound_mode,
                  "pixel bounds: minck or simplified")
      ->capture_default_str();
  cmd->add_option("--dt-min,--dt_min", cfg.dt_min, "line search lower step bound")
      ->capture_default_str();
  cmd->add_option("--shrink", cfg.shrink, "line search backtracking factor")
      ->capture_default_str();
  cmd->add_option("--stop-tol,--stop_tol", cfg.stop_tol,
                  "windowed relative-decrease tolerance")
      ->capture_default_str();
  cmd->add_option("--stop-window,--stop_window", cfg.stop_window,
                  "stopping window length")
      ->capture_default_str();
  cmd->add_option("--max-iter,--max_iter", cfg.max_iter, "descent iteration cap")
      ->capture_default_str();
  cmd->add_option("--reinit-every,--reinit_every", cfg.reinit_every,
                  "redistance every k accepted steps (0 disables)")
      ->capture_default_str();
  cmd->add_option("--formula", cfg.formula, "shape derivative: standard or identity")
      ->capture_default_str();
  cmd->add_option("--sigma1-max,--sigma1_max", cfg.sigma1_max,
                  "upper bracket for the unknown contrast; nonpositive selects 10 sigma0");
  cmd->add_option("--outdir", cfg.outdir, "artifact directory")->capture_default_str();
}

std::string trimmed(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

long long parse_config_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long parsed = 0;
  try {
    parsed = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw eit::Error("config key '" + key + "': '" + value + "' is not an integer");
  return parsed;
}

double parse_config_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size())
    throw eit::Error("config key '" + key + "': '" + value + "' is not a number");
  return parsed;
}

// Flat key = value lines mirroring the option names; `#` starts a comment.
// Command-line flags already parsed into cfg win over file values.
void apply_config_file(const std::string& path, CLI::App* cmd,
                       eit::ExperimentConfig& cfg, bool& seed_given) {
  struct Key {
    const char* name;
    const char* flag;
    std::function<void(const std::string&)> apply;
  };
  const auto int_field = [](const char* key, auto& field) {
    return [key, &field](const std::string& v) {
      field = static_cast<std::remove_reference_t<decltype(field)>>(
          parse_config_int(key, v));
    };
  };
  const auto double_field = [](const char* key, auto& field) {
    return [key, &field](const std::string& v) { field = parse_config_double(key, v); };
  };
  const auto string_field = [](auto& field) {
    return [&field](const std::string& v) { field = v; };
  };
  const std::vector<Key> keys = {
      {"phantom", "--phantom", string_field(cfg.phantom)},
      {"sigma0", "--sigma0", double_field("sigma0", cfg.sigma0)},
      {"sigma1", "--sigma1", double_field("sigma1", cfg.sigma1)},
      {"data_n", "--data_n", int_field("data_n", cfg.data_n)},
      {"inversion_n", "--inversion_n", int_field("inversion_n", cfg.inversion_n)},
      {"m", "--m", int_field("m", cfg.m)},
      {"levelset_m", "--levelset_m", int_field("levelset_m", cfg.levelset_m)},
      {"pixels", "--pixels", int_field("pixels", cfg.pixels)},
      {"ball_radius", "--ball_radius", double_field("ball_radius", cfg.ball_radius)},
      {"alpha", "--alpha", double_field("alpha", cfg.alpha)},
      {"cbar", "--cbar", double_field("cbar", cfg.cbar)},
      {"delta", "--delta", double_field("delta", cfg.delta)},
      {"eta", "--eta", double_field("eta", cfg.eta)},
      {"seed", "--seed",
       [&cfg, &seed_given](const std::string& v) {
         cfg.seed = static_cast<std::uint64_t>(parse_config_int("seed", v));
         seed_given = true;
       }},
      {"bound_mode", "--bound_mode", string_field(cfg.bound_mode)},
      {"dt_min", "--dt_min", double_field("dt_min", cfg.dt_min)},
      {"shrink", "--shrink", double_field("shrink", cfg.shrink)},
      {"stop_tol", "--stop_tol", double_field("stop_tol", cfg.stop_tol)},
      {"stop_window", "--stop_window", int_field("stop_window", cfg.stop_window)},
      {"max_iter", "--max_iter", int_field("max_iter", cfg.max_iter)},
      {"reinit_every", "--reinit_every", int_field("reinit_every", cfg.reinit_every)},
      {"formula", "--formula", string_field(cfg.formula)},
      {"sigma1_max", "--sigma1_max", double_field("sigma1_max", cfg.sigma1_max)},
      {"outdir", "--outdir", string_field(cfg.outdir)},
  };

  std::ifstream in(path);
  if (!in) throw eit::Error("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw eit::Error("config line " + std::to_string(lineno) +
                       ": expected key = value, got '" + line + "'");
    const std::string key = trimmed(line.substr(0, eq));
    std::string value = trimmed(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    const auto entry =
        std::find_if(keys.begin(), keys.end(),
                     [&key](const Key& k) { return key == k.name; });
    if (entry == keys.end())
      throw eit::Error("config line " + std::to_string(lineno) + ": unknown key '" +
                       key + "'");
    if (cmd->get_option(entry->flag)->count() > 0) continue;
    entry->apply(value);
  }
}

std::vector<eit::Primitive> parse_init_shapes(const std::vector<double>& circles,
                                              const std::vector<double>& rects,
                                              const std::vector<double>& ellipses) {
  std::vector<eit::Primitive> shapes;
  for (std::size_t k = 0; k + 2 < circles.size(); k += 3)
    shapes.push_back(
        eit::Circle{eit::Vec2(circles[k], circles[k + 1]), circles[k + 2]});
  for (std::size_t k = 0; k + 3 < rects.size(); k += 4)
    shapes.push_back(eit::Rect{eit::Vec2(rects[k], rects[k + 1]), rects[k + 2],
                               rects[k + 3]});
  for (std::size_t k = 0; k + 4 < ellipses.size(); k += 5)
    shapes.push_back(eit::Ellipse{eit::Vec2(ellipses[k], ellipses[k + 1]),
                                  ellipses[k + 2], ellipses[k + 3], ellipses[k + 4]});
  return shapes;
}

int count_marked(const eit::TestBallGrid& scan) {
  int marked = 0;
  for (auto flag : scan.marked) marked += flag ? 1 : 0;
  return marked;
}

int count_support(const eit::PixelPartition& partition) {
  int on = 0;
  for (auto flag : partition.support) on += flag ? 1 : 0;
  return on;
}

void print_descent(const eit::DescentResult& descent, double symdiff) {
  std::cout << "iterations: " << descent.records.size() << " (" << descent.stop_reason
            << ")\n";
  std::cout << "final objective: " << descent.objective << '\n';
  std::cout << "symmetric difference vs phantom: " << symdiff << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conductivity inclusion reconstruction from boundary data"};
  app.set_version_flag("--version", eit::kVersion);
  app.require_subcommand(1);

  eit::ExperimentConfig cfg;
  std::string resume_diff, resume_coeffs;
  std::vector<double> init_circles, init_rects, init_ellipses;

  CLI::App* scan = app.add_subcommand("scan", "linearized monotonicity ball scan");
  CLI::App* reg = app.add_subcommand(
      "regularize", "monotonicity-regularized pixel reconstruction");
  CLI::App* lvl = app.add_subcommand(
      "levelset", "level-set refinement from an explicit initial shape");
  CLI::App* comb = app.add_subcommand(
      "combined", "monotonicity initialization followed by level-set refinement");
  CLI::App* sim = app.add_subcommand(
      "simultaneous", "combined run with the inclusion conductivity unknown");
  CLI::App* phantom = app.add_subcommand("phantom", "phantom gallery utilities");
  phantom->require_subcommand(1);
  CLI::App* phantom_list = phantom->add_subcommand("list", "list the built-in phantoms");

  std::string config_path;
  std::vector<std::pair<CLI::App*, CLI::Option*>> seeded;
  for (CLI::App* cmd : {scan, reg, lvl, comb, sim}) {
    CLI::Option* seed_opt = nullptr;
    add_common_options(cmd, cfg, seed_opt, config_path);
    seeded.emplace_back(cmd, seed_opt);
  }
  reg->add_option("--ntd-diff,--ntd_diff", resume_diff,
                  "resume from a saved difference matrix instead of simulating");
  lvl->add_option("--init-coeffs,--init_coeffs", resume_coeffs,
                  "initial shapes fitted from a saved coefficient grid");
  lvl->add_option("--init-circle", init_circles, "initial circle: cx cy r (repeatable)")
      ->type_size(3);
  lvl->add_option("--init-rect", init_rects,
                  "initial rectangle: cx cy hx hy (repeatable)")
      ->type_size(4);
  lvl->add_option("--init-ellipse", init_ellipses,
                  "initial ellipse: cx cy a b angle (repeatable)")
      ->type_size(5);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (const auto& [cmd, seed_opt] : seeded)
    if (cmd->parsed()) cfg.seed_given = seed_opt->count() > 0;

  try {
    if (!config_path.empty())
      for (const auto& [cmd, seed_opt] : seeded)
        if (cmd->parsed()) apply_config_file(config_path, cmd, cfg, cfg.seed_given);
  } catch (const eit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (phantom->parsed() && phantom_list->parsed()) {
      for (const eit::Phantom& p : eit::phantom_gallery())
        std::cout << p.name << "  (" << p.region.add.size() << " shape"
                  << (p.region.add.size() == 1 ? "" : "s") << ", "
                  << p.region.subtract.size() << " hole"
                  << (p.region.subtract.size() == 1 ? "" : "s") << ")\n";
      return 0;
    }
    if (scan->parsed()) {
      const eit::ScanArtifacts art = eit::run_scan(cfg);
      std::cout << "marked balls: " << count_marked(art.scan) << " of "
                << art.scan.balls.size() << '\n';
    } else if (reg->parsed()) {
      const eit::RegularizeArtifacts art = eit::run_regularize(cfg, resume_diff);
      std::cout << "support pixels: " << count_support(art.partition) << " of "
                << art.partition.coeffs.size() << '\n';
      std::cout << "residual norm: " << art.partition.qp_objective << '\n';
    } else if (lvl->parsed()) {
      const std::vector<eit::Primitive> shapes =
          parse_init_shapes(init_circles, init_rects, init_ellipses);
      const eit::LevelsetArtifacts art = eit::run_levelset(cfg, shapes, resume_coeffs);
      print_descent(art.descent, art.symmetric_difference);
    } else if (comb->parsed()) {
      const eit::CombinedResult result = eit::run_combined(cfg);
      print_descent(result.descent, result.symmetric_difference);
    } else if (sim->parsed()) {
      const eit::SimultaneousResult result = eit::run_simultaneous(cfg);
      print_descent(result.combined.descent, result.combined.symmetric_difference);
      std::cout << "recovered sigma1: " << result.sigma1_final << '\n';
    }
    std::cout << "artifacts in " << cfg.outdir << '\n';
  } catch (const eit::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const eit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
