#include "cogen/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "cogen/analysis.hpp"
#include "cogen/collision.hpp"
#include "cogen/errors.hpp"
#include "cogen/field_io.hpp"
#include "cogen/optimizer.hpp"
#include "cogen/scene.hpp"

namespace cogen {
namespace {

namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(12);
  return out;
}

void write_field(const DensityField& field, const fs::path& path, std::optional<FieldFormat> format = {}) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  export_field(field, format.value_or(FieldFormat::Raw), path);
}

FieldFormat format_from_extension(const fs::path& path) {
  auto ext = path.extension().string();
  if (!ext.empty()) ext.erase(0, 1);
  if (ext == "bin") return FieldFormat::Raw;
  return parse_field_format(ext);
}

void check_grid(const DensityField& field, const Grid& expected, const std::string& what) {
  if (!(field.grid() == expected)) throw ConfigError(what + " does not lie on the scene grid");
}

BuiltScene load_scene(const std::string& path) {
  return build_scene(parse_scene_file(path));
}

CorrelationPair correlations(const BuiltScene& scene) {
  const auto t0 = Clock::now();
  auto pair = load_or_assemble(scene);
  std::cerr << "correlation: nnz " << pair.w12.nnz() << " / " << pair.w21.nnz() << " in " << std::fixed
            << std::setprecision(2) << seconds_since(t0) << "s\n"
            << std::defaultfloat;
  return pair;
}

double pick_gamma(const SceneConfig& config, std::optional<double> gamma) {
  const double g = gamma ? *gamma : config.gammas.front();
  if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  return g;
}

void write_convergence(const std::vector<IterationRecord>& history, const fs::path& path) {
  auto out = open_output(path);
  out << "iter,v1,v2,g21,g12,h,delta\n";
  for (const auto& r : history) {
    out << r.iter << ',' << r.v1 << ',' << r.v2 << ',' << r.g21 << ',' << r.g12 << ',' << r.h << ',' << r.delta
        << '\n';
  }
}

// --- subcommands ----------------------------------------------------------

struct SceneArgs {
  std::string scene;
  std::string out;

  fs::path out_dir(const SceneConfig& c) const { return out.empty() ? fs::path(c.output_dir) : fs::path(out); }
};

int cmd_precompute(const SceneArgs& args, const std::string& cache_override) {
  auto config = parse_scene_file(args.scene);
  if (!cache_override.empty()) config.cache = cache_override;
  if (config.cache.empty()) config.cache = (args.out_dir(config) / "correlation").string();
  const auto scene = build_scene(config);
  const auto t0 = Clock::now();
  const auto pair = assemble_pair(scene);
  const double elapsed = seconds_since(t0);
  for (bool leg12 : {true, false}) {
    const auto path = cache_path(config, leg12);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_correlation_cache(path, leg12 ? pair.w12 : pair.w21, config.dimension,
                            expected_header(scene, leg12).content_hash);
    std::cout << path.string() << '\n';
  }
  std::cerr << "assembled in " << elapsed << "s, nnz " << pair.w12.nnz() << " / " << pair.w21.nnz() << '\n';
  return kExitOk;
}

int cmd_optimize(const SceneArgs& args, std::optional<double> gamma) {
  const auto scene = load_scene(args.scene);
  const auto pair = correlations(scene);
  OptimizerConfig oc = scene.config.optimizer;
  oc.gamma = pick_gamma(scene.config, gamma);
  const auto t0 = Clock::now();
  const auto r = cogenerate(scene.rho1, scene.rho2, oc, pair.w12, pair.w21);
  const double elapsed = seconds_since(t0);

  const auto dir = args.out_dir(scene.config);
  write_field(r.rho1, dir / "rho1.bin");
  write_field(r.rho2, dir / "rho2.bin");
  write_field(field_from_mask(scene.grid1, r.solid1), dir / "solid1.bin");
  write_field(field_from_mask(scene.grid2, r.solid2), dir / "solid2.bin");
  write_convergence(r.history, dir / "convergence.csv");

  const auto [b21, b12] = binary_measures(r.solid1, r.solid2, scene.grid1, scene.grid2, pair.w12, pair.w21);
  std::cout << "gamma " << oc.gamma << '\n'
            << "termination " << to_string(r.termination) << " after " << r.history.size() << " iterations ("
            << elapsed << "s)\n"
            << "measure S1 " << measure(field_from_mask(scene.grid1, r.solid1)) << " S2 "
            << measure(field_from_mask(scene.grid2, r.solid2)) << '\n'
            << "collision initial " << r.initial_g21 + r.initial_g12 << " final " << r.final_g21 + r.final_g12
            << " binary " << b21 + b12 << '\n'
            << "repair cleared " << r.cleared_cells << " cells\n";
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  return kExitOk;
}

int cmd_gamma_sweep(const SceneArgs& args, const std::string& gamma_text) {
  const auto scene = load_scene(args.scene);
  const auto gammas = gamma_text.empty() ? scene.config.gammas : parse_gamma_list(gamma_text);
  for (double g : gammas) {
    if (!(g >= 0.0 && g <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  }
  const auto pair = correlations(scene);
  const auto rows = gamma_sweep(scene.rho1, scene.rho2, gammas, scene.config.optimizer, pair.w12, pair.w21);
  const auto path = args.out_dir(scene.config) / "gamma_sweep.csv";
  auto out = open_output(path);
  out << "gamma,v1,v2,sum\n";
  for (const auto& r : rows) {
    out << r.gamma << ',' << r.v1 << ',' << r.v2 << ',' << r.sum << '\n';
    std::cout << "gamma " << r.gamma << " v1 " << r.v1 << " v2 " << r.v2 << " sum " << r.sum << " ("
              << to_string(r.termination) << ")\n";
  }
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_one_way(const SceneArgs& args, bool is_unsweep, int target, std::string output, double theta) {
  if (target != 1 && target != 2) throw ConfigError("--target must be 1 or 2");
  const auto scene = load_scene(args.scene);
  const auto& obstacle = target == 2 ? scene.rho1 : scene.rho2;
  const auto& leg = target == 2 ? scene.trajectory.poses_12 : scene.trajectory.poses_21;
  const auto& grid = target == 2 ? scene.grid2 : scene.grid1;
  const auto result = is_unsweep ? unsweep(obstacle, leg, grid, theta) : sweep(obstacle, leg, grid, theta);
  const std::string stem = std::string(is_unsweep ? "unsweep" : "sweep") + std::to_string(target);
  const fs::path path = output.empty() ? args.out_dir(scene.config) / (stem + ".bin") : fs::path(output);
  write_field(result, path, format_from_extension(path));
  std::cout << stem << " measure " << measure(result) << '\n' << path.string() << '\n';
  return kExitOk;
}

struct MetricsArgs {
  std::string rho1;
  std::string rho2;
  std::optional<double> tolerance;
  double theta = 0.5;
  std::optional<double> period;  // length units
  int axis = -1;
};

int cmd_metrics(const SceneArgs& args, const MetricsArgs& m) {
  const auto scene = load_scene(args.scene);
  const auto dir = args.out_dir(scene.config);
  const auto rho1 = read_raw_field(m.rho1.empty() ? dir / "solid1.bin" : fs::path(m.rho1));
  const auto rho2 = read_raw_field(m.rho2.empty() ? dir / "solid2.bin" : fs::path(m.rho2));
  check_grid(rho1, scene.grid1, "body 1 field");
  check_grid(rho2, scene.grid2, "body 2 field");

  const auto series = min_distance_series(rho1, rho2, scene.trajectory, m.theta);
  const double tol = m.tolerance ? *m.tolerance : default_contact_tolerance(scene.grid1);
  const auto path = dir / "distance.csv";
  auto out = open_output(path);
  out << "k,t_k,distance\n";
  for (std::size_t k = 0; k < series.distance.size(); ++k) {
    out << k << ',' << series.times[k] << ',' << series.distance[k] << '\n';
  }
  const auto& params = scene.config.motion.params;
  const double L = params.count("L") ? params.at("L") : 1.0;
  std::cout << "distance mean " << series.mean << " min " << series.min << " (mean / L " << series.mean / L << ")\n"
            << "contact fraction " << contact_fraction(series, tol) << " (tolerance " << tol << ")\n";

  if (m.period) {
    const int axis = m.axis < 0 ? scene.config.dimension - 1 : m.axis;
    if (axis >= scene.config.dimension) throw ConfigError("--axis out of range");
    const int cells = static_cast<int>(std::lround(*m.period / scene.grid1.spacing()));
    const auto solid1 = field_from_mask(scene.grid1, threshold(rho1, m.theta));
    std::cout << "periodicity body 1 axis " << axis << " shift " << cells << " cells: "
              << periodicity_score(solid1, axis, cells) << '\n';
  }
  std::cout << path.string() << '\n';
  return kExitOk;
}

int cmd_oracle_check(const SceneArgs& args, int samples, double tolerance) {
  if (samples < 1) throw ConfigError("--samples must be positive");
  if (!(tolerance >= 0.0)) throw ConfigError("--tolerance must be non-negative");
  const auto scene = load_scene(args.scene);
  const auto pair = correlations(scene);

  Trajectory swapped = scene.trajectory;
  std::swap(swapped.poses_12, swapped.poses_21);

  const double m21 = global_measure(scene.rho1, scene.rho2, pair.w12);
  const double m12 = global_measure(scene.rho2, scene.rho1, pair.w21);
  const double o21 = oracle_global_measure(scene.shape1, scene.shape2, scene.trajectory, samples, scene.grid1);
  const double o12 = oracle_global_measure(scene.shape2, scene.shape1, swapped, samples, scene.grid2);

  auto rel = [](double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s > 0.0 ? std::abs(a - b) / s : 0.0;
  };
  const double e21 = rel(m21, o21);
  const double e12 = rel(m12, o12);
  std::cout << "g21 matrix " << m21 << " oracle " << o21 << " relative error " << e21 << '\n'
            << "g12 matrix " << m12 << " oracle " << o12 << " relative error " << e12 << '\n';
  if (e21 > tolerance || e12 > tolerance) {
    std::cout << "MISMATCH (tolerance " << tolerance << ")\n";
    return kExitOracleMismatch;
  }
  std::cout << "ok (tolerance " << tolerance << ")\n";
  return kExitOk;
}

int cmd_export(const std::string& input, const std::string& output, const std::string& format) {
  const auto field = read_raw_field(input);
  const fs::path path(output);
  write_field(field, path, format.empty() ? format_from_extension(path) : parse_field_format(format));
  std::cout << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run_command(int argc, char** argv) {
  CLI::App app{"Co-generation of collision-free shapes under a prescribed relative motion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cogen 1.0");

  SceneArgs scene_args;
  auto add_scene = [&](CLI::App* sub) {
    sub->add_option("--scene", scene_args.scene, "Scene JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", scene_args.out, "Output directory (defaults to the scene's)");
  };

  auto* precompute = app.add_subcommand("precompute", "Assemble and cache both correlation matrices");
  add_scene(precompute);
  std::string cache_override;
  precompute->add_option("--cache", cache_override, "Cache path prefix (overrides the scene)");

  auto* optimize = app.add_subcommand("optimize", "Co-generate one pair for a single gamma");
  add_scene(optimize);
  std::optional<double> gamma;
  optimize->add_option("--gamma", gamma, "Volume ratio parameter in [0, 1]");

  auto* sweep_gamma = app.add_subcommand("gamma-sweep", "Co-generate over a list of gammas");
  add_scene(sweep_gamma);
  std::string gamma_text;
  sweep_gamma->add_option("--gammas", gamma_text, "start:stop:step or a comma separated list");

  int target = 2;
  std::string one_way_output;
  double theta = 0.5;
  auto* unsweep_cmd = app.add_subcommand("unsweep", "Largest body avoiding the other over the motion");
  auto* sweep_cmd = app.add_subcommand("sweep", "Region swept by the other body");
  for (auto* sub : {unsweep_cmd, sweep_cmd}) {
    add_scene(sub);
    sub->add_option("--target", target, "Body that receives the result (1 or 2)");
    sub->add_option("--output", one_way_output, "Output file (.bin, .pgm or .vtk)");
    sub->add_option("--threshold", theta, "Occupancy threshold");
  }

  auto* metrics = app.add_subcommand("metrics", "Distance series, contact and periodicity of saved fields");
  add_scene(metrics);
  MetricsArgs margs;
  metrics->add_option("--rho1", margs.rho1, "Body 1 raw field (default <out>/solid1.bin)");
  metrics->add_option("--rho2", margs.rho2, "Body 2 raw field (default <out>/solid2.bin)");
  metrics->add_option("--tolerance", margs.tolerance, "Contact tolerance (default one cell diagonal)");
  metrics->add_option("--threshold", margs.theta, "Occupancy threshold");
  metrics->add_option("--period", margs.period, "Shift for the periodicity score, in length units");
  metrics->add_option("--axis", margs.axis, "Axis for the periodicity score (default last)");

  auto* oracle = app.add_subcommand("oracle-check", "Compare matrix measures against direct quadrature");
  add_scene(oracle);
  int samples = 8;
  double oracle_tol = 0.05;
  oracle->add_option("--samples", samples, "Samples per axis per cell");
  oracle->add_option("--tolerance", oracle_tol, "Allowed relative error");

  auto* export_cmd = app.add_subcommand("export", "Convert a raw field to PGM, VTK or raw");
  std::string input, output, format;
  export_cmd->add_option("--input", input, "Raw field")->required()->check(CLI::ExistingFile);
  export_cmd->add_option("--output", output, "Output file")->required();
  export_cmd->add_option("--format", format, "pgm, vtk or raw (default from the extension)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*precompute) return cmd_precompute(scene_args, cache_override);
    if (*optimize) return cmd_optimize(scene_args, gamma);
    if (*sweep_gamma) return cmd_gamma_sweep(scene_args, gamma_text);
    if (*unsweep_cmd) return cmd_one_way(scene_args, true, target, one_way_output, theta);
    if (*sweep_cmd) return cmd_one_way(scene_args, false, target, one_way_output, theta);
    if (*metrics) return cmd_metrics(scene_args, margs);
    if (*oracle) return cmd_oracle_check(scene_args, samples, oracle_tol);
    if (*export_cmd) return cmd_export(input, output, format);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

int run_command(const std::vector<std::string>& args) {
  std::vector<std::string> storage = args;
  std::vector<char*> argv;
  for (auto& a : storage) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run_command(static_cast<int>(storage.size()), argv.data());
}

}  // namespace cogen
