#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cogen/correlation.hpp"
#include "cogen/geometry.hpp"
#include "cogen/motion.hpp"
#include "cogen/optimizer.hpp"

namespace cogen {

struct DomainSpec {
  std::vector<double> origin;
  double spacing = 0.0;
  std::vector<int> dims;
};

struct MotionSpec {
  // Exactly one of `builtin` or the keyframe lists is used.
  std::string builtin;
  MotionParams params;
  std::vector<Keyframe> keyframes1;
  std::vector<Keyframe> keyframes2;

  bool is_builtin() const { return !builtin.empty(); }
};

/// Everything needed to reproduce a co-generation run.
struct SceneConfig {
  std::string name;
  int dimension = 2;
  DomainSpec domain1;
  DomainSpec domain2;
  nlohmann::json shape1;  // validated shape trees, kept verbatim for round trips
  nlohmann::json shape2;
  MotionSpec motion;
  int timesteps = 1;
  std::vector<double> gammas;  // a scalar "gamma" parses to one entry
  OptimizerConfig optimizer;
  int supersample = 8;
  std::string output_dir = "out";
  std::string cache;  // path prefix for the two correlation caches; empty = none
};

/// Throws ConfigError naming the JSON pointer of the offending value.
SceneConfig parse_scene(const nlohmann::json& j);
SceneConfig parse_scene_file(const std::filesystem::path& path);
nlohmann::json scene_to_json(const SceneConfig& scene);

ShapeSpec parse_shape(const nlohmann::json& j, int dimension, const std::string& pointer = "");

/// Parses "a:b:step" ranges (inclusive, rounded to the step grid) or
/// comma-separated lists.
std::vector<double> parse_gamma_list(const std::string& text);

/// FNV-1a hash of the grids, motion and K; `leg` distinguishes W12 from W21.
std::uint64_t content_hash(const SceneConfig& scene, const std::string& leg);

/// A scene with grids, rasterized initial designs and sampled motion.
struct BuiltScene {
  SceneConfig config;
  Grid grid1;
  Grid grid2;
  ShapeSpec shape1;
  ShapeSpec shape2;
  DensityField rho1;
  DensityField rho2;
  MotionPair motion;
  Trajectory trajectory;
};

BuiltScene build_scene(const SceneConfig& config);

struct CorrelationPair {
  CorrelationMatrix w12;
  CorrelationMatrix w21;
};

CorrelationPair assemble_pair(const BuiltScene& scene);
CacheHeader expected_header(const BuiltScene& scene, bool leg12);
std::filesystem::path cache_path(const SceneConfig& scene, bool leg12);

/// Loads both caches when the scene names them and they exist; otherwise
/// assembles. Stale caches throw ConfigError.
CorrelationPair load_or_assemble(const BuiltScene& scene);

}  // namespace cogen
