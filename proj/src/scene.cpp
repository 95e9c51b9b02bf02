#include "cogen/scene.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cogen/errors.hpp"

namespace cogen {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw ConfigError((pointer.empty() ? std::string("/") : pointer) + ": " + what);
}

void only_keys(const json& j, const std::string& pointer, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(pointer, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(pointer + "/" + key, "unknown key");
  }
}

const json& required(const json& j, const std::string& pointer, const char* key) {
  if (!j.contains(key)) fail(pointer + "/" + key, "missing required field");
  return j.at(key);
}

double number(const json& j, const std::string& pointer) {
  if (!j.is_number()) fail(pointer, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(pointer, "expected a finite number");
  return v;
}

int integer(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) fail(pointer, "expected an integer");
  return j.get<int>();
}

std::vector<double> numbers(const json& j, const std::string& pointer, std::size_t expected) {
  if (!j.is_array()) fail(pointer, "expected an array");
  if (j.size() != expected) {
    fail(pointer, "expected " + std::to_string(expected) + " components, got " + std::to_string(j.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], pointer + "/" + std::to_string(i)));
  return out;
}

Point to_point(const std::vector<double>& v) {
  Point p = Point::Zero();
  for (std::size_t i = 0; i < v.size(); ++i) p[static_cast<Eigen::Index>(i)] = v[i];
  return p;
}

DomainSpec parse_domain(const json& j, const std::string& pointer, int d) {
  only_keys(j, pointer, {"origin", "spacing", "dims"});
  DomainSpec s;
  s.origin = numbers(required(j, pointer, "origin"), pointer + "/origin", static_cast<std::size_t>(d));
  s.spacing = number(required(j, pointer, "spacing"), pointer + "/spacing");
  const json& dims = required(j, pointer, "dims");
  if (!dims.is_array() || dims.size() != static_cast<std::size_t>(d)) {
    fail(pointer + "/dims", "expected " + std::to_string(d) + " cell counts");
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    s.dims.push_back(integer(dims[i], pointer + "/dims/" + std::to_string(i)));
  }
  try {
    (void)build_grid(s.origin, s.spacing, s.dims);
  } catch (const ConfigError& e) {
    fail(pointer, e.what());
  }
  return s;
}

json domain_to_json(const DomainSpec& s) {
  return {{"origin", s.origin}, {"spacing", s.spacing}, {"dims", s.dims}};
}

Eigen::Matrix3d parse_rotation(const json& j, const std::string& pointer, int d) {
  if (d == 2) {
    return Pose::rotation_z(number(j, pointer)).rotation;
  }
  if (!j.is_array() || j.size() != 3) fail(pointer, "expected a 3x3 rotation matrix");
  Eigen::Matrix3d r;
  for (int row = 0; row < 3; ++row) {
    const auto v = numbers(j[row], pointer + "/" + std::to_string(row), 3);
    for (int col = 0; col < 3; ++col) r(row, col) = v[static_cast<std::size_t>(col)];
  }
  return r;
}

std::vector<Keyframe> parse_keyframes(const json& j, const std::string& pointer, int d) {
  if (!j.is_array() || j.empty()) fail(pointer, "expected a non-empty keyframe array");
  std::vector<Keyframe> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = pointer + "/" + std::to_string(i);
    only_keys(j[i], p, {"t", "rotation", "translation"});
    Keyframe k;
    k.t = number(required(j[i], p, "t"), p + "/t");
    if (j[i].contains("rotation")) k.rotation = parse_rotation(j[i]["rotation"], p + "/rotation", d);
    if (j[i].contains("translation")) {
      k.translation = to_point(numbers(j[i]["translation"], p + "/translation", static_cast<std::size_t>(d)));
    }
    try {
      validate_pose({k.rotation, k.translation});
    } catch (const ValidationError& e) {
      fail(p, e.what());
    }
    if (!out.empty() && !(k.t > out.back().t)) fail(p + "/t", "keyframe times must be strictly increasing");
    if (k.t < 0.0 || k.t > 1.0) fail(p + "/t", "keyframe time outside [0, 1]");
    out.push_back(k);
  }
  return out;
}

json keyframes_to_json(const std::vector<Keyframe>& frames, int d) {
  json arr = json::array();
  for (const auto& k : frames) {
    json f;
    f["t"] = k.t;
    if (d == 2) {
      f["rotation"] = std::atan2(k.rotation(1, 0), k.rotation(0, 0));
      f["translation"] = {k.translation[0], k.translation[1]};
    } else {
      json r = json::array();
      for (int row = 0; row < 3; ++row) r.push_back({k.rotation(row, 0), k.rotation(row, 1), k.rotation(row, 2)});
      f["rotation"] = r;
      f["translation"] = {k.translation[0], k.translation[1], k.translation[2]};
    }
    arr.push_back(f);
  }
  return arr;
}

MotionSpec parse_motion(const json& j, const std::string& pointer, int d) {
  only_keys(j, pointer, {"builtin", "params", "keyframes1", "keyframes2"});
  MotionSpec m;
  if (j.contains("builtin")) {
    if (j.contains("keyframes1") || j.contains("keyframes2")) {
      fail(pointer, "use either 'builtin' or keyframes, not both");
    }
    if (!j["builtin"].is_string()) fail(pointer + "/builtin", "expected a string");
    m.builtin = j["builtin"].get<std::string>();
    if (j.contains("params")) {
      const json& p = j["params"];
      if (!p.is_object()) fail(pointer + "/params", "expected an object");
      for (const auto& [k, v] : p.items()) m.params[k] = number(v, pointer + "/params/" + k);
    }
    try {
      (void)builtin_motion(m.builtin, m.params);
    } catch (const ConfigError& e) {
      fail(pointer, e.what());
    }
    const bool planar = m.builtin == "counter_rotation" || m.builtin == "cam_follower_2d";
    if (planar != (d == 2)) fail(pointer + "/builtin", "motion '" + m.builtin + "' does not match the dimension");
    return m;
  }
  if (j.contains("params")) fail(pointer + "/params", "params require a builtin motion");
  m.keyframes1 = parse_keyframes(required(j, pointer, "keyframes1"), pointer + "/keyframes1", d);
  m.keyframes2 = parse_keyframes(required(j, pointer, "keyframes2"), pointer + "/keyframes2", d);
  return m;
}

json motion_to_json(const MotionSpec& m, int d) {
  if (m.is_builtin()) {
    json j{{"builtin", m.builtin}};
    if (!m.params.empty()) j["params"] = m.params;
    return j;
  }
  return {{"keyframes1", keyframes_to_json(m.keyframes1, d)}, {"keyframes2", keyframes_to_json(m.keyframes2, d)}};
}

OptimizerConfig parse_optimizer(const json& j, const std::string& pointer) {
  only_keys(j, pointer,
            {"max_iters", "delta_tol", "move_limit", "step", "penalty_init", "penalty_growth", "penalty_max",
             "penalty_interval", "multipliers", "tol_g", "tol_h_fraction", "max_backtracks", "threshold", "ratio_penalty"});
  OptimizerConfig c;
  auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key)) return std::nullopt;
    return number(j[key], pointer + "/" + key);
  };
  if (j.contains("max_iters")) c.max_iters = integer(j["max_iters"], pointer + "/max_iters");
  if (j.contains("penalty_interval")) c.penalty_interval = integer(j["penalty_interval"], pointer + "/penalty_interval");
  if (j.contains("max_backtracks")) c.max_backtracks = integer(j["max_backtracks"], pointer + "/max_backtracks");
  c.delta_tol = opt("delta_tol");
  c.step = opt("step");
  c.penalty_init = opt("penalty_init");
  c.penalty_max = opt("penalty_max");
  c.tol_g = opt("tol_g");
  c.ratio_penalty = opt("ratio_penalty");
  if (auto v = opt("move_limit")) c.move_limit = *v;
  if (auto v = opt("penalty_growth")) c.penalty_growth = *v;
  if (auto v = opt("tol_h_fraction")) c.tol_h_fraction = *v;
  if (auto v = opt("threshold")) c.threshold = *v;
  if (j.contains("multipliers")) {
    const auto m = numbers(j["multipliers"], pointer + "/multipliers", 3);
    c.multiplier_init = {m[0], m[1], m[2]};
  }
  try {
    c.validate();
  } catch (const ConfigError& e) {
    fail(pointer, e.what());
  }
  return c;
}

json optimizer_to_json(const OptimizerConfig& c) {
  json j{{"max_iters", c.max_iters},
         {"move_limit", c.move_limit},
         {"penalty_growth", c.penalty_growth},
         {"penalty_interval", c.penalty_interval},
         {"multipliers", c.multiplier_init},
         {"tol_h_fraction", c.tol_h_fraction},
         {"max_backtracks", c.max_backtracks},
         {"threshold", c.threshold}};
  if (c.delta_tol) j["delta_tol"] = *c.delta_tol;
  if (c.step) j["step"] = *c.step;
  if (c.penalty_init) j["penalty_init"] = *c.penalty_init;
  if (c.penalty_max) j["penalty_max"] = *c.penalty_max;
  if (c.tol_g) j["tol_g"] = *c.tol_g;
  if (c.ratio_penalty) j["ratio_penalty"] = *c.ratio_penalty;
  return j;
}

double gamma_value(const json& j, const std::string& pointer) {
  const double g = number(j, pointer);
  if (g < 0.0 || g > 1.0) fail(pointer, "gamma must lie in [0, 1]");
  return g;
}

}  // namespace

ShapeSpec parse_shape(const json& j, int d, const std::string& pointer) {
  if (!j.is_object() || j.size() != 1) fail(pointer, "a shape is an object with exactly one key");
  const auto& [kind, body] = *j.items().begin();
  const std::string p = pointer + "/" + kind;
  const auto dd = static_cast<std::size_t>(d);
  try {
    if (kind == "box") {
      only_keys(body, p, {"min", "max"});
      const Point lo = to_point(numbers(required(body, p, "min"), p + "/min", dd));
      const Point hi = to_point(numbers(required(body, p, "max"), p + "/max", dd));
      for (int a = 0; a < d; ++a) {
        if (!(hi[a] > lo[a])) fail(p, "box must have positive extent on every axis");
      }
      return ShapeSpec::box(lo, hi);
    }
    if (kind == "ball") {
      only_keys(body, p, {"center", "radius"});
      return ShapeSpec::ball(to_point(numbers(required(body, p, "center"), p + "/center", dd)),
                             number(required(body, p, "radius"), p + "/radius"));
    }
    if (kind == "cylinder") {
      if (d != 3) fail(p, "cylinders require a 3-dimensional scene");
      only_keys(body, p, {"point", "direction", "radius", "half_length"});
      return ShapeSpec::cylinder(to_point(numbers(required(body, p, "point"), p + "/point", dd)),
                                 to_point(numbers(required(body, p, "direction"), p + "/direction", dd)),
                                 number(required(body, p, "radius"), p + "/radius"),
                                 number(required(body, p, "half_length"), p + "/half_length"));
    }
    if (kind == "union" || kind == "intersection" || kind == "difference") {
      if (!body.is_array() || body.empty()) fail(p, "expected a non-empty array of shapes");
      if (kind == "difference" && body.size() != 2) fail(p, "difference takes exactly two shapes");
      std::vector<ShapeSpec> children;
      for (std::size_t i = 0; i < body.size(); ++i) children.push_back(parse_shape(body[i], d, p + "/" + std::to_string(i)));
      if (kind == "union") return ShapeSpec::unite(std::move(children));
      if (kind == "intersection") return ShapeSpec::intersect(std::move(children));
      return ShapeSpec::subtract(children[0], children[1]);
    }
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (!msg.empty() && msg[0] == '/') throw;
    fail(p, msg);
  }
  fail(pointer + "/" + kind, "unknown shape kind");
}

SceneConfig parse_scene(const json& j) {
  only_keys(j, "", {"name", "dimension", "domains", "shapes", "motion", "timesteps", "gamma", "gammas",
                    "optimizer", "supersample", "output_dir", "cache"});
  SceneConfig s;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail("/name", "expected a string");
    s.name = j["name"].get<std::string>();
  }
  s.dimension = integer(required(j, "", "dimension"), "/dimension");
  if (s.dimension != 2 && s.dimension != 3) fail("/dimension", "must be 2 or 3");

  const json& domains = required(j, "", "domains");
  if (!domains.is_array() || domains.size() != 2) fail("/domains", "expected two domains");
  s.domain1 = parse_domain(domains[0], "/domains/0", s.dimension);
  s.domain2 = parse_domain(domains[1], "/domains/1", s.dimension);

  const json& shapes = required(j, "", "shapes");
  if (!shapes.is_array() || shapes.size() != 2) fail("/shapes", "expected two shapes");
  (void)parse_shape(shapes[0], s.dimension, "/shapes/0");
  (void)parse_shape(shapes[1], s.dimension, "/shapes/1");
  s.shape1 = shapes[0];
  s.shape2 = shapes[1];

  s.motion = parse_motion(required(j, "", "motion"), "/motion", s.dimension);
  s.timesteps = integer(required(j, "", "timesteps"), "/timesteps");
  if (s.timesteps < 1) fail("/timesteps", "must be >= 1");

  if (j.contains("gamma") && j.contains("gammas")) fail("/gamma", "give either 'gamma' or 'gammas'");
  if (j.contains("gamma")) s.gammas = {gamma_value(j["gamma"], "/gamma")};
  if (j.contains("gammas")) {
    const json& g = j["gammas"];
    if (!g.is_array() || g.empty()) fail("/gammas", "expected a non-empty array");
    for (std::size_t i = 0; i < g.size(); ++i) s.gammas.push_back(gamma_value(g[i], "/gammas/" + std::to_string(i)));
  }
  if (s.gammas.empty()) s.gammas = {0.5};

  if (j.contains("optimizer")) s.optimizer = parse_optimizer(j["optimizer"], "/optimizer");
  s.optimizer.gamma = s.gammas.front();
  if (j.contains("supersample")) {
    s.supersample = integer(j["supersample"], "/supersample");
    if (s.supersample < 1) fail("/supersample", "must be >= 1");
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) fail("/output_dir", "expected a string");
    s.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("cache")) {
    if (!j["cache"].is_string()) fail("/cache", "expected a string");
    s.cache = j["cache"].get<std::string>();
  }
  return s;
}

SceneConfig parse_scene_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scene file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("scene file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_scene(j);
}

json scene_to_json(const SceneConfig& s) {
  json j;
  if (!s.name.empty()) j["name"] = s.name;
  j["dimension"] = s.dimension;
  j["domains"] = {domain_to_json(s.domain1), domain_to_json(s.domain2)};
  j["shapes"] = {s.shape1, s.shape2};
  j["motion"] = motion_to_json(s.motion, s.dimension);
  j["timesteps"] = s.timesteps;
  j["gammas"] = s.gammas;
  j["optimizer"] = optimizer_to_json(s.optimizer);
  j["supersample"] = s.supersample;
  j["output_dir"] = s.output_dir;
  if (!s.cache.empty()) j["cache"] = s.cache;
  return j;
}

std::vector<double> parse_gamma_list(const std::string& text) {
  std::vector<double> out;
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("invalid gamma list '" + text + "'");
    }
    if (used != s.size()) throw ConfigError("invalid gamma list '" + text + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::stringstream ss(text);
    std::string a, b, c;
    if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, c)) {
      throw ConfigError("gamma range must look like start:stop:step");
    }
    const double lo = to_double(a);
    const double hi = to_double(b);
    const double step = to_double(c);
    if (!(step > 0.0) || hi < lo) throw ConfigError("invalid gamma range '" + text + "'");
    const auto n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(std::round((lo + i * step) * 1e12) / 1e12);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(item));
  }
  if (out.empty()) throw ConfigError("empty gamma list");
  for (double g : out) {
    if (g < 0.0 || g > 1.0) throw ConfigError("gamma values must lie in [0, 1]");
  }
  return out;
}

std::uint64_t content_hash(const SceneConfig& s, const std::string& leg) {
  const json key{{"dimension", s.dimension},
                 {"domains", {domain_to_json(s.domain1), domain_to_json(s.domain2)}},
                 {"motion", motion_to_json(s.motion, s.dimension)},
                 {"timesteps", s.timesteps},
                 {"leg", leg}};
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : key.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

BuiltScene build_scene(const SceneConfig& config) {
  BuiltScene b{config,
               build_grid(config.domain1.origin, config.domain1.spacing, config.domain1.dims),
               build_grid(config.domain2.origin, config.domain2.spacing, config.domain2.dims),
               parse_shape(config.shape1, config.dimension, "/shapes/0"),
               parse_shape(config.shape2, config.dimension, "/shapes/1"),
               {},
               {},
               {},
               {}};
  b.rho1 = rasterize(b.shape1, b.grid1, config.supersample);
  b.rho2 = rasterize(b.shape2, b.grid2, config.supersample);
  if (config.motion.is_builtin()) {
    b.motion = builtin_motion(config.motion.builtin, config.motion.params);
  } else {
    b.motion = {keyframe_motion(config.motion.keyframes1), keyframe_motion(config.motion.keyframes2)};
  }
  b.trajectory = sample_relative_motion(b.motion.body1, b.motion.body2, config.timesteps);
  return b;
}

CorrelationPair assemble_pair(const BuiltScene& scene) {
  return {assemble(scene.grid1, scene.grid2, scene.trajectory.poses_12),
          assemble(scene.grid2, scene.grid1, scene.trajectory.poses_21)};
}

CacheHeader expected_header(const BuiltScene& scene, bool leg12) {
  CacheHeader h;
  h.dimension = static_cast<std::uint32_t>(scene.config.dimension);
  h.rows = static_cast<std::uint32_t>(leg12 ? scene.grid1.size() : scene.grid2.size());
  h.cols = static_cast<std::uint32_t>(leg12 ? scene.grid2.size() : scene.grid1.size());
  h.steps = static_cast<std::uint32_t>(scene.config.timesteps);
  h.delta = 1.0 / scene.config.timesteps;
  h.content_hash = content_hash(scene.config, leg12 ? "w12" : "w21");
  return h;
}

std::filesystem::path cache_path(const SceneConfig& scene, bool leg12) {
  return scene.cache + (leg12 ? ".w12.cogw" : ".w21.cogw");
}

CorrelationPair load_or_assemble(const BuiltScene& scene) {
  if (!scene.config.cache.empty()) {
    const auto p12 = cache_path(scene.config, true);
    const auto p21 = cache_path(scene.config, false);
    if (std::filesystem::exists(p12) && std::filesystem::exists(p21)) {
      return {read_correlation_cache(p12, expected_header(scene, true)),
              read_correlation_cache(p21, expected_header(scene, false))};
    }
  }
  return assemble_pair(scene);
}

}  // namespace cogen
