#include "cogen/motion.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

#include "cogen/errors.hpp"

namespace cogen {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double param(const MotionParams& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

void check_known(const MotionParams& p, std::initializer_list<const char*> keys,
                 const std::string& name) {
  for (const auto& [k, v] : p) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError("unknown parameter '" + k + "' for motion '" + name + "'");
    if (!std::isfinite(v)) throw ConfigError("motion parameter '" + k + "' must be finite");
  }
}

double positive(double v, const char* what) {
  if (!(v > 0.0)) throw ConfigError(std::string("motion parameter '") + what + "' must be positive");
  return v;
}

}  // namespace

Pose Pose::rotation_z(double angle) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return p;
}

Pose Pose::rotation_about(const Point& center, double angle) {
  Pose p = rotation_z(angle);
  p.translation = center - p.rotation * center;
  return p;
}

Pose Pose::translate(const Eigen::Vector3d& t) {
  Pose p;
  p.translation = t;
  return p;
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose inverse(const Pose& a) {
  const Eigen::Matrix3d rt = a.rotation.transpose();
  return {rt, -(rt * a.translation)};
}

void validate_pose(const Pose& p) {
  const Eigen::Matrix3d e = p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity();
  if (!p.rotation.allFinite() || !p.translation.allFinite()) {
    throw ValidationError("pose has non-finite entries");
  }
  if (e.cwiseAbs().maxCoeff() > 1e-9) throw ValidationError("pose rotation is not orthonormal");
  if (std::abs(p.rotation.determinant() - 1.0) > 1e-9) {
    throw ValidationError("pose rotation has determinant != +1");
  }
}

Trajectory sample_relative_motion(const MotionFn& motion1, const MotionFn& motion2, int steps) {
  if (steps < 1) throw ConfigError("timestep count must be >= 1");
  Trajectory tr;
  tr.steps = steps;
  tr.delta = 1.0 / steps;
  tr.times.resize(steps);
  tr.poses_12.resize(steps);
  tr.poses_21.resize(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) * tr.delta;
    const Pose p1 = motion1(t);
    const Pose p2 = motion2(t);
    validate_pose(p1);
    validate_pose(p2);
    tr.times[k] = t;
    tr.poses_12[k] = compose(inverse(p1), p2);
    tr.poses_21[k] = inverse(tr.poses_12[k]);
  }
  return tr;
}

double cam_follower_height(double L, double cam_angle) {
  return 0.75 * L + (L / 8.0) * std::cos(2.0 * cam_angle);
}

MotionPair builtin_motion(const std::string& name, const MotionParams& params) {
  if (name == "counter_rotation") {
    check_known(params, {"L", "spacing"}, name);
    const double L = positive(param(params, "L", 1.0), "L");
    const double spacing = positive(param(params, "spacing", 0.9 * L), "spacing");
    const Point c1(-0.5 * spacing, 0.0, 0.0);
    const Point c2(0.5 * spacing, 0.0, 0.0);
    return {[c1](double t) { return Pose::rotation_about(c1, kTwoPi * t); },
            [c2](double t) { return Pose::rotation_about(c2, -kTwoPi * t); }};
  }
  if (name == "cam_follower_2d") {
    check_known(params, {"L"}, name);
    const double L = positive(param(params, "L", 1.0), "L");
    const double y0 = cam_follower_height(L, 0.0);
    return {[](double t) { return Pose::rotation_z(kTwoPi * t); },
            [L, y0](double t) {
              return Pose::translate({0.0, cam_follower_height(L, kTwoPi * t) - y0, 0.0});
            }};
  }
  if (name == "cam_follower_3d") {
    check_known(params, {}, name);
    return {[](double t) {
              const double a = kTwoPi * t;
              Pose p;
              p.rotation << std::cos(a), std::sin(a), 0.0,
                            -std::sin(a), std::cos(a), 0.0,
                            0.0, 0.0, 1.0;
              return p;
            },
            [](double t) {
              const double f = 0.5 * std::abs(std::sin(kTwoPi * t));
              Pose p;
              p.rotation << 1.0, 0.0, 0.0,
                            0.0, std::cos(f), std::sin(f),
                            0.0, -std::sin(f), std::cos(f);
              return p;
            }};
  }
  if (name == "screw") {
    check_known(params, {"L", "turns"}, name);
    const double L = positive(param(params, "L", 1.0), "L");
    const double turns = positive(param(params, "turns", 4.0), "turns");
    return {[L, turns](double t) {
              const double phi = kTwoPi * turns * t;
              Pose p;
              p.rotation << std::cos(phi), std::sin(phi), 0.0,
                            -std::sin(phi), std::cos(phi), 0.0,
                            0.0, 0.0, 1.0;
              p.translation = {0.0, 0.0, -L / (10.0 * std::numbers::pi) * phi};
              return p;
            },
            [](double) { return Pose::identity(); }};
  }
  throw ConfigError("unknown builtin motion '" + name + "'");
}

MotionFn keyframe_motion(std::vector<Keyframe> frames) {
  if (frames.empty()) throw ConfigError("keyframe motion needs at least one keyframe");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].t < 0.0 || frames[i].t > 1.0) throw ConfigError("keyframe time outside [0, 1]");
    if (i > 0 && !(frames[i].t > frames[i - 1].t)) {
      throw ConfigError("keyframe times must be strictly increasing");
    }
    validate_pose({frames[i].rotation, frames[i].translation});
  }
  return [frames = std::move(frames)](double t) {
    if (t <= frames.front().t) return Pose{frames.front().rotation, frames.front().translation};
    if (t >= frames.back().t) return Pose{frames.back().rotation, frames.back().translation};
    std::size_t j = 1;
    while (frames[j].t < t) ++j;
    const Keyframe& a = frames[j - 1];
    const Keyframe& b = frames[j];
    const double s = (t - a.t) / (b.t - a.t);
    const Eigen::AngleAxisd rel(a.rotation.transpose() * b.rotation);
    Pose p;
    p.rotation = a.rotation * Eigen::AngleAxisd(s * rel.angle(), rel.axis()).toRotationMatrix();
    p.translation = (1.0 - s) * a.translation + s * b.translation;
    return p;
  };
}

}  // namespace cogen
