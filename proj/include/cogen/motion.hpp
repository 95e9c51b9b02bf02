#pragma once

#include <Eigen/Core>

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cogen/geometry.hpp"

namespace cogen {

/// Rigid map x' = R x + t. Planar poses rotate about z and keep t.z = 0.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose rotation_z(double angle);
  static Pose rotation_about(const Point& center, double angle);  // about z through center
  static Pose translate(const Eigen::Vector3d& t);

  Point apply(const Point& x) const { return rotation * x + translation; }
};

Pose compose(const Pose& a, const Pose& b);  // a after b
Pose inverse(const Pose& a);
inline Point apply(const Pose& a, const Point& x) { return a.apply(x); }

/// Throws ValidationError unless R is orthonormal with det +1 (tolerance 1e-9).
void validate_pose(const Pose& p);

using MotionFn = std::function<Pose(double t)>;

/// Midpoint samples t_k = (k + 1/2) / K of a relative motion.
///
/// poses_12[k] maps body-2 points into body 1's frame (tau_1^-1 tau_2);
/// poses_21[k] is its inverse.
struct Trajectory {
  int steps = 0;
  double delta = 0.0;
  std::vector<double> times;
  std::vector<Pose> poses_12;
  std::vector<Pose> poses_21;
};

Trajectory sample_relative_motion(const MotionFn& motion1, const MotionFn& motion2, int steps);

/// Motions of both bodies in a shared world frame.
struct MotionPair {
  MotionFn body1;
  MotionFn body2;
};

using MotionParams = std::map<std::string, double>;

/// Built-in motion programs:
///   counter_rotation  params: L (1), spacing (0.9 L). Square centers at
///                     (-spacing/2, 0) and (+spacing/2, 0); theta_1 = 2 pi t,
///                     theta_2 = -2 pi t about each center.
///   cam_follower_2d   params: L (1). Cam turns 2 pi t about the origin; the
///                     follower translates along y by y_F(t) - y_F(0) with
///                     y_F = 3L/4 + (L/8) cos(2 theta_C).
///   cam_follower_3d   cam R_C about z with theta_C = 2 pi t, follower R_F
///                     about x with theta_F = |sin theta_C| / 2; matrices as
///                     printed in the source mechanism (sine in the upper
///                     right), applied as active maps.
///   screw             params: L (1), turns (4). Body 1 (bolt) turns
///                     phi = 2 pi turns t about z while translating
///                     -(L / (10 pi)) phi along z; body 2 is stationary.
MotionPair builtin_motion(const std::string& name, const MotionParams& params);

/// Follower height for the planar cam program.
double cam_follower_height(double L, double cam_angle);

struct Keyframe {
  double t = 0.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Piecewise interpolation between keyframes: translations linearly,
/// rotations along the geodesic of the relative rotation (axis-angle).
/// Keyframe times must be strictly increasing within [0, 1].
MotionFn keyframe_motion(std::vector<Keyframe> frames);

}  // namespace cogen
