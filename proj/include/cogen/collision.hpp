#pragma once

#include <span>
#include <vector>

#include "cogen/correlation.hpp"
#include "cogen/geometry.hpp"
#include "cogen/motion.hpp"

namespace cogen {

// Naming: W12 has rows on body-1 cells and columns on body-2 vertices
// (assembled with poses_12), W21 the converse. Then
//   g21 = eps1^d * rho1^T W12 rho2,   g12 = eps2^d * rho2^T W21 rho1.

/// Per-cell collision duration; `values[i]` is a time fraction.
struct LocalMeasureField {
  Grid grid;
  std::vector<double> values;
};

struct PartitionMasks {
  Mask hat;    // initially colliding
  Mask tilde;  // initially collision-free
};

struct Sensitivities {
  std::vector<double> dg21_drho1;
  std::vector<double> dg21_drho2;
  std::vector<double> dg12_drho1;
  std::vector<double> dg12_drho2;
};

/// eps^d * rho_stat^T W rho_mov with eps the stationary grid spacing.
double global_measure(const DensityField& rho_stat, const DensityField& rho_mov, const CorrelationMatrix& w);

/// Matrix-free form: the same quantity with W assembled from `leg`, for
/// scenes whose matrices do not fit in memory.
double global_measure(const DensityField& rho_stat, const DensityField& rho_mov, std::span<const Pose> leg);

/// f = W rho_other on the grid of rho_self; masked form multiplies by rho_self.
LocalMeasureField local_field(const DensityField& rho_self, const DensityField& rho_other,
                              const CorrelationMatrix& w, bool masked);

Sensitivities sensitivities(const DensityField& rho1, const DensityField& rho2, const CorrelationMatrix& w12,
                            const CorrelationMatrix& w21);

/// hat_i = rho_i > 0 and fbar_i > tol; tilde_i = rho_i > 0 and fbar_i <= tol.
PartitionMasks partition(const DensityField& rho, const LocalMeasureField& f_masked, double tol = 0.0);

/// Maximal region of `target` whose displaced cell centers never land in an
/// obstacle cell denser than theta. leg[k] maps target points into the
/// obstacle frame; points outside the obstacle grid are free.
DensityField unsweep(const DensityField& obstacle, std::span<const Pose> leg, const Grid& target,
                     double theta = 0.5);

/// Cells of `target` whose displaced centers land in a shape cell denser than
/// theta for at least one step. Cellwise complement of unsweep on the same
/// sampling.
DensityField sweep(const DensityField& shape, std::span<const Pose> leg, const Grid& target,
                   double theta = 0.5);

}  // namespace cogen
