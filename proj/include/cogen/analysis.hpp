#pragma once

#include <vector>

#include "cogen/geometry.hpp"
#include "cogen/motion.hpp"

namespace cogen {

/// Direct quadrature of g21: s^d stratified points per cell of grid1, tested
/// against shape1 and, after mapping into frame 2, against shape2.
double oracle_global_measure(const ShapeSpec& shape1, const ShapeSpec& shape2, const Trajectory& trajectory,
                             int samples_per_cell, const Grid& grid1);

struct DistanceSeries {
  std::vector<double> times;
  std::vector<double> distance;  // per timestep, length units
  double mean = 0.0;
  double min = 0.0;
};

/// Minimum center-to-center distance between the thresholded solids at each
/// timestep, measured in frame 1. Throws ValidationError if a solid is empty.
DistanceSeries min_distance_series(const DensityField& rho1, const DensityField& rho2,
                                   const Trajectory& trajectory, double theta = 0.5);

/// Fraction of timesteps with distance <= tolerance. Throws ConfigError on a
/// negative tolerance.
double contact_fraction(const DistanceSeries& series, double tolerance);

/// One cell diagonal, sqrt(d) * eps.
double default_contact_tolerance(const Grid& grid);

/// Pearson correlation of the field with itself shifted by p cells along
/// `axis`, over the overlap.
double periodicity_score(const DensityField& field, int axis, int period_in_cells);

}  // namespace cogen
