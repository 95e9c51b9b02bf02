#include "cogen/collision.hpp"

#include <string>

#include "cogen/errors.hpp"

namespace cogen {

namespace {

void check_shape(const DensityField& rho_stat, const DensityField& rho_mov, const CorrelationMatrix& w) {
  if (w.rows() != rho_stat.size() || w.cols() != rho_mov.size()) {
    throw DimensionError("correlation matrix is " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + " but fields have " + std::to_string(rho_stat.size()) +
                         " and " + std::to_string(rho_mov.size()) + " cells");
  }
}

void scale(std::vector<double>& v, double s) {
  for (auto& x : v) x *= s;
}

// Center-sampled occupancy test shared by sweep and unsweep.
template <typename Decide>
DensityField sample_leg(const DensityField& obstacle, std::span<const Pose> leg, const Grid& target,
                        double theta, Decide decide) {
  if (obstacle.grid().dimension() != target.dimension()) {
    throw DimensionError("obstacle and target grids differ in dimension");
  }
  const Grid& source = obstacle.grid();
  std::vector<double> out(target.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(target.size()); ++ii) {
    const Point x = target.center(static_cast<CellIndex>(ii));
    bool hit = false;
    for (const Pose& p : leg) {
      const auto cell = locate_cell(source, p.apply(x));
      if (cell && obstacle[*cell] > theta) {
        hit = true;
        break;
      }
    }
    out[static_cast<std::size_t>(ii)] = decide(hit) ? 1.0 : 0.0;
  }
  return DensityField(target, std::move(out));
}

}  // namespace

double global_measure(const DensityField& rho_stat, const DensityField& rho_mov, const CorrelationMatrix& w) {
  check_shape(rho_stat, rho_mov, w);
  return rho_stat.grid().cell_measure() * bilinear(w, rho_stat.values(), rho_mov.values());
}

double global_measure(const DensityField& rho_stat, const DensityField& rho_mov, std::span<const Pose> leg) {
  if (rho_stat.grid().dimension() != rho_mov.grid().dimension()) {
    throw DimensionError("stationary and moving grids differ in dimension");
  }
  if (leg.empty()) throw ConfigError("trajectory leg must contain at least one pose");
  const Grid& stat = rho_stat.grid();
  const Grid& mov = rho_mov.grid();
  double total = 0.0;
#pragma omp parallel for schedule(dynamic, 256) reduction(+ : total)
  for (std::int64_t jj = 0; jj < static_cast<std::int64_t>(mov.size()); ++jj) {
    const double r = rho_mov[static_cast<std::size_t>(jj)];
    if (r == 0.0) continue;
    const Point x = mov.center(static_cast<CellIndex>(jj));
    double s = 0.0;
    for (const Pose& p : leg) {
      if (const auto cell = locate_cell(stat, p.apply(x))) s += rho_stat[*cell];
    }
    total += r * s;
  }
  return stat.cell_measure() * total / static_cast<double>(leg.size());
}

LocalMeasureField local_field(const DensityField& rho_self, const DensityField& rho_other,
                              const CorrelationMatrix& w, bool masked) {
  check_shape(rho_self, rho_other, w);
  LocalMeasureField f{rho_self.grid(), matvec(w, rho_other.values())};
  if (masked) {
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] *= rho_self[i];
  }
  return f;
}

Sensitivities sensitivities(const DensityField& rho1, const DensityField& rho2, const CorrelationMatrix& w12,
                            const CorrelationMatrix& w21) {
  check_shape(rho1, rho2, w12);
  check_shape(rho2, rho1, w21);
  const double c1 = rho1.grid().cell_measure();
  const double c2 = rho2.grid().cell_measure();
  Sensitivities s{matvec(w12, rho2.values()), matvec_transposed(w12, rho1.values()),
                  matvec_transposed(w21, rho2.values()), matvec(w21, rho1.values())};
  scale(s.dg21_drho1, c1);
  scale(s.dg21_drho2, c1);
  scale(s.dg12_drho1, c2);
  scale(s.dg12_drho2, c2);
  return s;
}

PartitionMasks partition(const DensityField& rho, const LocalMeasureField& f_masked, double tol) {
  if (f_masked.values.size() != rho.size()) throw DimensionError("local field does not match density field");
  if (tol < 0.0) throw ConfigError("partition tolerance must be >= 0");
  PartitionMasks m{Mask(rho.size(), 0), Mask(rho.size(), 0)};
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (!(rho[i] > 0.0)) continue;
    if (f_masked.values[i] > tol) {
      m.hat[i] = 1;
    } else {
      m.tilde[i] = 1;
    }
  }
  return m;
}

DensityField unsweep(const DensityField& obstacle, std::span<const Pose> leg, const Grid& target, double theta) {
  return sample_leg(obstacle, leg, target, theta, [](bool hit) { return !hit; });
}

DensityField sweep(const DensityField& shape, std::span<const Pose> leg, const Grid& target, double theta) {
  return sample_leg(shape, leg, target, theta, [](bool hit) { return hit; });
}

}  // namespace cogen
