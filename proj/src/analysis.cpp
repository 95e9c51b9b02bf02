#include "cogen/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "cogen/errors.hpp"

namespace cogen {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace {

using BPoint = bg::model::point<double, 3, bg::cs::cartesian>;

std::vector<Point> occupied_centers(const DensityField& rho, double theta) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] > theta) out.push_back(rho.grid().center(static_cast<CellIndex>(i)));
  }
  return out;
}

}  // namespace

double oracle_global_measure(const ShapeSpec& shape1, const ShapeSpec& shape2, const Trajectory& trajectory,
                             int s, const Grid& grid1) {
  if (s < 2) throw ConfigError("oracle quadrature needs at least 2 samples per cell axis");
  if (trajectory.poses_21.empty()) throw ConfigError("trajectory has no samples");
  const int d = grid1.dimension();
  const double eps = grid1.spacing();
  const int sz = d == 3 ? s : 1;
  const double per_cell = static_cast<double>(s) * s * sz;
  double total = 0.0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : total)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(grid1.size()); ++ii) {
    const auto cell = static_cast<CellIndex>(ii);
    const Point lo = grid1.center(cell) - Point(0.5 * eps, 0.5 * eps, d == 3 ? 0.5 * eps : 0.0);
    double hits = 0.0;
    for (int c = 0; c < sz; ++c) {
      for (int b = 0; b < s; ++b) {
        for (int a = 0; a < s; ++a) {
          Point p = lo + eps * Point((a + 0.5) / s, (b + 0.5) / s, d == 3 ? (c + 0.5) / s : 0.0);
          if (d == 2) p.z() = 0.0;
          if (!shape1.contains(p)) continue;
          for (const Pose& pose : trajectory.poses_21) {
            if (shape2.contains(pose.apply(p))) hits += 1.0;
          }
        }
      }
    }
    total += hits / per_cell;
  }
  return total * grid1.cell_measure() / static_cast<double>(trajectory.poses_21.size());
}

DistanceSeries min_distance_series(const DensityField& rho1, const DensityField& rho2,
                                   const Trajectory& trajectory, double theta) {
  const auto pts1 = occupied_centers(rho1, theta);
  const auto pts2 = occupied_centers(rho2, theta);
  if (pts1.empty() || pts2.empty()) throw ValidationError("distance is undefined for an empty solid");

  std::vector<BPoint> bpts;
  bpts.reserve(pts1.size());
  for (const auto& p : pts1) bpts.emplace_back(p.x(), p.y(), p.z());
  const bgi::rtree<BPoint, bgi::quadratic<16>> tree(bpts.begin(), bpts.end());

  const auto steps = trajectory.poses_12.size();
  DistanceSeries out;
  out.times = trajectory.times;
  out.distance.assign(steps, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(steps); ++k) {
    const Pose& pose = trajectory.poses_12[static_cast<std::size_t>(k)];
    double best = std::numeric_limits<double>::infinity();
    std::vector<BPoint> nearest;
    for (const auto& q : pts2) {
      const Point x = pose.apply(q);
      const BPoint bx(x.x(), x.y(), x.z());
      nearest.clear();
      tree.query(bgi::nearest(bx, 1), std::back_inserter(nearest));
      best = std::min(best, bg::distance(bx, nearest.front()));
      if (best == 0.0) break;
    }
    out.distance[static_cast<std::size_t>(k)] = best;
  }
  double sum = 0.0;
  out.min = std::numeric_limits<double>::infinity();
  for (double v : out.distance) {
    sum += v;
    out.min = std::min(out.min, v);
  }
  out.mean = steps ? sum / static_cast<double>(steps) : 0.0;
  if (!steps) out.min = 0.0;
  return out;
}

double contact_fraction(const DistanceSeries& series, double tolerance) {
  if (tolerance < 0.0) throw ConfigError("contact tolerance must be >= 0");
  if (series.distance.empty()) return 0.0;
  const auto n = std::count_if(series.distance.begin(), series.distance.end(),
                               [&](double v) { return v <= tolerance; });
  return static_cast<double>(n) / static_cast<double>(series.distance.size());
}

double default_contact_tolerance(const Grid& grid) {
  return std::sqrt(static_cast<double>(grid.dimension())) * grid.spacing();
}

double periodicity_score(const DensityField& field, int axis, int p) {
  const Grid& g = field.grid();
  if (axis < 0 || axis >= g.dimension()) throw ConfigError("axis out of range");
  const auto dims = g.dims();
  if (p < 1 || 2 * p > dims[static_cast<std::size_t>(axis)]) {
    throw ConfigError("period must lie in [1, extent/2]");
  }
  std::array<int, 3> hi = dims;
  hi[static_cast<std::size_t>(axis)] -= p;
  std::array<int, 3> shift{0, 0, 0};
  shift[static_cast<std::size_t>(axis)] = p;

  double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
  double n = 0.0;
  for (int z = 0; z < hi[2]; ++z) {
    for (int y = 0; y < hi[1]; ++y) {
      for (int x = 0; x < hi[0]; ++x) {
        const double a = field[g.linear_index(x, y, z)];
        const double b = field[g.linear_index(x + shift[0], y + shift[1], z + shift[2])];
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
        n += 1.0;
      }
    }
  }
  const double va = saa - sa * sa / n;
  const double vb = sbb - sb * sb / n;
  const double scale = std::max(1.0, n) * 1e-12;
  if (va <= scale || vb <= scale) throw ValidationError("periodicity is undefined for a zero-variance field");
  const double r = (sab - sa * sb / n) / std::sqrt(va * vb);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace cogen
