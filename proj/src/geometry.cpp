#include "cogen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cogen/errors.hpp"

namespace cogen {

Grid build_grid(std::span<const double> origin, double spacing, std::span<const int> dims) {
  const auto d = dims.size();
  if (d != 2 && d != 3) {
    throw ConfigError("grid dimension must be 2 or 3, got " + std::to_string(d));
  }
  if (origin.size() != d) {
    throw ConfigError("grid origin has " + std::to_string(origin.size()) +
                      " components for a " + std::to_string(d) + "-dimensional grid");
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw ConfigError("grid spacing must be positive");
  }
  Grid g;
  g.dimension_ = static_cast<int>(d);
  g.spacing_ = spacing;
  std::uint64_t n = 1;
  for (std::size_t a = 0; a < d; ++a) {
    if (dims[a] < 1) throw ConfigError("grid dims must be >= 1 on every axis");
    if (!std::isfinite(origin[a])) throw ConfigError("grid origin must be finite");
    g.dims_[a] = dims[a];
    g.origin_[a] = origin[a];
    n *= static_cast<std::uint64_t>(dims[a]);
    if (n > std::numeric_limits<CellIndex>::max()) {
      throw ConfigError("grid cell count overflows the cell index type");
    }
  }
  g.size_ = static_cast<std::size_t>(n);
  return g;
}

double Grid::cell_measure() const { return std::pow(spacing_, dimension_); }

std::array<int, 3> Grid::multi_index(CellIndex i) const {
  const int x = static_cast<int>(i % static_cast<CellIndex>(dims_[0]));
  const CellIndex rest = i / static_cast<CellIndex>(dims_[0]);
  const int y = static_cast<int>(rest % static_cast<CellIndex>(dims_[1]));
  const int z = static_cast<int>(rest / static_cast<CellIndex>(dims_[1]));
  return {x, y, z};
}

CellIndex Grid::linear_index(int x, int y, int z) const {
  return static_cast<CellIndex>(x) +
         static_cast<CellIndex>(dims_[0]) *
             (static_cast<CellIndex>(y) + static_cast<CellIndex>(dims_[1]) * static_cast<CellIndex>(z));
}

Point Grid::center(CellIndex i) const {
  const auto m = multi_index(i);
  Point c = Point::Zero();
  for (int a = 0; a < dimension_; ++a) c[a] = origin_[a] + (m[a] + 0.5) * spacing_;
  return c;
}

Point Grid::upper() const {
  Point u = Point::Zero();
  for (int a = 0; a < dimension_; ++a) u[a] = origin_[a] + dims_[a] * spacing_;
  return u;
}

std::optional<CellIndex> locate_cell(const Grid& grid, const Point& p) {
  std::array<int, 3> m{0, 0, 0};
  const double inv = 1.0 / grid.spacing();
  for (int a = 0; a < grid.dimension(); ++a) {
    const double f = std::floor((p[a] - grid.origin()[a]) * inv);
    if (!(f >= 0.0) || f >= grid.dims()[a]) return std::nullopt;
    m[a] = static_cast<int>(f);
  }
  return grid.linear_index(m[0], m[1], m[2]);
}

// ---------------------------------------------------------------------------

DensityField::DensityField(Grid grid, double fill)
    : grid_(std::move(grid)), values_(grid_.size(), std::clamp(fill, 0.0, 1.0)) {}

DensityField::DensityField(Grid grid, std::vector<double> values) : grid_(std::move(grid)) {
  assign(std::move(values));
}

void DensityField::set(std::size_t i, double v) { values_.at(i) = std::clamp(v, 0.0, 1.0); }

void DensityField::assign(std::vector<double> values) {
  if (values.size() != grid_.size()) {
    throw DimensionError("density field has " + std::to_string(values.size()) +
                         " values for a grid of " + std::to_string(grid_.size()) + " cells");
  }
  for (auto& v : values) {
    if (std::isnan(v)) throw NumericalError("density value is NaN");
    v = std::clamp(v, 0.0, 1.0);
  }
  values_ = std::move(values);
}

// ---------------------------------------------------------------------------

struct ShapeSpec::Node {
  Kind kind;
  Point a = Point::Zero();  // box lo / ball center / cylinder axis point
  Point b = Point::Zero();  // box hi / cylinder unit direction
  double radius = 0.0;
  double half_length = 0.0;
  std::vector<ShapeSpec> children;
};

ShapeSpec ShapeSpec::box(const Point& lo, const Point& hi) {
  for (int a = 0; a < 3; ++a) {
    if (!(hi[a] >= lo[a])) throw ConfigError("box max must not be below box min");
  }
  // Planar boxes carry a zero z extent; the extents that matter must be positive.
  if (!((hi - lo).head<2>().minCoeff() > 0.0)) throw ConfigError("box must have positive extent");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Box;
  n->a = lo;
  n->b = hi;
  return ShapeSpec(std::move(n));
}

ShapeSpec ShapeSpec::ball(const Point& center, double radius) {
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Ball;
  n->a = center;
  n->radius = radius;
  return ShapeSpec(std::move(n));
}

ShapeSpec ShapeSpec::cylinder(const Point& axis_point, const Point& axis_direction, double radius,
                              double half_length) {
  if (!(radius > 0.0) || !(half_length > 0.0)) {
    throw ConfigError("cylinder radius and half-length must be positive");
  }
  const double len = axis_direction.norm();
  if (!(len > 0.0)) throw ConfigError("cylinder axis direction must be non-zero");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Cylinder;
  n->a = axis_point;
  n->b = axis_direction / len;
  n->radius = radius;
  n->half_length = half_length;
  return ShapeSpec(std::move(n));
}

namespace {
ShapeSpec::Kind check_children(const std::vector<ShapeSpec>& c, ShapeSpec::Kind k) {
  if (c.empty()) throw ConfigError("boolean shape needs at least one operand");
  return k;
}
}  // namespace

ShapeSpec ShapeSpec::unite(std::vector<ShapeSpec> children) {
  auto n = std::make_shared<Node>();
  n->kind = check_children(children, Kind::Union);
  n->children = std::move(children);
  return ShapeSpec(std::move(n));
}

ShapeSpec ShapeSpec::intersect(std::vector<ShapeSpec> children) {
  auto n = std::make_shared<Node>();
  n->kind = check_children(children, Kind::Intersection);
  n->children = std::move(children);
  return ShapeSpec(std::move(n));
}

ShapeSpec ShapeSpec::subtract(ShapeSpec a, ShapeSpec b) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Difference;
  n->children = {std::move(a), std::move(b)};
  return ShapeSpec(std::move(n));
}

ShapeSpec::Kind ShapeSpec::kind() const { return node_->kind; }
const Point& ShapeSpec::point_a() const { return node_->a; }
const Point& ShapeSpec::point_b() const { return node_->b; }
double ShapeSpec::radius() const { return node_->radius; }
double ShapeSpec::half_length() const { return node_->half_length; }
const std::vector<ShapeSpec>& ShapeSpec::children() const { return node_->children; }

bool ShapeSpec::contains(const Point& p) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Box:
      return (p.array() >= n.a.array()).all() && (p.array() <= n.b.array()).all();
    case Kind::Ball:
      return (p - n.a).squaredNorm() <= n.radius * n.radius;
    case Kind::Cylinder: {
      const Point r = p - n.a;
      const double along = r.dot(n.b);
      if (std::abs(along) > n.half_length) return false;
      return (r - along * n.b).squaredNorm() <= n.radius * n.radius;
    }
    case Kind::Union:
      return std::any_of(n.children.begin(), n.children.end(),
                         [&](const ShapeSpec& c) { return c.contains(p); });
    case Kind::Intersection:
      return std::all_of(n.children.begin(), n.children.end(),
                         [&](const ShapeSpec& c) { return c.contains(p); });
    case Kind::Difference:
      return n.children[0].contains(p) && !n.children[1].contains(p);
  }
  return false;
}

bool ShapeSpec::bounds(Point& lo, Point& hi) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::Box:
      lo = n.a;
      hi = n.b;
      return true;
    case Kind::Ball:
      lo = n.a.array() - n.radius;
      hi = n.a.array() + n.radius;
      return true;
    case Kind::Cylinder: {
      const double reach = n.radius + n.half_length;
      lo = n.a.array() - reach;
      hi = n.a.array() + reach;
      return true;
    }
    case Kind::Union: {
      bool any = false;
      for (const auto& c : n.children) {
        Point l, h;
        if (!c.bounds(l, h)) continue;
        lo = any ? Point(lo.cwiseMin(l)) : l;
        hi = any ? Point(hi.cwiseMax(h)) : h;
        any = true;
      }
      return any;
    }
    case Kind::Intersection: {
      for (std::size_t k = 0; k < n.children.size(); ++k) {
        Point l, h;
        if (!n.children[k].bounds(l, h)) return false;
        lo = k == 0 ? l : Point(lo.cwiseMax(l));
        hi = k == 0 ? h : Point(hi.cwiseMin(h));
      }
      return (hi.array() >= lo.array()).all();
    }
    case Kind::Difference:
      return n.children[0].bounds(lo, hi);
  }
  return false;
}

// ---------------------------------------------------------------------------

DensityField rasterize(const ShapeSpec& shape, const Grid& grid, int supersample) {
  if (supersample < 1) throw ConfigError("supersample must be >= 1");
  DensityField out(grid, 0.0);
  Point lo, hi;
  if (!shape.bounds(lo, hi)) return out;

  const int d = grid.dimension();
  const int s = supersample;
  const double eps = grid.spacing();
  const double h = eps / s;
  const int sz = d == 3 ? s : 1;
  const double total = static_cast<double>(s) * s * sz;

  std::vector<double> values(grid.size(), 0.0);
#pragma omp parallel for schedule(static)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(grid.size()); ++ii) {
    const auto i = static_cast<CellIndex>(ii);
    const Point c = grid.center(i);
    bool outside = false;
    for (int a = 0; a < d; ++a) {
      if (c[a] + 0.5 * eps < lo[a] || c[a] - 0.5 * eps > hi[a]) outside = true;
    }
    if (outside) continue;
    const Point corner = c - Point::Constant(0.5 * eps);
    std::size_t hits = 0;
    Point p = Point::Zero();
    for (int kz = 0; kz < sz; ++kz) {
      if (d == 3) p[2] = corner[2] + (kz + 0.5) * h;
      for (int ky = 0; ky < s; ++ky) {
        p[1] = corner[1] + (ky + 0.5) * h;
        for (int kx = 0; kx < s; ++kx) {
          p[0] = corner[0] + (kx + 0.5) * h;
          hits += shape.contains(p) ? 1 : 0;
        }
      }
    }
    values[i] = static_cast<double>(hits) / total;
  }
  out.assign(std::move(values));
  return out;
}

double measure(const DensityField& field) {
  double sum = 0.0;
  for (double v : field.values()) sum += v;
  return sum * field.grid().cell_measure();
}

double measure(const DensityField& field, const Mask& mask) {
  if (mask.size() != field.size()) throw DimensionError("mask size does not match field");
  double sum = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (mask[i]) sum += field[i];
  }
  return sum * field.grid().cell_measure();
}

Mask threshold(const DensityField& field, double theta) {
  Mask m(field.size(), 0);
  for (std::size_t i = 0; i < field.size(); ++i) m[i] = field[i] > theta ? 1 : 0;
  return m;
}

DensityField field_from_mask(const Grid& grid, const Mask& mask) {
  if (mask.size() != grid.size()) throw DimensionError("mask size does not match grid");
  std::vector<double> v(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) v[i] = mask[i] ? 1.0 : 0.0;
  return DensityField(grid, std::move(v));
}

std::size_t popcount(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto v) { return v != 0; }));
}

}  // namespace cogen
