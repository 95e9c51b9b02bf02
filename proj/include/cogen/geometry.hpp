#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace cogen {

/// Points are always stored with three components; planar scenes keep z = 0.
using Point = Eigen::Vector3d;
using CellIndex = std::uint32_t;
using Mask = std::vector<std::uint8_t>;

/// Uniform axis-aligned lattice of d-cells with edge length `spacing`.
///
/// Cells are enumerated x-fastest: index = x + nx * (y + ny * z). Unused
/// trailing axes of a planar grid have extent 1.
class Grid {
 public:
  Grid() = default;

  int dimension() const { return dimension_; }
  const Point& origin() const { return origin_; }
  double spacing() const { return spacing_; }
  const std::array<int, 3>& dims() const { return dims_; }
  std::size_t size() const { return size_; }

  /// Measure of a single cell, spacing^d.
  double cell_measure() const;
  /// Measure of the whole domain.
  double domain_measure() const { return cell_measure() * static_cast<double>(size_); }

  std::array<int, 3> multi_index(CellIndex i) const;
  CellIndex linear_index(int x, int y, int z = 0) const;
  Point center(CellIndex i) const;

  /// Upper corner of the domain along each active axis.
  Point upper() const;

  bool operator==(const Grid& other) const = default;

 private:
  friend Grid build_grid(std::span<const double>, double, std::span<const int>);

  int dimension_ = 0;
  Point origin_ = Point::Zero();
  double spacing_ = 0.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::size_t size_ = 0;
};

/// Throws ConfigError for non-positive spacing, empty axes, a dimension other
/// than 2 or 3, or mismatched origin/dims lengths.
Grid build_grid(std::span<const double> origin, double spacing, std::span<const int> dims);

/// Cell whose half-open box [c - eps/2, c + eps/2) contains p on every active
/// axis, or nullopt outside the grid.
std::optional<CellIndex> locate_cell(const Grid& grid, const Point& p);

/// Per-cell material fractions over a grid. Values are clamped to [0, 1].
class DensityField {
 public:
  DensityField() = default;
  explicit DensityField(Grid grid, double fill = 0.0);
  DensityField(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  void set(std::size_t i, double v);
  /// Replaces all values, clamping each into [0, 1].
  void assign(std::vector<double> values);

 private:
  Grid grid_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Analytic shapes

/// Constructive solid built from closed primitives. Membership uses
/// closed-set semantics: boundary points are inside.
class ShapeSpec {
 public:
  enum class Kind { Box, Ball, Cylinder, Union, Intersection, Difference };

  static ShapeSpec box(const Point& lo, const Point& hi);
  static ShapeSpec ball(const Point& center, double radius);
  static ShapeSpec cylinder(const Point& axis_point, const Point& axis_direction, double radius,
                            double half_length);
  static ShapeSpec unite(std::vector<ShapeSpec> children);
  static ShapeSpec intersect(std::vector<ShapeSpec> children);
  /// a minus b.
  static ShapeSpec subtract(ShapeSpec a, ShapeSpec b);

  bool contains(const Point& p) const;
  /// Conservative axis-aligned bounds; false when the shape is provably empty.
  bool bounds(Point& lo, Point& hi) const;

  Kind kind() const;
  // Primitive parameters, meaningful for the matching kind only.
  const Point& point_a() const;
  const Point& point_b() const;
  double radius() const;
  double half_length() const;
  const std::vector<ShapeSpec>& children() const;

 private:
  struct Node;
  explicit ShapeSpec(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/// Stratified supersampling with `supersample` points per axis per cell.
DensityField rasterize(const ShapeSpec& shape, const Grid& grid, int supersample = 8);

/// spacing^d * sum of densities, optionally restricted to mask cells.
double measure(const DensityField& field);
double measure(const DensityField& field, const Mask& mask);

/// mask_i = 1 iff rho_i > theta (strict).
Mask threshold(const DensityField& field, double theta = 0.5);

/// Binary field from a mask.
DensityField field_from_mask(const Grid& grid, const Mask& mask);

std::size_t popcount(const Mask& mask);

}  // namespace cogen
