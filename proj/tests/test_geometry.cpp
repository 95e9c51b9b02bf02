#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "cogen/errors.hpp"
#include "cogen/geometry.hpp"

using namespace cogen;

namespace {

Grid grid2(double ox, double oy, double eps, int nx, int ny) {
  const std::vector<double> o{ox, oy};
  const std::vector<int> d{nx, ny};
  return build_grid(o, eps, d);
}

Grid grid3(double eps, int nx, int ny, int nz) {
  const std::vector<double> o{0.0, 0.0, 0.0};
  const std::vector<int> d{nx, ny, nz};
  return build_grid(o, eps, d);
}

}  // namespace

TEST_CASE("grid indexing is x-fastest and round-trips") {
  const auto g = grid3(0.5, 3, 4, 5);
  CHECK(g.size() == 60);
  CHECK(g.linear_index(1, 2, 3) == 1 + 3 * (2 + 4 * 3));
  for (CellIndex i = 0; i < g.size(); ++i) {
    const auto m = g.multi_index(i);
    CHECK(g.linear_index(m[0], m[1], m[2]) == i);
    const auto back = locate_cell(g, g.center(i));
    REQUIRE(back.has_value());
    CHECK(*back == i);
  }
  CHECK(g.cell_measure() == doctest::Approx(0.125));
  CHECK(g.domain_measure() == doctest::Approx(7.5));
}

TEST_CASE("locate_cell uses half-open cells") {
  const auto g = grid2(0, 0, 1, 2, 2);
  CHECK(locate_cell(g, Point(0.5, 0.5, 0)) == g.linear_index(0, 0));
  CHECK(locate_cell(g, Point(1.0, 0.5, 0)) == g.linear_index(1, 0));
  CHECK_FALSE(locate_cell(g, Point(2.5, 0.5, 0)).has_value());
  CHECK_FALSE(locate_cell(g, Point(2.0, 0.5, 0)).has_value());
  CHECK_FALSE(locate_cell(g, Point(-1e-12, 0.5, 0)).has_value());
}

TEST_CASE("build_grid rejects bad input") {
  const std::vector<double> o2{0, 0};
  const std::vector<int> d2{2, 2};
  CHECK_THROWS_AS(build_grid(o2, 0.0, d2), ConfigError);
  CHECK_THROWS_AS(build_grid(o2, -1.0, d2), ConfigError);
  const std::vector<int> bad{2, 0};
  CHECK_THROWS_AS(build_grid(o2, 1.0, bad), ConfigError);
  const std::vector<int> d4{1, 1, 1, 1};
  const std::vector<double> o4{0, 0, 0, 0};
  CHECK_THROWS_AS(build_grid(o4, 1.0, d4), ConfigError);
  const std::vector<double> o3{0, 0, 0};
  CHECK_THROWS_AS(build_grid(o3, 1.0, d2), ConfigError);
}

TEST_CASE("rasterize inscribed disk") {
  const auto g = grid2(0, 0, 1, 3, 3);
  const auto disk = ShapeSpec::ball(Point(1.5, 1.5, 0), 0.5);
  const auto rho = rasterize(disk, g, 32);
  const double center = rho[g.linear_index(1, 1)];
  CHECK(std::abs(center - std::numbers::pi / 4) <= 0.01);
  for (CellIndex i = 0; i < g.size(); ++i) {
    if (i != g.linear_index(1, 1)) CHECK(rho[i] == 0.0);
  }
  CHECK(std::abs(measure(rho) - std::numbers::pi / 4) / (std::numbers::pi / 4) < 0.01);
}

TEST_CASE("rasterize axis-aligned boxes exactly") {
  const auto g = grid2(0, 0, 1, 2, 2);
  const auto rho = rasterize(ShapeSpec::box(Point(0, 0, 0), Point(2, 1, 0)), g, 8);
  const std::vector<double> expect{1, 1, 0, 0};
  for (std::size_t i = 0; i < 4; ++i) CHECK(rho[i] == expect[i]);

  const auto half = grid2(0, 0, 1, 1, 1);
  for (int s : {2, 4, 7, 8}) {
    const auto r = rasterize(ShapeSpec::box(Point(0, 0, 0), Point(0.5, 1, 0)), half, s);
    if (s % 2 == 0) CHECK(r[0] == 0.5);
  }
  CHECK_THROWS_AS(rasterize(ShapeSpec::box(Point(0, 0, 0), Point(1, 1, 0)), half, 0), ConfigError);
}

TEST_CASE("rasterize is monotone under box inclusion") {
  const auto g = grid2(-1, -1, 0.1, 20, 20);
  const auto a = rasterize(ShapeSpec::box(Point(-0.33, -0.21, 0), Point(0.27, 0.41, 0)), g, 8);
  const auto b = rasterize(ShapeSpec::box(Point(-0.52, -0.3, 0), Point(0.61, 0.44, 0)), g, 8);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(a[i] <= b[i]);
}

TEST_CASE("boolean shapes") {
  const auto g = grid2(-1, -1, 0.05, 40, 40);
  const auto outer = ShapeSpec::ball(Point(0, 0, 0), 0.8);
  const auto inner = ShapeSpec::ball(Point(0, 0, 0), 0.4);
  const auto ring = ShapeSpec::subtract(outer, inner);
  const double ring_area = std::numbers::pi * (0.64 - 0.16);
  CHECK(measure(rasterize(ring, g, 8)) == doctest::Approx(ring_area).epsilon(0.01));

  const auto half = ShapeSpec::intersect({ring, ShapeSpec::box(Point(-1, 0, 0), Point(1, 1, 0))});
  CHECK(measure(rasterize(half, g, 8)) == doctest::Approx(ring_area / 2).epsilon(0.01));

  const auto both = ShapeSpec::unite({ShapeSpec::box(Point(-1, -1, 0), Point(0, 0, 0)),
                                      ShapeSpec::box(Point(-0.5, -0.5, 0), Point(0.5, 0.5, 0))});
  CHECK(measure(rasterize(both, g, 8)) == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(both.contains(Point(0.5, 0.5, 0)));  // closed set
}

TEST_CASE("cylinder volume in 3D") {
  const auto g = grid3(0.05, 40, 40, 40);
  const auto cyl = ShapeSpec::cylinder(Point(1, 1, 1), Point(0, 0, 2), 0.5, 0.6);
  CHECK(measure(rasterize(cyl, g, 4)) == doctest::Approx(std::numbers::pi * 0.25 * 1.2).epsilon(0.01));
}

TEST_CASE("measure examples") {
  const auto g = grid2(0, 0, 0.1, 10, 10);
  CHECK(measure(DensityField(g, 1.0)) == doctest::Approx(1.0));
  CHECK(measure(DensityField(g, 0.0)) == 0.0);
  const auto u = grid2(0, 0, 1, 2, 2);
  const DensityField f(u, std::vector<double>{1, 1, 0, 0});
  CHECK(measure(f) == 2.0);
  CHECK(measure(f, Mask{1, 0, 1, 0}) == 1.0);
}

TEST_CASE("threshold is strict") {
  const auto g = grid2(0, 0, 1, 3, 1);
  const DensityField f(g, std::vector<double>{0.2, 0.5, 0.7});
  CHECK(threshold(f, 0.5) == Mask{0, 0, 1});
  const auto g2 = grid2(0, 0, 1, 2, 1);
  CHECK(threshold(DensityField(g2, std::vector<double>{0.49, 0.51})) == Mask{0, 1});
  CHECK(threshold(DensityField(g2, 1.0)) == Mask{1, 1});
  const auto m = threshold(f);
  CHECK(measure(field_from_mask(g, m)) == g.cell_measure() * static_cast<double>(popcount(m)));
}

TEST_CASE("density values are clamped") {
  const auto g = grid2(0, 0, 1, 2, 1);
  DensityField f(g, std::vector<double>{-0.5, 1.5});
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 1.0);
  f.set(0, 0.25);
  CHECK(f[0] == 0.25);
}
