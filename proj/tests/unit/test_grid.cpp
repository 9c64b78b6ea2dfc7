#include <cmath>
#include <numbers>

#include <doctest.h>

#include "wfelab/grid.hpp"

using namespace wfelab;

TEST_CASE("grid rejects too few points and bad spacing") {
  CHECK_THROWS_AS(Grid1D(7, 0.0, 0.1, false), std::invalid_argument);
  CHECK_THROWS_AS(Grid1D(16, 0.0, 0.0, false), std::invalid_argument);
  CHECK_THROWS_AS(Grid1D(16, 0.0, -1.0, true), std::invalid_argument);
  CHECK_NOTHROW(Grid1D(8, 0.0, 0.1, false));
}

TEST_CASE("lattice coordinates") {
  const Grid1D g(10, -1.5, 0.25, false);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.x(i) == -1.5 + 0.25 * static_cast<double>(i));
  CHECK(g.x_last() == doctest::Approx(0.75));
  CHECK(g.coordinates().size() == 10);
}

TEST_CASE("periodic and bounded factories") {
  const auto p = Grid1D::periodic(-4.0, 4.0, 16);
  CHECK(p.is_periodic());
  CHECK(p.dx() == 0.5);
  CHECK(p.length() == 8.0);
  const auto b = Grid1D::bounded(-4.0, 4.0, 17);
  CHECK_FALSE(b.is_periodic());
  CHECK(b.dx() == 0.5);
  CHECK(b.x_last() == 4.0);
}

TEST_CASE("wavenumbers follow FFT ordering") {
  const auto g = Grid1D::periodic(0.0, 2.0 * std::numbers::pi, 8);
  const auto k = g.wavenumbers();
  const double expected[] = {0, 1, 2, 3, -4, -3, -2, -1};
  for (std::size_t i = 0; i < 8; ++i) CHECK(k[i] == doctest::Approx(expected[i]));
}

TEST_CASE("same_lattice compares geometry") {
  const Grid1D a(32, -1.0, 0.1, false);
  CHECK(a.same_lattice(Grid1D(32, -1.0, 0.1, true)));
  CHECK_FALSE(a.same_lattice(Grid1D(33, -1.0, 0.1, false)));
  CHECK_FALSE(a.same_lattice(Grid1D(32, -1.0, 0.11, false)));
}

TEST_CASE("real field basics") {
  const Grid1D g(10, 0.0, 0.5, false);
  CHECK_THROWS_AS(RealField(g, std::vector<double>(9, 1.0)), std::invalid_argument);
  RealField f(g, std::vector<double>(10, 0.2));
  CHECK(f.integral() == doctest::Approx(1.0));
  f.values[3] = -0.7;
  CHECK(f.max_abs() == 0.7);
  CHECK(RealField(g).integral() == 0.0);
}

TEST_CASE("density precondition") {
  const Grid1D g(10, 0.0, 0.5, false);
  CHECK_NOTHROW(require_density(RealField(g, std::vector<double>(10, 0.2))));
  CHECK_THROWS_AS(require_density(RealField(g, std::vector<double>(10, 0.3))), std::invalid_argument);
  std::vector<double> v(10, 0.2);
  v[0] = -0.1;
  v[1] = 0.5;
  CHECK_THROWS_AS(require_density(RealField(g, v)), std::invalid_argument);
}

TEST_CASE("edge mass fraction") {
  std::vector<double> v(20, 0.0);
  CHECK(edge_mass_fraction(v, 5) == 0.0);
  v[10] = 1.0;
  CHECK(edge_mass_fraction(v, 5) == 0.0);
  v[0] = 1.0;
  CHECK(edge_mass_fraction(v, 5) == doctest::Approx(0.5));
  v[19] = 2.0;
  CHECK(edge_mass_fraction(v, 1) == doctest::Approx(0.75));
}
