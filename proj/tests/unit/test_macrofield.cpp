#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "wfelab/macrofield.hpp"

using namespace wfelab;

namespace {

// Discretely normalized mixture of Gaussians on a bounded grid.
RealField mixture(const Grid1D& g, const std::vector<double>& centers, const std::vector<double>& widths,
                  const std::vector<double>& weights) {
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t k = 0; k < centers.size(); ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z = (g.x(i) - centers[k]) / widths[k];
      v[i] += weights[k] * std::exp(-0.5 * z * z) / widths[k];
    }
  }
  double mass = 0.0;
  for (double x : v) mass += x;
  for (double& x : v) x /= mass * g.dx();
  return RealField(g, std::move(v));
}

double moment(const RealField& h, int k, double about = 0.0) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += std::pow(h.grid.x(i) - about, k) * h.values[i];
  return s * h.grid.dx();
}

RealField random_density(const Grid1D& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(-3.0, 3.0), w(0.4, 1.2), a(0.2, 1.0);
  std::uniform_int_distribution<int> k(1, 4);
  std::vector<double> cs, ws, as;
  for (int j = k(rng); j > 0; --j) {
    cs.push_back(c(rng));
    ws.push_back(w(rng));
    as.push_back(a(rng));
  }
  return mixture(g, cs, ws, as);
}

}  // namespace

TEST_CASE("coupling") {
  CHECK(macro_coupling(WfeParams(2.0, 3)) == doctest::Approx(3.0));
  CHECK(macro_coupling(WfeParams(0.0, 3)) == 0.0);
}

TEST_CASE("fields outside the support of a localized bump") {
  const auto g = Grid1D::bounded(-12.0, 12.0, 961);
  const auto h = mixture(g, {1.0}, {0.5}, {1.0});
  const WfeParams p(0.7, 2);
  const double beta = macro_coupling(p);
  const double mean = moment(h, 1), var = moment(h, 2, mean);
  const auto sol = solve_poisson_pair(h, p);
  const auto phi3 = solve_third_order(h, p);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.x(i);
    if (x < -4.0) {
      CHECK(sol.phi_plus.values[i] == doctest::Approx(beta * (x - mean)).epsilon(1e-10));
      CHECK(std::abs(sol.phi_minus.values[i]) < 1e-12);
      CHECK(phi3.values[i] == doctest::Approx(0.5 * beta * (var + (x - mean) * (x - mean))).epsilon(1e-10));
    }
    if (x > 6.0) {
      CHECK(sol.phi_minus.values[i] == doctest::Approx(-beta * (x - mean)).epsilon(1e-10));
      CHECK(std::abs(sol.phi_plus.values[i]) < 1e-12);
    }
  }
}

TEST_CASE("cumulative fields match the direct double sum") {
  const auto g = Grid1D::bounded(-10.0, 10.0, 201);
  std::mt19937_64 rng(5);
  const auto h = random_density(g, rng);
  const WfeParams p(1.3, 2);
  const auto sol = solve_poisson_pair(h, p);
  const auto q = quadratic_kernel_fields(h, p);
  const double beta = macro_coupling(p), dx = g.dx();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double m = 0.0, pl = 0.0, l2 = 0.0, r2 = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double d = g.x(i) - g.x(j);
      // Trapezoid end weights only touch terms that vanish or are ~1e-20.
      const double s = -beta * h.values[j] * dx;
      if (j < i) {
        m += d * s;
        l2 += d * d * s;
      } else if (j > i) {
        pl += -d * s;
        r2 += d * d * s;
      }
    }
    const double scale = 1.0 + std::abs(g.x(i));
    CHECK(std::abs(sol.phi_minus.values[i] - m) < 1e-12 * scale * scale);
    CHECK(std::abs(sol.phi_plus.values[i] - pl) < 1e-12 * scale * scale);
    CHECK(std::abs(q.left.values[i] - l2) < 1e-12 * scale * scale * scale);
    CHECK(std::abs(q.right.values[i] - r2) < 1e-12 * scale * scale * scale);
  }
}

TEST_CASE("fields solve the Poisson equation and meet the boundary conditions") {
  const auto g = Grid1D::bounded(-12.0, 12.0, 1024);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto h = random_density(g, rng);
    const auto sol = solve_poisson_pair(h, WfeParams(1.0, 2));
    // Widths down to 0.4 leave (dx/width)^4 truncation of a few 1e-4.
    CHECK(interior_residual(sol.phi_minus, sol.source, 2) < 1e-3);
    CHECK(interior_residual(sol.phi_plus, sol.source, 2) < 1e-3);
    const auto b = check_boundary_conditions(sol);
    CHECK(b.passed());
    CHECK(b.minus_left_value < 1e-12);
    CHECK(b.plus_right_value < 1e-12);
  }
}

TEST_CASE("zero source gives zero fields") {
  const auto g = Grid1D::bounded(-5.0, 5.0, 64);
  const RealField zero(g);
  const auto sol = solve_poisson_pair(zero, WfeParams(1.0, 2));
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(sol.phi_minus.values[i] == 0.0);
    CHECK(sol.phi_plus.values[i] == 0.0);
  }
  CHECK(quadratic_kernel_energy(zero, WfeParams(1.0, 2)) == 0.0);
}

TEST_CASE("fields are linear in the source") {
  const auto g = Grid1D::bounded(-10.0, 10.0, 256);
  std::mt19937_64 rng(17);
  const auto h1 = random_density(g, rng), h2 = random_density(g, rng);
  const double a = 0.3, b = -1.7;
  std::vector<double> mix(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) mix[i] = a * h1.values[i] + b * h2.values[i];
  const WfeParams p(0.9, 3);
  const auto s1 = solve_poisson_pair(h1, p), s2 = solve_poisson_pair(h2, p);
  const auto s = solve_poisson_pair(RealField(g, mix), p);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double scale = 1.0 + std::abs(s1.phi_minus.values[i]) + std::abs(s2.phi_minus.values[i]) +
                         std::abs(s1.phi_plus.values[i]) + std::abs(s2.phi_plus.values[i]);
    CHECK(std::abs(s.phi_minus.values[i] - (a * s1.phi_minus.values[i] + b * s2.phi_minus.values[i])) <
          1e-10 * scale);
    CHECK(std::abs(s.phi_plus.values[i] - (a * s1.phi_plus.values[i] + b * s2.phi_plus.values[i])) < 1e-10 * scale);
  }
}

TEST_CASE("stationary Lagrangian reproduces the absolute-kernel energy") {
  const auto g = Grid1D::bounded(-12.0, 12.0, 768);
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = random_density(g, rng);
    const WfeParams p(0.5 + trial * 0.1, 1 + trial % 3);
    const auto sol = solve_poisson_pair(h, p);
    const auto lag = lagrangian_value(h, sol, p);
    const double oracle = wfe_kernel(h, Kernel::absolute(), p);
    CHECK(lag.effective_energy == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(lag.stationary_value == doctest::Approx(-0.5 * lag.effective_energy));
    CHECK(lag.interaction == doctest::Approx(-lag.effective_energy).epsilon(1e-8));
    CHECK(lag.gradient == doctest::Approx(0.5 * lag.effective_energy).epsilon(1e-8));
  }
}

TEST_CASE("absolute-kernel energy of a Gaussian") {
  const auto g = Grid1D::bounded(-15.0, 15.0, 1500);
  const double sigma = 1.2;
  const auto h = mixture(g, {0.4}, {sigma}, {1.0});
  const WfeParams p(1.0, 2);
  const auto lag = lagrangian_value(h, solve_poisson_pair(h, p), p);
  // E|x - y| = 2 sigma / sqrt(pi) for independent draws.
  CHECK(lag.effective_energy == doctest::Approx(0.5 * p.scale() * 2.0 * sigma / std::sqrt(std::numbers::pi))
                                    .epsilon(1e-4));
  SUBCASE("two separated narrow peaks") {
    const double L = 6.0;
    const auto h2 = mixture(g, {-L / 2, L / 2}, {0.3, 0.3}, {1.0, 1.0});
    const auto l2 = lagrangian_value(h2, solve_poisson_pair(h2, p), p);
    // Cross terms dominate: 1/2 w N^2 * 2 * (1/4) * L, plus same-peak terms.
    const double same = 2.0 * 0.25 * 2.0 * 0.3 / std::sqrt(std::numbers::pi);
    CHECK(l2.effective_energy == doctest::Approx(0.5 * p.scale() * (0.5 * L + same)).epsilon(1e-4));
  }
}

TEST_CASE("zero coupling") {
  const auto g = Grid1D::bounded(-10.0, 10.0, 200);
  const auto h = mixture(g, {0.0}, {1.0}, {1.0});
  const WfeParams p(0.0, 2);
  const auto sol = solve_poisson_pair(h, p);
  const auto lag = lagrangian_value(h, sol, p);
  CHECK(lag.effective_energy == 0.0);
  CHECK(quadratic_kernel_energy(h, p) == 0.0);
  for (double v : solve_third_order(h, p).values) CHECK(v == 0.0);
}

TEST_CASE("effective energy departs from the quadratic WFE on a cat state") {
  const auto axis = Grid1D::bounded(-12.0, 12.0, 256);
  const auto cat = make_cat_superposition(axis, 2, 10.0, 1.0);
  const WfeParams p(1.0, 2);
  const RealField h = marginal_com_density(cat);
  const auto sol = solve_poisson_pair(h, p);
  const auto lag = lagrangian_value(cat, sol, p);
  const double wfe = wfe_direct(cat, p);
  CHECK(lag.effective_energy == doctest::Approx(wfe_kernel(h, Kernel::absolute(), p)).epsilon(1e-8));
  CHECK(std::abs(lag.effective_energy - wfe) / wfe > 0.1);
  CHECK(quadratic_kernel_energy(h, p) == doctest::Approx(wfe).epsilon(1e-6));
}

TEST_CASE("quadratic kernel energy equals WFE") {
  const auto g = Grid1D::bounded(-12.0, 12.0, 600);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = random_density(g, rng);
    const WfeParams p(1.1, 2);
    const double mean = moment(h, 1);
    CHECK(quadratic_kernel_energy(h, p) == doctest::Approx(p.scale() * moment(h, 2, mean)).epsilon(1e-10));
    CHECK(quadratic_kernel_energy(h, p) == doctest::Approx(wfe_kernel(h, Kernel::quadratic(), p)).epsilon(1e-10));
  }
}

TEST_CASE("third-order field") {
  const auto g = Grid1D::bounded(-12.0, 12.0, 1024);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const auto h = random_density(g, rng);
    const WfeParams p(1.0, 2);
    const auto phi = solve_third_order(h, p);
    const auto sol = solve_poisson_pair(h, p);
    CHECK(interior_residual(phi, sol.source, 3) < 1e-3);
    // Vanishes with its first two derivatives at the right edge.
    CHECK(std::abs(phi.values.back()) < 1e-12 * phi.max_abs());
  }
}

TEST_CASE("tail mass and grid checks") {
  const auto g = Grid1D::bounded(-5.0, 5.0, 100);
  const auto edge = mixture(g, {-4.9}, {0.3}, {1.0});
  CHECK_THROWS_AS(solve_poisson_pair(edge, WfeParams(1.0, 1)), TailMassError);
  CHECK_THROWS_AS(quadratic_kernel_energy(edge, WfeParams(1.0, 1)), TailMassError);
  const auto h = mixture(g, {0.0}, {0.5}, {1.0});
  const auto other = mixture(Grid1D::bounded(-5.0, 5.0, 101), {0.0}, {0.5}, {1.0});
  const auto sol = solve_poisson_pair(h, WfeParams(1.0, 1));
  CHECK_THROWS_AS(lagrangian_value(other, sol, WfeParams(1.0, 1)), std::invalid_argument);
}
