#include "wfelab/macrofield.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wfelab/spectral.hpp"

namespace wfelab {

namespace {

constexpr std::size_t kEdgeBins = 5;
constexpr double kEdgeMassTolerance = 1e-8;
constexpr double kThirdOrderResidualLimit = 1e-3;

void require_interior_support(const RealField& h) {
  const double edge = edge_mass_fraction(h.values, kEdgeBins);
  if (edge > kEdgeMassTolerance) {
    throw TailMassError("Macro-field source has " + std::to_string(edge) + " of its mass within " +
                        std::to_string(kEdgeBins) + " bins of the grid edge");
  }
}

RealField scaled_source(const RealField& h, double beta) {
  std::vector<double> s(h.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = -beta * h.values[i];
  return RealField(h.grid, std::move(s));
}

// Trapezoid integrals of y^power s(y) over [x_0, x_i] (left) or [x_i, x_end] (right).
std::vector<double> cumulative_left(const RealField& s, int power) {
  const std::size_t n = s.size();
  std::vector<double> out(n, 0.0);
  const double dx = s.grid.dx();
  auto term = [&](std::size_t j) { return std::pow(s.grid.x(j), power) * s.values[j]; };
  double prev = term(0);
  for (std::size_t i = 1; i < n; ++i) {
    const double cur = term(i);
    out[i] = out[i - 1] + 0.5 * dx * (prev + cur);
    prev = cur;
  }
  return out;
}

std::vector<double> cumulative_right(const RealField& s, int power) {
  const std::size_t n = s.size();
  std::vector<double> out(n, 0.0);
  const double dx = s.grid.dx();
  auto term = [&](std::size_t j) { return std::pow(s.grid.x(j), power) * s.values[j]; };
  double prev = term(n - 1);
  for (std::size_t i = n - 1; i-- > 0;) {
    const double cur = term(i);
    out[i] = out[i + 1] + 0.5 * dx * (prev + cur);
    prev = cur;
  }
  return out;
}

double inner(const std::vector<double>& a, const std::vector<double>& b, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * dx;
}

}  // namespace

double macro_coupling(const WfeParams& params) { return std::sqrt(0.5 * params.scale()); }

MacroFieldSolution solve_poisson_pair(const RealField& h, const WfeParams& params) {
  require_interior_support(h);
  const double beta = macro_coupling(params);
  RealField s = scaled_source(h, beta);
  const auto l0 = cumulative_left(s, 0);
  const auto l1 = cumulative_left(s, 1);
  const auto r0 = cumulative_right(s, 0);
  const auto r1 = cumulative_right(s, 1);
  std::vector<double> minus(h.size()), plus(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = h.grid.x(i);
    minus[i] = x * l0[i] - l1[i];
    plus[i] = r1[i] - x * r0[i];
  }
  return MacroFieldSolution{RealField(h.grid, std::move(minus)), RealField(h.grid, std::move(plus)), std::move(s),
                            beta};
}

MacroLagrangian lagrangian_value(const RealField& h, const MacroFieldSolution& sol, const WfeParams& params) {
  if (!h.grid.same_lattice(sol.phi_minus.grid)) {
    throw std::invalid_argument("lagrangian_value: density and Macro-fields live on different grids");
  }
  const double beta = macro_coupling(params);
  const double dx = h.grid.dx();
  const std::size_t n = h.size();
  MacroLagrangian out;
  std::vector<double> sum(n);
  for (std::size_t i = 0; i < n; ++i) sum[i] = sol.phi_minus.values[i] + sol.phi_plus.values[i];
  out.interaction = beta * inner(h.values, sum, dx);

  // Three-point second difference; the cumulative trapezoid fields satisfy it
  // exactly, and the outermost points (where s ~ 0) are skipped.
  double grad = 0.0;
  const double inv_dx2 = 1.0 / (dx * dx);
  for (const RealField* f : {&sol.phi_minus, &sol.phi_plus}) {
    const auto& v = f->values;
    for (std::size_t i = 1; i + 1 < n; ++i) grad += v[i] * (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv_dx2;
  }
  out.gradient = 0.5 * grad * dx;
  out.stationary_value = out.interaction + out.gradient;
  out.effective_energy = -2.0 * out.stationary_value;
  return out;
}

MacroLagrangian lagrangian_value(const WaveFunctionFull& psi, const MacroFieldSolution& sol, const WfeParams& params) {
  return lagrangian_value(marginal_com_density(psi), sol, params);
}

MacroLagrangian lagrangian_value(const ProductState& psi, const MacroFieldSolution& sol, const WfeParams& params) {
  return lagrangian_value(marginal_com_density(psi), sol, params);
}

MacroLagrangian lagrangian_value(const ProductSuperposition& psi, const MacroFieldSolution& sol,
                                 const WfeParams& params) {
  return lagrangian_value(marginal_com_density(psi), sol, params);
}

QuadraticKernelFields quadratic_kernel_fields(const RealField& h, const WfeParams& params) {
  require_interior_support(h);
  const double beta = macro_coupling(params);
  const RealField s = scaled_source(h, beta);
  const auto l0 = cumulative_left(s, 0), l1 = cumulative_left(s, 1), l2 = cumulative_left(s, 2);
  const auto r0 = cumulative_right(s, 0), r1 = cumulative_right(s, 1), r2 = cumulative_right(s, 2);
  std::vector<double> left(h.size()), right(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = h.grid.x(i);
    left[i] = x * x * l0[i] - 2.0 * x * l1[i] + l2[i];
    right[i] = r2[i] - 2.0 * x * r1[i] + x * x * r0[i];
  }
  return QuadraticKernelFields{RealField(h.grid, std::move(left)), RealField(h.grid, std::move(right)), beta};
}

double quadratic_kernel_energy(const RealField& h, const WfeParams& params) {
  const auto f = quadratic_kernel_fields(h, params);
  std::vector<double> sum(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) sum[i] = f.left.values[i] + f.right.values[i];
  return -f.beta * inner(h.values, sum, h.grid.dx());
}

RealField solve_third_order(const RealField& h, const WfeParams& params) {
  const auto f = quadratic_kernel_fields(h, params);
  // d^3/dx^3 int_x^inf (y - x)^2 s(y) dy = -2 s(x).
  std::vector<double> phi(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) phi[i] = -0.5 * f.right.values[i];
  RealField out(h.grid, std::move(phi));
  if (params.scale() > 0.0) {
    const RealField s = scaled_source(h, f.beta);
    const double r = interior_residual(out, s, 3);
    if (!(r < kThirdOrderResidualLimit)) {
      throw std::runtime_error("solve_third_order: residual " + std::to_string(r) + " exceeds tolerance");
    }
  }
  return out;
}

double interior_residual(const RealField& field, const RealField& target, int order) {
  const Grid1D bounded(field.grid.size(), field.grid.x_min(), field.grid.dx(), false);
  const auto d = spectral_derivative(field.values, order, bounded);
  const std::size_t margin = order <= 2 ? 3 : 4;
  double num = 0.0, den = 0.0;
  for (std::size_t i = margin; i + margin < field.size(); ++i) {
    const double e = d[i] - target.values[i];
    num += e * e;
    den += target.values[i] * target.values[i];
  }
  if (den == 0.0) return std::sqrt(num);
  return std::sqrt(num / den);
}

bool BoundaryReport::passed(double value_tol, double slope_tol) const {
  return minus_left_value < value_tol && plus_right_value < value_tol && minus_right_slope_error < slope_tol &&
         plus_left_slope_error < slope_tol;
}

BoundaryReport check_boundary_conditions(const MacroFieldSolution& sol) {
  BoundaryReport r;
  const auto& m = sol.phi_minus.values;
  const auto& p = sol.phi_plus.values;
  const std::size_t n = m.size();
  const double dx = sol.phi_minus.grid.dx();
  const double mass = sol.source.integral();
  const double mmax = sol.phi_minus.max_abs();
  const double pmax = sol.phi_plus.max_abs();
  r.minus_left_value = mmax > 0.0 ? std::abs(m.front()) / mmax : 0.0;
  r.plus_right_value = pmax > 0.0 ? std::abs(p.back()) / pmax : 0.0;
  r.minus_right_slope_error = std::abs((m[n - 1] - m[n - 2]) / dx - mass);
  r.plus_left_slope_error = std::abs((p[1] - p[0]) / dx + mass);
  return r;
}

}  // namespace wfelab
