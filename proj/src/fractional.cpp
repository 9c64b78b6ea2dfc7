#include "wfelab/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "wfelab/spectral.hpp"

namespace wfelab {

namespace {

constexpr std::size_t kTailBins = 5;

// Largest |f| within kTailBins of the chosen edge, relative to max |f|.
double edge_level(const std::vector<double>& f, bool left) {
  double peak = 0.0;
  for (double v : f) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  const std::size_t bins = std::min(kTailBins, f.size());
  double edge = 0.0;
  for (std::size_t i = 0; i < bins; ++i) edge = std::max(edge, std::abs(left ? f[i] : f[f.size() - 1 - i]));
  return edge / peak;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Rows far enough from both edges that boundary stencils and the truncated
// tails of fractional outputs do not enter.
std::pair<std::size_t, std::size_t> interior_rows(std::size_t n) {
  const std::size_t margin = std::max<std::size_t>(4, n / 16);
  return {margin, n - margin};
}

std::vector<double> interior(const std::vector<double>& v) {
  const auto [lo, hi] = interior_rows(v.size());
  return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
}

}  // namespace

std::string to_string(FdKind kind) { return kind == FdKind::riemann_liouville ? "riemann_liouville" : "caputo"; }

std::string to_string(FdSide side) { return side == FdSide::left_infinite ? "left_infinite" : "right_infinite"; }

bool FractionalOperator::accepts(const RealField& f) const {
  if (kind == FdKind::caputo) {
    return edge_level(f.values, true) <= kFdTailTolerance && edge_level(f.values, false) <= kFdTailTolerance;
  }
  return edge_level(f.values, side == FdSide::left_infinite) <= kFdTailTolerance;
}

RealField FractionalOperator::apply(const RealField& f) const {
  if (!accepts(f)) {
    throw TailMassError("fractional " + to_string(kind) + " operator: operand does not decay at the integration edge");
  }
  return op.apply(f);
}

Eigen::MatrixXd left_integral_weights(std::size_t n, double dx, double mu) {
  if (mu < 0.0 || mu >= 1.0) throw std::invalid_argument("left_integral_weights: mu must lie in [0, 1)");
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(size, size);
  if (n == 0) return w;
  std::vector<double> p(n + 1);
  for (std::size_t k = 0; k <= n; ++k) p[k] = std::pow(static_cast<double>(k), mu + 1.0);
  const double c = std::pow(dx, mu) / std::tgamma(mu + 2.0);
  w(0, 0) = mu == 0.0 ? 1.0 : 0.0;
  for (std::size_t row = 1; row < n; ++row) {
    const double nn = static_cast<double>(row);
    const auto r = static_cast<Eigen::Index>(row);
    w(r, 0) = c * (p[row - 1] - (nn - mu - 1.0) * std::pow(nn, mu));
    for (std::size_t j = 1; j < row; ++j) {
      const std::size_t k = row - j;
      w(r, static_cast<Eigen::Index>(j)) = c * (p[k + 1] - 2.0 * p[k] + p[k - 1]);
    }
    w(r, r) = c;
  }
  return w;
}

FractionalOperator build_fd(FdKind kind, FdSide side, double order, const Grid1D& grid) {
  if (!(order > 1.0 && order <= 2.0)) {
    throw std::invalid_argument("build_fd: unsupported order " + std::to_string(order) + " (need 1 < order <= 2)");
  }
  if (grid.is_periodic()) throw std::invalid_argument("build_fd: needs a bounded grid");
  const Eigen::MatrixXd w = left_integral_weights(grid.size(), grid.dx(), 2.0 - order);
  Eigen::MatrixXd left;
  if (kind == FdKind::riemann_liouville) {
    left = finite_difference_matrix(grid, 2) * w;
  } else {
    left = w * fourier_derivative_matrix(grid, 2);
  }
  LinearGridOperator op(grid, std::move(left));
  if (side == FdSide::right_infinite) op = op.flipped();
  return FractionalOperator{kind, side, order, std::move(op)};
}

TransposeReport transpose_identity_check(const RealField& f, const RealField& g, double tolerance) {
  TransposeReport r;
  if (!f.grid.same_lattice(g.grid)) throw std::invalid_argument("transpose_identity_check: grid mismatch");
  const auto rl = build_fd(FdKind::riemann_liouville, FdSide::left_infinite, 1.5, f.grid);
  const auto cr = build_fd(FdKind::caputo, FdSide::right_infinite, 1.5, f.grid);
  if (!rl.accepts(f) || !cr.accepts(g) || !cr.accepts(f) || !rl.accepts(g)) {
    r.skipped = true;
    r.warning = "operand tail reaches the grid edge; transpose check skipped";
    return r;
  }
  const double dx = f.grid.dx();
  const auto df = rl.op.apply(std::span<const double>(f.values));
  const auto dg = cr.op.apply(std::span<const double>(g.values));
  r.lhs = dot(df, g.values) * dx;
  r.rhs = dot(f.values, dg) * dx;
  r.scale = l2(df) * l2(g.values) * dx;
  r.relative_difference = r.scale > 0.0 ? std::abs(r.lhs - r.rhs) / r.scale : std::abs(r.lhs - r.rhs);
  r.passed = r.relative_difference < tolerance;
  return r;
}

double relative_residual(const std::vector<double>& a_phi, const std::vector<double>& target) {
  std::vector<double> diff(a_phi.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a_phi[i] - target[i];
  const double den = l2(target);
  return den > 0.0 ? l2(diff) / den : l2(diff);
}

std::vector<double> third_derivative(const RealField& phi) {
  return spectral_derivative(phi.values, 3, phi.grid.as_periodic());
}

CompositionReport composition_refutation(const FractionalOperator& omega, const std::vector<RealField>& test_set,
                                         double threshold) {
  CompositionReport r;
  r.candidate = to_string(omega.kind) + "/" + to_string(omega.side);
  r.threshold = threshold;
  const LinearGridOperator square = omega.op.transpose().compose(omega.op);
  for (const auto& phi : test_set) {
    const auto lhs = square.apply(std::span<const double>(phi.values));
    r.residuals.push_back(relative_residual(interior(lhs), interior(third_derivative(phi))));
  }
  r.min_residual = r.residuals.empty() ? 0.0 : *std::min_element(r.residuals.begin(), r.residuals.end());
  r.passed = !r.residuals.empty() && r.min_residual > threshold;
  return r;
}

double self_composition_residual(const FractionalOperator& omega, const RealField& phi) {
  const auto once = omega.op.apply(std::span<const double>(phi.values));
  const auto twice = omega.op.apply(std::span<const double>(once));
  return relative_residual(interior(twice), interior(third_derivative(phi)));
}

std::vector<RealField> standard_test_set(const Grid1D& grid) {
  std::vector<double> gauss(grid.size()), dgauss(grid.size()), sech(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    gauss[i] = std::exp(-0.5 * x * x);
    dgauss[i] = -x * gauss[i];
    sech[i] = 1.0 / std::cosh(x);
  }
  return {RealField(grid, std::move(gauss)), RealField(grid, std::move(dgauss)), RealField(grid, std::move(sech))};
}

AntisymmetryReport antisymmetry_witness(const RealField& phi, double relative_tolerance) {
  AntisymmetryReport r;
  const auto d3 = third_derivative(phi);
  const double dx = phi.grid.dx();
  r.value = dot(phi.values, d3) * dx;
  r.scale = l2(phi.values) * l2(d3) * dx;
  r.passed = std::abs(r.value) <= relative_tolerance * r.scale;
  return r;
}

std::pair<std::vector<double>, std::vector<double>> moment_matched_pair(const Grid1D& grid, double spread,
                                                                        double width) {
  if (!(spread > 0.0) || !(width > 0.0)) throw std::invalid_argument("moment_matched_pair: degenerate mixture");
  const std::size_t n = grid.size();
  const double dx = grid.dx();
  const double norm = 1.0 / std::sqrt(2.0 * M_PI);
  std::vector<double> f1(n);
  for (std::size_t i = 0; i < n; ++i) f1[i] = norm * std::exp(-0.5 * grid.x(i) * grid.x(i));

  const double centers[3] = {-spread, 0.0, spread};
  std::vector<std::vector<double>> comp(3, std::vector<double>(n));
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d m = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.x(i);
    for (int k = 0; k < 3; ++k) m(k) += std::pow(x, k) * f1[i] * dx;
    for (int c = 0; c < 3; ++c) {
      const double z = (x - centers[c]) / width;
      comp[c][i] = norm / width * std::exp(-0.5 * z * z);
      for (int k = 0; k < 3; ++k) a(k, c) += std::pow(x, k) * comp[c][i] * dx;
    }
  }
  Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
  if (!lu.isInvertible()) throw std::invalid_argument("moment_matched_pair: singular moment system");
  const Eigen::Vector3d w = lu.solve(m);
  if ((w.array() < 0.0).any()) throw std::invalid_argument("moment_matched_pair: mixture weight is negative");
  std::vector<double> f2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) f2[i] += w(c) * comp[c][i];
  }
  return {std::move(f1), std::move(f2)};
}

MomentCollapseReport moment_collapse_witness(const LinearGridOperator& op, double output_tolerance,
                                             double density_threshold) {
  auto [f1, f2] = moment_matched_pair(op.grid());
  return moment_collapse_witness(op, f1, f2, output_tolerance, density_threshold);
}

MomentCollapseReport moment_collapse_witness(const LinearGridOperator& op, const std::vector<double>& f1,
                                             const std::vector<double>& f2, double output_tolerance,
                                             double density_threshold) {
  const Grid1D& grid = op.grid();
  const std::size_t n = grid.size();
  if (f1.size() != n || f2.size() != n) throw std::invalid_argument("moment_collapse_witness: size mismatch");
  const auto sz = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd k(sz, sz);
  for (Eigen::Index i = 0; i < sz; ++i) {
    for (Eigen::Index j = 0; j < sz; ++j) {
      const double d = grid.x(static_cast<std::size_t>(i)) - grid.x(static_cast<std::size_t>(j));
      k(i, j) = d * d;
    }
  }
  const Eigen::MatrixXd g = op.matrix() * k;
  const double dx = grid.dx();
  const Eigen::Map<const Eigen::VectorXd> v1(f1.data(), sz), v2(f2.data(), sz);
  const Eigen::VectorXd o1 = g * v1 * dx;
  const Eigen::VectorXd o2 = g * v2 * dx;
  const Eigen::VectorXd bound = g.cwiseAbs() * (v1.cwiseAbs() + v2.cwiseAbs()) * dx;

  MomentCollapseReport r;
  r.f1 = f1;
  r.f2 = f2;
  r.output1.assign(o1.data(), o1.data() + n);
  r.output2.assign(o2.data(), o2.data() + n);
  const double scale = bound.maxCoeff();
  const double diff = (o1 - o2).cwiseAbs().maxCoeff();
  r.output_difference = scale > 0.0 ? diff / scale : diff;
  r.density_sup_difference = (v1 - v2).cwiseAbs().maxCoeff();
  r.output_tolerance = output_tolerance;
  r.density_threshold = density_threshold;
  r.passed = r.output_difference < output_tolerance && r.density_sup_difference > density_threshold;
  return r;
}

LinearGridOperator antisymmetric_third_difference(const Grid1D& grid) {
  static constexpr double kStencil[] = {-1.0, 2.0, 0.0, -2.0, 1.0};
  const double dx = grid.dx();
  return LinearGridOperator::from_stencil(grid, kStencil, 0.5 / (dx * dx * dx));
}

LinearGridOperator second_difference(const Grid1D& grid) {
  static constexpr double kStencil[] = {1.0, -2.0, 1.0};
  const double dx = grid.dx();
  return LinearGridOperator::from_stencil(grid, kStencil, 1.0 / (dx * dx));
}

DropoutReport euler_lagrange_dropout_check(const Grid1D& grid, unsigned seed) {
  DropoutReport r;
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double dx = grid.dx();
  r.inverse_dx2 = 1.0 / (dx * dx);

  auto interior_max = [&](const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd s = m + m.transpose();
    double out = 0.0;
    for (Eigen::Index i = 2; i + 2 < n; ++i) out = std::max(out, s.row(i).cwiseAbs().maxCoeff());
    return out;
  };
  const Eigen::MatrixXd m3 = antisymmetric_third_difference(grid).matrix();
  const Eigen::MatrixXd m2 = second_difference(grid).matrix();
  r.third_order_gradient_max = interior_max(m3);
  r.second_order_gradient_max = interior_max(m2);

  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd phi(n), v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    phi(i) = normal(rng);
    v(i) = normal(rng);
  }
  const double eps = 1e-3;
  auto q = [&](const Eigen::VectorXd& x) { return x.dot(m2 * x); };
  const double fd = (q(phi + eps * v) - q(phi - eps * v)) / (2.0 * eps);
  const double exact = v.dot((m2 + m2.transpose()) * phi);
  r.directional_error = std::abs(fd - exact) / std::max(std::abs(exact), 1e-300);

  r.passed = r.third_order_gradient_max == 0.0 && r.second_order_gradient_max > r.inverse_dx2 &&
             r.directional_error < 1e-8;
  return r;
}

}  // namespace wfelab
