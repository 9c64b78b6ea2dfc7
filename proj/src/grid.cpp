#include "wfelab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wfelab {

Grid1D::Grid1D(std::size_t n_points, double x_min, double dx, bool periodic)
    : n_points_(n_points), x_min_(x_min), dx_(dx), periodic_(periodic) {
  if (n_points_ < kMinPoints) {
    throw std::invalid_argument("Grid1D: need at least 8 points, got " + std::to_string(n_points_));
  }
  if (!(dx_ > 0.0) || !std::isfinite(dx_) || !std::isfinite(x_min_)) {
    throw std::invalid_argument("Grid1D: spacing must be positive and finite");
  }
}

Grid1D Grid1D::periodic(double x_min, double x_max, std::size_t n_points) {
  if (n_points == 0) throw std::invalid_argument("Grid1D: zero points");
  return Grid1D(n_points, x_min, (x_max - x_min) / static_cast<double>(n_points), true);
}

Grid1D Grid1D::bounded(double x_min, double x_max, std::size_t n_points) {
  if (n_points < 2) throw std::invalid_argument("Grid1D: need at least 2 points");
  return Grid1D(n_points, x_min, (x_max - x_min) / static_cast<double>(n_points - 1), false);
}

std::vector<double> Grid1D::coordinates() const {
  std::vector<double> xs(n_points_);
  for (std::size_t i = 0; i < n_points_; ++i) xs[i] = x(i);
  return xs;
}

std::vector<double> Grid1D::wavenumbers() const {
  std::vector<double> k(n_points_);
  const double dk = 2.0 * std::numbers::pi / length();
  const auto n = static_cast<long>(n_points_);
  for (long i = 0; i < n; ++i) {
    const long m = (i < (n + 1) / 2) ? i : i - n;
    k[static_cast<std::size_t>(i)] = dk * static_cast<double>(m);
  }
  // Even n: the Nyquist mode is stored as -n/2.
  return k;
}

bool Grid1D::same_lattice(const Grid1D& other, double rel_tol) const {
  return n_points_ == other.n_points_ &&
         std::abs(dx_ - other.dx_) <= rel_tol * dx_ &&
         std::abs(x_min_ - other.x_min_) <= rel_tol * std::max(1.0, length());
}

RealField::RealField(Grid1D g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw std::invalid_argument("RealField: value count does not match grid");
  }
}

double RealField::integral() const { return integrate(values, grid.dx()); }

double RealField::max_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double integrate(std::span<const double> values, double dx) {
  double s = 0.0;
  for (double v : values) s += v;
  return s * dx;
}

void require_density(const RealField& h, double mass_tol) {
  for (double v : h.values) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw std::invalid_argument("density has negative or non-finite values");
    }
  }
  const double mass = h.integral();
  if (std::abs(mass - 1.0) > mass_tol) {
    throw std::invalid_argument("density is not normalized: mass = " + std::to_string(mass));
  }
}

double edge_mass_fraction(std::span<const double> values, std::size_t bins) {
  double total = 0.0;
  for (double v : values) total += std::abs(v);
  if (total == 0.0) return 0.0;
  const std::size_t n = values.size();
  bins = std::min(bins, n / 2);
  double edge = 0.0;
  for (std::size_t i = 0; i < bins; ++i) edge += std::abs(values[i]) + std::abs(values[n - 1 - i]);
  return edge / total;
}

}  // namespace wfelab
