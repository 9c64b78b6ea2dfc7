#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wfelab {

/// Raised when a field carries more mass near the grid edges than the
/// truncation of R to a finite window tolerates.
class TailMassError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform 1D lattice x(i) = x_min + i*dx, i in [0, n).
///
/// A periodic grid represents the torus [x_min, x_min + n*dx); a bounded grid
/// has its last point at x_min + (n-1)*dx and fields are taken to vanish
/// outside it.
class Grid1D {
 public:
  static constexpr std::size_t kMinPoints = 8;

  Grid1D(std::size_t n_points, double x_min, double dx, bool periodic);

  /// n points covering [x_min, x_max) with spacing (x_max - x_min)/n.
  static Grid1D periodic(double x_min, double x_max, std::size_t n_points);
  /// n points with both endpoints on the lattice.
  static Grid1D bounded(double x_min, double x_max, std::size_t n_points);

  std::size_t size() const { return n_points_; }
  double x_min() const { return x_min_; }
  double dx() const { return dx_; }
  bool is_periodic() const { return periodic_; }

  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }
  double x_last() const { return x(n_points_ - 1); }
  /// Period length for periodic grids, n*dx in either case.
  double length() const { return static_cast<double>(n_points_) * dx_; }

  std::vector<double> coordinates() const;
  /// Angular wavenumbers in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1 times 2*pi/length.
  std::vector<double> wavenumbers() const;

  Grid1D as_periodic() const { return Grid1D(n_points_, x_min_, dx_, true); }

  bool same_lattice(const Grid1D& other, double rel_tol = 1e-12) const;

 private:
  std::size_t n_points_;
  double x_min_;
  double dx_;
  bool periodic_;
};

/// Real-valued function sampled on a Grid1D (densities h, Macro-fields phi).
struct RealField {
  Grid1D grid;
  std::vector<double> values;

  RealField(Grid1D g, std::vector<double> v);
  explicit RealField(Grid1D g) : RealField(g, std::vector<double>(g.size(), 0.0)) {}

  std::size_t size() const { return values.size(); }
  double integral() const;
  double max_abs() const;
};

/// Sum of values*dx.
double integrate(std::span<const double> values, double dx);

/// Throws std::invalid_argument unless h is non-negative with unit mass
/// (within mass_tol).
void require_density(const RealField& h, double mass_tol = 1e-9);

/// Mass of |values| within `bins` points of either edge, relative to the total.
double edge_mass_fraction(std::span<const double> values, std::size_t bins);

}  // namespace wfelab
