#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wfelab/grid.hpp"

namespace wfelab {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

/// In-place complex FFT over a row-major array of the given extents (FFTW
/// backed). forward() is unnormalized; backward() divides by the total size,
/// so backward(forward(f)) == f.
class FftPlan {
 public:
  explicit FftPlan(std::vector<int> extents);

  void forward(std::span<Complex> data) const;
  void backward(std::span<Complex> data) const;
  std::size_t size() const { return total_; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
  std::size_t total_ = 0;
};

/// Shared plan for the given extents, created once per thread.
const FftPlan& fft_plan(const std::vector<int>& extents);

inline constexpr int kMaxDerivativeOrder = 4;

/// d^order f / dx^order. Periodic grids use the Fourier multiplier (ik)^order
/// (Nyquist mode dropped for odd orders); bounded grids use fourth-order
/// central differences with the field taken as zero beyond the edges.
std::vector<double> spectral_derivative(std::span<const double> f, int order, const Grid1D& grid);
CVector spectral_derivative(std::span<const Complex> f, int order, const Grid1D& grid);

/// Dense matrix of the Fourier derivative on the periodic embedding of `grid`
/// (bounded grids are treated as one period of length n*dx).
Eigen::MatrixXd fourier_derivative_matrix(const Grid1D& grid, int order);

/// Dense matrix of the fourth-order central difference used by the bounded
/// path of spectral_derivative.
Eigen::MatrixXd finite_difference_matrix(const Grid1D& grid, int order);

/// Banded matrix of a centered stencil (odd length), scaled by `scale`, with
/// zero values beyond the edges.
Eigen::MatrixXd stencil_matrix(std::size_t n, std::span<const double> stencil, double scale);

/// Applies a centered stencil with zero padding.
std::vector<double> apply_stencil(std::span<const double> f, std::span<const double> stencil, double scale);

}  // namespace wfelab
