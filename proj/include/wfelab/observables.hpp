#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "wfelab/grid.hpp"
#include "wfelab/wavefunction.hpp"

namespace wfelab {

/// Coupling w and particle count N of the wavefunction-energy term
/// WFE = w N^2 S_N. w = 0 is accepted as the linear limit.
struct WfeParams {
  double w = 0.0;
  std::size_t n_particles = 1;

  WfeParams() = default;
  WfeParams(double coupling, std::size_t n);

  /// w * N^2
  double scale() const { return w * static_cast<double>(n_particles * n_particles); }
};

// Center-of-mass X = (1/N) sum_k x_k. All states must be normalized.
double com_mean(const WaveFunctionFull& psi);
double com_mean(const ProductState& psi);
double com_mean(const ProductSuperposition& psi);

/// S_N = <X^2> - <X>^2.
double com_dispersion(const WaveFunctionFull& psi);
double com_dispersion(const ProductState& psi);
double com_dispersion(const ProductSuperposition& psi);

double wfe_direct(const WaveFunctionFull& psi, const WfeParams& params);
double wfe_direct(const ProductState& psi, const WfeParams& params);
double wfe_direct(const ProductSuperposition& psi, const WfeParams& params);

/// <x_k> and <x_k x_l> of a single copy of the state.
struct SingleCopyMoments {
  std::vector<double> means;
  Eigen::MatrixXd second;
};

SingleCopyMoments single_copy_moments(const WaveFunctionFull& psi);
SingleCopyMoments single_copy_moments(const ProductState& psi);
SingleCopyMoments single_copy_moments(const ProductSuperposition& psi);

/// (1/2) w N^2 <psi psi| [(1/N) sum_k (x_k - y_k)]^2 |psi psi>, evaluated from
/// single-copy moments; the doubled tensor is never formed.
double wfe_doubled(const WaveFunctionFull& psi, const WfeParams& params);
double wfe_doubled(const ProductState& psi, const WfeParams& params);
double wfe_doubled(const ProductSuperposition& psi, const WfeParams& params);

/// Lattice on which X = (1/N) sum x_{i_k} lives exactly: the axis range with
/// spacing dx/N, i.e. N(n-1)+1 points.
Grid1D com_lattice(const Grid1D& axis, std::size_t n_particles);

/// Marginal density h of X on com_lattice(). Full states deposit |psi|^2 dx^N
/// into the lattice point of their CoM; factored states convolve factor
/// densities with FFTs.
RealField marginal_com_density(const WaveFunctionFull& psi);
RealField marginal_com_density(const ProductState& psi);
RealField marginal_com_density(const ProductSuperposition& psi);

struct BinnedDensity {
  RealField density;
  /// Set when the target grid is finer than the CoM lattice (N dx_com < dx):
  /// bins between lattice points stay empty.
  bool under_resolved = false;
};

/// Nearest-bin redeposit of a CoM-lattice density onto a caller-supplied grid.
/// Mass beyond the target range lands in the edge bins.
BinnedDensity rebin_density(const RealField& h, const Grid1D& target);

/// K(x - y) for the generalized kernel energy.
class Kernel {
 public:
  enum class Kind { quadratic, absolute, table };

  static Kernel quadratic() { return Kernel(Kind::quadratic); }
  static Kernel absolute() { return Kernel(Kind::absolute); }
  /// Linear interpolation of samples K(d_min + i*d_step).
  static Kernel table(double d_min, double d_step, std::vector<double> samples);

  Kind kind() const { return kind_; }
  double operator()(double d) const;

 private:
  explicit Kernel(Kind k) : kind_(k) {}

  Kind kind_;
  double d_min_ = 0.0;
  double d_step_ = 1.0;
  std::vector<double> samples_;
};

/// (1/2) w N^2 sum_ij h_i h_j K(x_i - x_j) dx^2 by direct double sum.
/// Throws std::invalid_argument when h is not a normalized density.
double wfe_kernel(const RealField& h, const Kernel& kernel, const WfeParams& params);

/// Mean and variance of a density on its grid.
double density_mean(const RealField& h);
double density_variance(const RealField& h);

}  // namespace wfelab
