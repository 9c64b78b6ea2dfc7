#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wfelab/grid.hpp"
#include "wfelab/spectral.hpp"

namespace wfelab {

inline constexpr std::size_t kDefaultParticleCap = 4;
/// Upper bound on n_points^N amplitudes held by a full state (256 MiB of doubles).
inline constexpr std::size_t kMaxFullStateAmplitudes = std::size_t{1} << 24;

/// psi(x_1, ..., x_N) on the N-fold product of one grid, stored row-major
/// with x_1 as the slowest axis. Immutable after construction.
class WaveFunctionFull {
 public:
  WaveFunctionFull(Grid1D grid, std::size_t n_particles, CVector amplitudes,
                   std::size_t particle_cap = kDefaultParticleCap);

  const Grid1D& grid() const { return grid_; }
  std::size_t n_particles() const { return n_particles_; }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  std::size_t size() const { return amplitudes_.size(); }
  /// dx^N
  double volume_element() const;
  std::vector<int> extents() const;

  WaveFunctionFull with_amplitudes(CVector amplitudes) const;

 private:
  Grid1D grid_;
  std::size_t n_particles_;
  CVector amplitudes_;
};

/// psi = prod_k f_k(x_k); each factor is normalized on construction.
class ProductState {
 public:
  ProductState(Grid1D grid, std::vector<CVector> factors);

  const Grid1D& grid() const { return grid_; }
  std::size_t n_particles() const { return factors_.size(); }
  const std::vector<CVector>& factors() const { return factors_; }
  const CVector& factor(std::size_t k) const { return factors_[k]; }

 private:
  Grid1D grid_;
  std::vector<CVector> factors_;
};

/// sum_b c_b * prod_k f_{b,k}(x_k), normalized as a whole on construction.
/// Holds cat states for particle counts far beyond the full-tensor cap.
class ProductSuperposition {
 public:
  struct Branch {
    Complex coefficient;
    ProductState state;
  };

  explicit ProductSuperposition(std::vector<Branch> branches);

  const Grid1D& grid() const { return branches_.front().state.grid(); }
  std::size_t n_particles() const { return branches_.front().state.n_particles(); }
  const std::vector<Branch>& branches() const { return branches_; }

  /// <A|B> between two product branches, i.e. prod_k <a_k|b_k>.
  static Complex branch_overlap(const ProductState& a, const ProductState& b);

 private:
  std::vector<Branch> branches_;
};

// Single-particle vectors.
double norm_squared(std::span<const Complex> f, double dx);
Complex inner_product(std::span<const Complex> a, std::span<const Complex> b, double dx);
CVector normalized(std::span<const Complex> f, double dx);

// Full states.
double norm_squared(const WaveFunctionFull& psi);
/// <psi|chi> = sum conj(psi) chi dx^N.
Complex inner_product(const WaveFunctionFull& psi, const WaveFunctionFull& chi);
WaveFunctionFull normalize(const WaveFunctionFull& psi);

WaveFunctionFull expand(const ProductState& state, std::size_t particle_cap = kDefaultParticleCap);
WaveFunctionFull expand(const ProductSuperposition& state, std::size_t particle_cap = kDefaultParticleCap);

/// Mass of a normal density N(center, sigma^2) falling outside the grid window.
double gaussian_outside_mass(const Grid1D& grid, double center, double sigma);

/// Normalized exp(-(x-c)^2/(4 sigma^2) + i k x); |f|^2 has variance sigma^2.
/// Throws std::invalid_argument when sigma < 3 dx and TailMassError when more
/// than 1e-10 of the mass lies outside the grid window.
CVector make_gaussian_packet(const Grid1D& grid, double center, double sigma, double momentum);

/// (1/sqrt 2)[prod_k g_{-L/2}(x_k) + prod_k g_{+L/2}(x_k)] renormalized for
/// branch overlap.
WaveFunctionFull make_cat_state(const Grid1D& grid, std::size_t n_particles, double separation,
                                double sigma, std::size_t particle_cap = kDefaultParticleCap);

/// Same superposition held in factored form; any particle count.
ProductSuperposition make_cat_superposition(const Grid1D& grid, std::size_t n_particles,
                                            double separation, double sigma);

/// Flat index -> per-axis indices for a row-major tensor with equal extents.
void unflatten_index(std::size_t flat, std::size_t extent, std::span<std::size_t> out);

}  // namespace wfelab
