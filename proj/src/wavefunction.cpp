#include "wfelab/wavefunction.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wfelab {

namespace {

std::size_t checked_power(std::size_t base, std::size_t exponent) {
  std::size_t total = 1;
  for (std::size_t k = 0; k < exponent; ++k) {
    if (total > kMaxFullStateAmplitudes / base) {
      throw std::invalid_argument("full state would exceed " + std::to_string(kMaxFullStateAmplitudes) +
                                  " amplitudes; use ProductState");
    }
    total *= base;
  }
  return total;
}

}  // namespace

WaveFunctionFull::WaveFunctionFull(Grid1D grid, std::size_t n_particles, CVector amplitudes,
                                   std::size_t particle_cap)
    : grid_(grid), n_particles_(n_particles), amplitudes_(std::move(amplitudes)) {
  if (n_particles_ == 0) throw std::invalid_argument("WaveFunctionFull: need at least one particle");
  if (n_particles_ > particle_cap) {
    throw std::invalid_argument("WaveFunctionFull: " + std::to_string(n_particles_) +
                                " particles exceeds cap " + std::to_string(particle_cap));
  }
  const std::size_t expected = checked_power(grid_.size(), n_particles_);
  if (amplitudes_.size() != expected) {
    throw std::invalid_argument("WaveFunctionFull: amplitude count does not match n_points^N");
  }
}

double WaveFunctionFull::volume_element() const {
  return std::pow(grid_.dx(), static_cast<double>(n_particles_));
}

std::vector<int> WaveFunctionFull::extents() const {
  return std::vector<int>(n_particles_, static_cast<int>(grid_.size()));
}

WaveFunctionFull WaveFunctionFull::with_amplitudes(CVector amplitudes) const {
  return WaveFunctionFull(grid_, n_particles_, std::move(amplitudes), n_particles_);
}

ProductState::ProductState(Grid1D grid, std::vector<CVector> factors) : grid_(grid), factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("ProductState: no factors");
  for (auto& f : factors_) {
    if (f.size() != grid_.size()) throw std::invalid_argument("ProductState: factor length does not match grid");
    f = normalized(f, grid_.dx());
  }
}

ProductSuperposition::ProductSuperposition(std::vector<Branch> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) throw std::invalid_argument("ProductSuperposition: no branches");
  const auto& g0 = branches_.front().state.grid();
  const std::size_t n0 = branches_.front().state.n_particles();
  for (const auto& b : branches_) {
    if (!b.state.grid().same_lattice(g0) || b.state.n_particles() != n0) {
      throw std::invalid_argument("ProductSuperposition: branches must share grid and particle count");
    }
  }
  double norm2 = 0.0;
  for (const auto& a : branches_) {
    for (const auto& b : branches_) {
      norm2 += (std::conj(a.coefficient) * b.coefficient * branch_overlap(a.state, b.state)).real();
    }
  }
  if (!(norm2 > 0.0)) throw std::invalid_argument("ProductSuperposition: zero norm");
  const double scale = 1.0 / std::sqrt(norm2);
  for (auto& b : branches_) b.coefficient *= scale;
}

Complex ProductSuperposition::branch_overlap(const ProductState& a, const ProductState& b) {
  Complex ov(1.0, 0.0);
  for (std::size_t k = 0; k < a.n_particles(); ++k) {
    ov *= inner_product(a.factor(k), b.factor(k), a.grid().dx());
  }
  return ov;
}

double norm_squared(std::span<const Complex> f, double dx) {
  double s = 0.0;
  for (const auto& v : f) s += std::norm(v);
  return s * dx;
}

Complex inner_product(std::span<const Complex> a, std::span<const Complex> b, double dx) {
  if (a.size() != b.size()) throw std::invalid_argument("inner_product: size mismatch");
  Complex s(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * dx;
}

CVector normalized(std::span<const Complex> f, double dx) {
  const double n2 = norm_squared(f, dx);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw std::invalid_argument("cannot normalize a zero or non-finite vector");
  const double scale = 1.0 / std::sqrt(n2);
  CVector out(f.begin(), f.end());
  for (auto& v : out) v *= scale;
  return out;
}

double norm_squared(const WaveFunctionFull& psi) {
  double s = 0.0;
  for (const auto& v : psi.amplitudes()) s += std::norm(v);
  return s * psi.volume_element();
}

Complex inner_product(const WaveFunctionFull& psi, const WaveFunctionFull& chi) {
  if (psi.size() != chi.size()) throw std::invalid_argument("inner_product: shape mismatch");
  const auto a = psi.amplitudes();
  const auto b = chi.amplitudes();
  Complex s(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * psi.volume_element();
}

WaveFunctionFull normalize(const WaveFunctionFull& psi) {
  const double n2 = norm_squared(psi);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw std::invalid_argument("cannot normalize a zero or non-finite state");
  const double scale = 1.0 / std::sqrt(n2);
  CVector out(psi.amplitudes().begin(), psi.amplitudes().end());
  for (auto& v : out) v *= scale;
  return psi.with_amplitudes(std::move(out));
}

void unflatten_index(std::size_t flat, std::size_t extent, std::span<std::size_t> out) {
  for (std::size_t a = out.size(); a-- > 0;) {
    out[a] = flat % extent;
    flat /= extent;
  }
}

WaveFunctionFull expand(const ProductState& state, std::size_t particle_cap) {
  const std::size_t n = state.grid().size();
  const std::size_t N = state.n_particles();
  const std::size_t total = checked_power(n, N);
  CVector amps(total);
  std::vector<std::size_t> idx(N);
  for (std::size_t flat = 0; flat < total; ++flat) {
    unflatten_index(flat, n, idx);
    Complex v(1.0, 0.0);
    for (std::size_t k = 0; k < N; ++k) v *= state.factor(k)[idx[k]];
    amps[flat] = v;
  }
  return WaveFunctionFull(state.grid(), N, std::move(amps), particle_cap);
}

WaveFunctionFull expand(const ProductSuperposition& state, std::size_t particle_cap) {
  CVector amps;
  for (const auto& b : state.branches()) {
    const auto full = expand(b.state, particle_cap);
    if (amps.empty()) amps.assign(full.size(), Complex(0.0, 0.0));
    const auto a = full.amplitudes();
    for (std::size_t i = 0; i < a.size(); ++i) amps[i] += b.coefficient * a[i];
  }
  return WaveFunctionFull(state.grid(), state.n_particles(), std::move(amps), particle_cap);
}

double gaussian_outside_mass(const Grid1D& grid, double center, double sigma) {
  const double lo = grid.x_min();
  const double hi = grid.is_periodic() ? grid.x_min() + grid.length() : grid.x_last();
  const double s = sigma * std::numbers::sqrt2;
  return 0.5 * std::erfc((center - lo) / s) + 0.5 * std::erfc((hi - center) / s);
}

CVector make_gaussian_packet(const Grid1D& grid, double center, double sigma, double momentum) {
  if (!(sigma >= 3.0 * grid.dx())) {
    throw std::invalid_argument("make_gaussian_packet: sigma " + std::to_string(sigma) +
                                " is not resolvable (need >= 3 dx)");
  }
  const double tail = gaussian_outside_mass(grid, center, sigma);
  if (tail > 1e-10) {
    throw TailMassError("make_gaussian_packet: tail mass " + std::to_string(tail) + " outside the grid");
  }
  CVector f(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const double d = x - center;
    f[i] = std::exp(Complex(-d * d / (4.0 * sigma * sigma), momentum * x));
  }
  return normalized(f, grid.dx());
}

ProductSuperposition make_cat_superposition(const Grid1D& grid, std::size_t n_particles, double separation,
                                            double sigma) {
  if (n_particles == 0) throw std::invalid_argument("make_cat_superposition: need at least one particle");
  const auto left = make_gaussian_packet(grid, -0.5 * separation, sigma, 0.0);
  const auto right = make_gaussian_packet(grid, 0.5 * separation, sigma, 0.0);
  std::vector<ProductSuperposition::Branch> branches;
  branches.push_back({Complex(M_SQRT1_2, 0.0), ProductState(grid, std::vector<CVector>(n_particles, left))});
  branches.push_back({Complex(M_SQRT1_2, 0.0), ProductState(grid, std::vector<CVector>(n_particles, right))});
  return ProductSuperposition(std::move(branches));
}

WaveFunctionFull make_cat_state(const Grid1D& grid, std::size_t n_particles, double separation, double sigma,
                                std::size_t particle_cap) {
  if (n_particles > particle_cap) {
    throw std::invalid_argument("make_cat_state: particle count exceeds cap; use make_cat_superposition");
  }
  return normalize(expand(make_cat_superposition(grid, n_particles, separation, sigma), particle_cap));
}

}  // namespace wfelab
