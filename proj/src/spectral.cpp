#include "wfelab/spectral.hpp"

#include <fftw3.h>

#include <array>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wfelab {

namespace {

// FFTW's planner is not re-entrant; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::array<double, 5> kFd1 = {1.0, -8.0, 0.0, 8.0, -1.0};
constexpr std::array<double, 5> kFd2 = {-1.0, 16.0, -30.0, 16.0, -1.0};
constexpr std::array<double, 7> kFd3 = {1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0};
constexpr std::array<double, 7> kFd4 = {-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0};

struct FdStencil {
  std::span<const double> coeffs;
  double denominator;
};

FdStencil fd_stencil(int order) {
  switch (order) {
    case 1: return {kFd1, 12.0};
    case 2: return {kFd2, 12.0};
    case 3: return {kFd3, 8.0};
    case 4: return {kFd4, 6.0};
    default: break;
  }
  throw std::invalid_argument("derivative order " + std::to_string(order) + " unsupported (1..4)");
}

void check_order(int order) {
  if (order < 1 || order > kMaxDerivativeOrder) {
    throw std::invalid_argument("derivative order " + std::to_string(order) + " unsupported (1..4)");
  }
}

Complex ik_power(double k, int order) {
  Complex m(1.0, 0.0);
  const Complex ik(0.0, k);
  for (int p = 0; p < order; ++p) m *= ik;
  return m;
}

CVector fourier_derivative(std::span<const Complex> f, int order, const Grid1D& grid) {
  CVector data(f.begin(), f.end());
  const auto& plan = fft_plan({static_cast<int>(data.size())});
  plan.forward(data);
  const auto k = grid.wavenumbers();
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) data[i] *= ik_power(k[i], order);
  if (n % 2 == 0 && order % 2 == 1) data[n / 2] = 0.0;
  plan.backward(data);
  return data;
}

}  // namespace

struct FftPlan::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

FftPlan::FftPlan(std::vector<int> extents) {
  if (extents.empty()) throw std::invalid_argument("FftPlan: no extents");
  total_ = 1;
  for (int e : extents) {
    if (e <= 0) throw std::invalid_argument("FftPlan: non-positive extent");
    total_ *= static_cast<std::size_t>(e);
  }
  auto impl = std::make_shared<Impl>();
  CVector scratch(total_);
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl->fwd = fftw_plan_dft(static_cast<int>(extents.size()), extents.data(), buf, buf, FFTW_FORWARD, flags);
  impl->bwd = fftw_plan_dft(static_cast<int>(extents.size()), extents.data(), buf, buf, FFTW_BACKWARD, flags);
  if (!impl->fwd || !impl->bwd) throw std::runtime_error("FftPlan: FFTW planning failed");
  impl_ = std::move(impl);
}

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != total_) throw std::invalid_argument("FftPlan: size mismatch");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->fwd, buf, buf);
}

void FftPlan::backward(std::span<Complex> data) const {
  if (data.size() != total_) throw std::invalid_argument("FftPlan: size mismatch");
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(impl_->bwd, buf, buf);
  const double scale = 1.0 / static_cast<double>(total_);
  for (auto& v : data) v *= scale;
}

const FftPlan& fft_plan(const std::vector<int>& extents) {
  thread_local std::map<std::vector<int>, FftPlan> cache;
  auto it = cache.find(extents);
  if (it == cache.end()) it = cache.emplace(extents, FftPlan(extents)).first;
  return it->second;
}

std::vector<double> apply_stencil(std::span<const double> f, std::span<const double> stencil, double scale) {
  const auto n = static_cast<long>(f.size());
  const auto half = static_cast<long>(stencil.size() / 2);
  std::vector<double> out(f.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long m = -half; m <= half; ++m) {
      const long j = i + m;
      if (j < 0 || j >= n) continue;
      acc += stencil[static_cast<std::size_t>(m + half)] * f[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = acc * scale;
  }
  return out;
}

Eigen::MatrixXd stencil_matrix(std::size_t n, std::span<const double> stencil, double scale) {
  const auto half = static_cast<long>(stencil.size() / 2);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  for (long i = 0; i < static_cast<long>(n); ++i) {
    for (long off = -half; off <= half; ++off) {
      const long j = i + off;
      if (j < 0 || j >= static_cast<long>(n)) continue;
      m(i, j) = stencil[static_cast<std::size_t>(off + half)] * scale;
    }
  }
  return m;
}

std::vector<double> spectral_derivative(std::span<const double> f, int order, const Grid1D& grid) {
  check_order(order);
  if (f.size() != grid.size()) throw std::invalid_argument("spectral_derivative: size mismatch");
  if (grid.is_periodic()) {
    CVector c(f.begin(), f.end());
    const auto d = fourier_derivative(c, order, grid);
    std::vector<double> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
    return out;
  }
  const auto st = fd_stencil(order);
  return apply_stencil(f, st.coeffs, 1.0 / (st.denominator * std::pow(grid.dx(), order)));
}

CVector spectral_derivative(std::span<const Complex> f, int order, const Grid1D& grid) {
  check_order(order);
  if (f.size() != grid.size()) throw std::invalid_argument("spectral_derivative: size mismatch");
  if (grid.is_periodic()) return fourier_derivative(f, order, grid);
  std::vector<double> re(f.size()), im(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    re[i] = f[i].real();
    im[i] = f[i].imag();
  }
  const auto dre = spectral_derivative(re, order, grid);
  const auto dim = spectral_derivative(im, order, grid);
  CVector out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = Complex(dre[i], dim[i]);
  return out;
}

Eigen::MatrixXd fourier_derivative_matrix(const Grid1D& grid, int order) {
  check_order(order);
  const std::size_t n = grid.size();
  CVector delta(n, 0.0);
  delta[0] = 1.0;
  const auto column = fourier_derivative(delta, order, grid.as_periodic());
  Eigen::MatrixXd m(static_cast<long>(n), static_cast<long>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m(static_cast<long>(i), static_cast<long>(j)) = column[(i + n - j) % n].real();
    }
  }
  return m;
}

Eigen::MatrixXd finite_difference_matrix(const Grid1D& grid, int order) {
  const auto st = fd_stencil(order);
  return stencil_matrix(grid.size(), st.coeffs, 1.0 / (st.denominator * std::pow(grid.dx(), order)));
}

}  // namespace wfelab
