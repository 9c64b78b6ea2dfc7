#include "wfelab/observables.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "tensor_cursor.hpp"

namespace wfelab {

namespace {

void check_params(const WfeParams& params, std::size_t n_particles) {
  if (params.n_particles != n_particles) {
    throw std::invalid_argument("WfeParams particle count " + std::to_string(params.n_particles) +
                                " does not match state with " + std::to_string(n_particles));
  }
}

double checked_dispersion(double s) {
  if (s < -1e-12) {
    throw std::logic_error("negative CoM dispersion " + std::to_string(s) + ": quadrature inconsistency");
  }
  return std::max(s, 0.0);
}

struct FactorMoments {
  Complex overlap;
  Complex first;
  Complex second;
};

FactorMoments factor_moments(const CVector& a, const CVector& b, const Grid1D& grid) {
  FactorMoments m{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    const Complex v = std::conj(a[i]) * b[i];
    m.overlap += v;
    m.first += v * x;
    m.second += v * (x * x);
  }
  const double dx = grid.dx();
  m.overlap *= dx;
  m.first *= dx;
  m.second *= dx;
  return m;
}

// Probability of the lattice index sum j = sum_k i_k for the cross density
// prod_k conj(a_k) b_k dx, by FFT convolution over a period that holds the
// full linear convolution.
CVector index_sum_distribution(const ProductState& a, const ProductState& b) {
  const std::size_t n = a.grid().size();
  const std::size_t N = a.n_particles();
  const std::size_t m = N * (n - 1) + 1;
  const auto& plan = fft_plan({static_cast<int>(m)});
  const double dx = a.grid().dx();
  CVector acc(m, Complex(1.0, 0.0));
  CVector buf(m);
  for (std::size_t k = 0; k < N; ++k) {
    std::fill(buf.begin(), buf.end(), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) buf[i] = std::conj(a.factor(k)[i]) * b.factor(k)[i] * dx;
    plan.forward(buf);
    for (std::size_t j = 0; j < m; ++j) acc[j] *= buf[j];
  }
  plan.backward(acc);
  return acc;
}

RealField lattice_density(const Grid1D& axis, std::size_t N, const std::vector<double>& probabilities) {
  const Grid1D lattice = com_lattice(axis, N);
  std::vector<double> h(probabilities.size());
  const double inv = 1.0 / lattice.dx();
  for (std::size_t j = 0; j < h.size(); ++j) h[j] = std::max(probabilities[j], 0.0) * inv;
  return RealField(lattice, std::move(h));
}

}  // namespace

WfeParams::WfeParams(double coupling, std::size_t n) : w(coupling), n_particles(n) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("WfeParams: w must be finite and >= 0");
  if (n_particles == 0) throw std::invalid_argument("WfeParams: N must be positive");
}

// ---- full states ----------------------------------------------------------

double com_mean(const WaveFunctionFull& psi) {
  const auto amps = psi.amplitudes();
  const Grid1D& g = psi.grid();
  const double inv_n = 1.0 / static_cast<double>(psi.n_particles());
  double s = 0.0;
  TensorCursor cur(g.size(), psi.n_particles());
  for (std::size_t flat = 0; flat < amps.size(); ++flat, cur.advance()) {
    const double X = g.x_min() + static_cast<double>(cur.index_sum()) * g.dx() * inv_n;
    s += std::norm(amps[flat]) * X;
  }
  return s * psi.volume_element();
}

double com_dispersion(const WaveFunctionFull& psi) {
  const double mean = com_mean(psi);
  const auto amps = psi.amplitudes();
  const Grid1D& g = psi.grid();
  const double inv_n = 1.0 / static_cast<double>(psi.n_particles());
  double s = 0.0;
  TensorCursor cur(g.size(), psi.n_particles());
  for (std::size_t flat = 0; flat < amps.size(); ++flat, cur.advance()) {
    const double d = g.x_min() + static_cast<double>(cur.index_sum()) * g.dx() * inv_n - mean;
    s += std::norm(amps[flat]) * d * d;
  }
  return checked_dispersion(s * psi.volume_element());
}

SingleCopyMoments single_copy_moments(const WaveFunctionFull& psi) {
  const std::size_t N = psi.n_particles();
  const Grid1D& g = psi.grid();
  SingleCopyMoments m{std::vector<double>(N, 0.0), Eigen::MatrixXd::Zero(static_cast<long>(N), static_cast<long>(N))};
  const auto amps = psi.amplitudes();
  std::vector<double> xs(N);
  TensorCursor cur(g.size(), N);
  for (std::size_t flat = 0; flat < amps.size(); ++flat, cur.advance()) {
    const double p = std::norm(amps[flat]);
    if (p == 0.0) continue;
    for (std::size_t k = 0; k < N; ++k) xs[k] = g.x(cur.index(k));
    for (std::size_t k = 0; k < N; ++k) {
      m.means[k] += p * xs[k];
      for (std::size_t l = k; l < N; ++l) m.second(static_cast<long>(k), static_cast<long>(l)) += p * xs[k] * xs[l];
    }
  }
  const double vol = psi.volume_element();
  for (std::size_t k = 0; k < N; ++k) {
    m.means[k] *= vol;
    for (std::size_t l = k; l < N; ++l) {
      const auto kk = static_cast<long>(k), ll = static_cast<long>(l);
      m.second(kk, ll) *= vol;
      m.second(ll, kk) = m.second(kk, ll);
    }
  }
  return m;
}

RealField marginal_com_density(const WaveFunctionFull& psi) {
  const Grid1D& g = psi.grid();
  const std::size_t N = psi.n_particles();
  std::vector<double> prob(N * (g.size() - 1) + 1, 0.0);
  const auto amps = psi.amplitudes();
  const double vol = psi.volume_element();
  TensorCursor cur(g.size(), N);
  for (std::size_t flat = 0; flat < amps.size(); ++flat, cur.advance()) {
    prob[cur.index_sum()] += std::norm(amps[flat]) * vol;
  }
  return lattice_density(g, N, prob);
}

// ---- product states -------------------------------------------------------

double com_mean(const ProductState& psi) {
  double s = 0.0;
  for (const auto& f : psi.factors()) s += factor_moments(f, f, psi.grid()).first.real();
  return s / static_cast<double>(psi.n_particles());
}

double com_dispersion(const ProductState& psi) {
  // Independent factors: Var X = (1/N^2) sum_k Var x_k.
  const Grid1D& g = psi.grid();
  double s = 0.0;
  for (const auto& f : psi.factors()) {
    const double mk = factor_moments(f, f, g).first.real();
    double v = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double d = g.x(i) - mk;
      v += std::norm(f[i]) * d * d;
    }
    s += v * g.dx();
  }
  const double n = static_cast<double>(psi.n_particles());
  return checked_dispersion(s / (n * n));
}

SingleCopyMoments single_copy_moments(const ProductState& psi) {
  std::vector<ProductSuperposition::Branch> one;
  one.push_back({Complex(1.0, 0.0), psi});
  return single_copy_moments(ProductSuperposition(std::move(one)));
}

RealField marginal_com_density(const ProductState& psi) {
  const auto dist = index_sum_distribution(psi, psi);
  std::vector<double> prob(dist.size());
  for (std::size_t j = 0; j < dist.size(); ++j) prob[j] = dist[j].real();
  return lattice_density(psi.grid(), psi.n_particles(), prob);
}

// ---- product superpositions ----------------------------------------------

SingleCopyMoments single_copy_moments(const ProductSuperposition& psi) {
  const std::size_t N = psi.n_particles();
  const Grid1D& g = psi.grid();
  std::vector<Complex> means(N, 0.0);
  std::vector<Complex> second(N * N, 0.0);
  std::vector<FactorMoments> fm(N);
  for (const auto& a : psi.branches()) {
    for (const auto& b : psi.branches()) {
      const Complex c = std::conj(a.coefficient) * b.coefficient;
      for (std::size_t k = 0; k < N; ++k) fm[k] = factor_moments(a.state.factor(k), b.state.factor(k), g);
      for (std::size_t k = 0; k < N; ++k) {
        Complex rest(1.0, 0.0);
        for (std::size_t q = 0; q < N; ++q) {
          if (q != k) rest *= fm[q].overlap;
        }
        means[k] += c * fm[k].first * rest;
        second[k * N + k] += c * fm[k].second * rest;
        for (std::size_t l = k + 1; l < N; ++l) {
          Complex rest2(1.0, 0.0);
          for (std::size_t q = 0; q < N; ++q) {
            if (q != k && q != l) rest2 *= fm[q].overlap;
          }
          const Complex v = c * fm[k].first * fm[l].first * rest2;
          second[k * N + l] += v;
          second[l * N + k] += v;
        }
      }
    }
  }
  SingleCopyMoments m{std::vector<double>(N), Eigen::MatrixXd(static_cast<long>(N), static_cast<long>(N))};
  for (std::size_t k = 0; k < N; ++k) {
    m.means[k] = means[k].real();
    for (std::size_t l = 0; l < N; ++l) m.second(static_cast<long>(k), static_cast<long>(l)) = second[k * N + l].real();
  }
  return m;
}

double com_mean(const ProductSuperposition& psi) {
  const auto m = single_copy_moments(psi);
  double s = 0.0;
  for (double v : m.means) s += v;
  return s / static_cast<double>(psi.n_particles());
}

double com_dispersion(const ProductSuperposition& psi) {
  const auto m = single_copy_moments(psi);
  const double n = static_cast<double>(psi.n_particles());
  double mean = 0.0;
  for (double v : m.means) mean += v;
  mean /= n;
  const double x2 = m.second.sum() / (n * n);
  return checked_dispersion(x2 - mean * mean);
}

RealField marginal_com_density(const ProductSuperposition& psi) {
  std::vector<double> prob;
  for (const auto& a : psi.branches()) {
    for (const auto& b : psi.branches()) {
      const auto dist = index_sum_distribution(a.state, b.state);
      const Complex c = std::conj(a.coefficient) * b.coefficient;
      if (prob.empty()) prob.assign(dist.size(), 0.0);
      for (std::size_t j = 0; j < dist.size(); ++j) prob[j] += (c * dist[j]).real();
    }
  }
  return lattice_density(psi.grid(), psi.n_particles(), prob);
}

// ---- WFE ------------------------------------------------------------------

namespace {

double doubled_from_moments(const SingleCopyMoments& m, const WfeParams& params) {
  // <(1/N) sum_k (x_k - y_k)>^2 over psi(x) psi(y) = (2/N^2) sum_kl (<x_k x_l> - <x_k><x_l>).
  const std::size_t N = m.means.size();
  const double n = static_cast<double>(N);
  double s = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t l = 0; l < N; ++l) {
      s += m.second(static_cast<long>(k), static_cast<long>(l)) - m.means[k] * m.means[l];
    }
  }
  const double doubled_expectation = 2.0 * s / (n * n);
  return 0.5 * params.scale() * doubled_expectation;
}

}  // namespace

double wfe_direct(const WaveFunctionFull& psi, const WfeParams& params) {
  check_params(params, psi.n_particles());
  return params.scale() * com_dispersion(psi);
}

double wfe_direct(const ProductState& psi, const WfeParams& params) {
  check_params(params, psi.n_particles());
  return params.scale() * com_dispersion(psi);
}

double wfe_direct(const ProductSuperposition& psi, const WfeParams& params) {
  check_params(params, psi.n_particles());
  return params.scale() * com_dispersion(psi);
}

double wfe_doubled(const WaveFunctionFull& psi, const WfeParams& params) {
  check_params(params, psi.n_particles());
  return doubled_from_moments(single_copy_moments(psi), params);
}

double wfe_doubled(const ProductState& psi, const WfeParams& params) {
  check_params(params, psi.n_particles());
  return doubled_from_moments(single_copy_moments(psi), params);
}

double wfe_doubled(const ProductSuperposition& psi, const WfeParams& params) {
  check_params(params, psi.n_particles());
  return doubled_from_moments(single_copy_moments(psi), params);
}

Grid1D com_lattice(const Grid1D& axis, std::size_t n_particles) {
  if (n_particles == 0) throw std::invalid_argument("com_lattice: N must be positive");
  const std::size_t points = n_particles * (axis.size() - 1) + 1;
  return Grid1D(points, axis.x_min(), axis.dx() / static_cast<double>(n_particles), false);
}

BinnedDensity rebin_density(const RealField& h, const Grid1D& target) {
  std::vector<double> out(target.size(), 0.0);
  const double inv_dx = 1.0 / target.dx();
  for (std::size_t j = 0; j < h.size(); ++j) {
    const double mass = h.values[j] * h.grid.dx();
    if (mass == 0.0) continue;
    const double pos = (h.grid.x(j) - target.x_min()) * inv_dx;
    const long bin = std::clamp(std::lround(pos), 0L, static_cast<long>(target.size()) - 1);
    out[static_cast<std::size_t>(bin)] += mass;
  }
  for (double& v : out) v *= inv_dx;
  BinnedDensity result{RealField(target, std::move(out)), false};
  // h lives on the CoM lattice (spacing dx/N), so N dx_com < dx means a finer target.
  result.under_resolved = target.dx() < h.grid.dx() * (1.0 - 1e-12);
  return result;
}

Kernel Kernel::table(double d_min, double d_step, std::vector<double> samples) {
  if (samples.size() < 2 || !(d_step > 0.0)) throw std::invalid_argument("Kernel::table: need >= 2 samples and d_step > 0");
  Kernel k(Kind::table);
  k.d_min_ = d_min;
  k.d_step_ = d_step;
  k.samples_ = std::move(samples);
  return k;
}

double Kernel::operator()(double d) const {
  switch (kind_) {
    case Kind::quadratic: return d * d;
    case Kind::absolute: return std::abs(d);
    case Kind::table: {
      const double pos = (d - d_min_) / d_step_;
      const double last = static_cast<double>(samples_.size() - 1);
      if (pos < -1e-9 || pos > last + 1e-9) {
        throw std::out_of_range("Kernel table does not cover separation " + std::to_string(d));
      }
      const double p = std::clamp(pos, 0.0, last);
      const auto i = std::min(static_cast<std::size_t>(p), samples_.size() - 2);
      const double t = p - static_cast<double>(i);
      return (1.0 - t) * samples_[i] + t * samples_[i + 1];
    }
  }
  return 0.0;
}

double wfe_kernel(const RealField& h, const Kernel& kernel, const WfeParams& params) {
  require_density(h, 1e-9);
  const std::size_t n = h.size();
  const double dx = h.grid.dx();
  // K depends on the separation only, and separations on a uniform lattice are (i - j) dx.
  std::vector<double> k_of_offset(2 * n - 1);
  for (std::size_t m = 0; m < k_of_offset.size(); ++m) {
    k_of_offset[m] = kernel((static_cast<double>(m) - static_cast<double>(n - 1)) * dx);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double hi = h.values[i];
    if (hi == 0.0) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += h.values[j] * k_of_offset[i + (n - 1) - j];
    s += hi * row;
  }
  return 0.5 * params.scale() * s * dx * dx;
}

double density_mean(const RealField& h) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) s += h.values[i] * h.grid.x(i);
  return s * h.grid.dx();
}

double density_variance(const RealField& h) {
  const double mean = density_mean(h);
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = h.grid.x(i) - mean;
    s += h.values[i] * d * d;
  }
  return s * h.grid.dx();
}

}  // namespace wfelab
