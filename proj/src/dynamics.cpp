#include "wfelab/dynamics.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <string>

#include "tensor_cursor.hpp"
#include "wfelab/spectral.hpp"

namespace wfelab {

namespace {

constexpr double kStabilityBound = 0.5;
constexpr double kNormDriftLimit = 1e-6;

double com_coordinate(const Grid1D& g, std::size_t index_sum, std::size_t n_particles) {
  return g.x_min() + static_cast<double>(index_sum) * g.dx() / static_cast<double>(n_particles);
}

// <X> without dividing by the norm; the midpoint states of the discrete action
// are not exactly normalized and the gradient must match this convention.
double raw_com_moment(std::span<const Complex> amps, const Grid1D& g, std::size_t N, int power) {
  double s = 0.0;
  TensorCursor cur(g.size(), N);
  for (std::size_t flat = 0; flat < amps.size(); ++flat, cur.advance()) {
    const double X = com_coordinate(g, cur.index_sum(), N);
    s += std::norm(amps[flat]) * (power == 1 ? X : X * X);
  }
  return s * std::pow(g.dx(), static_cast<double>(N));
}

std::vector<double> nonlinear_potential_from_mean(const Grid1D& g, std::size_t N, double mean, const WfeParams& p) {
  const std::size_t total = static_cast<std::size_t>(std::llround(std::pow(g.size(), N)));
  std::vector<double> u(total);
  const double s = p.scale();
  TensorCursor cur(g.size(), N);
  for (std::size_t flat = 0; flat < total; ++flat, cur.advance()) {
    const double X = com_coordinate(g, cur.index_sum(), N);
    u[flat] = s * (X * X - 2.0 * mean * X);
  }
  return u;
}

double raw_wfe(const WaveFunctionFull& psi, const WfeParams& p) {
  const double m1 = raw_com_moment(psi.amplitudes(), psi.grid(), psi.n_particles(), 1);
  const double m2 = raw_com_moment(psi.amplitudes(), psi.grid(), psi.n_particles(), 2);
  return p.scale() * (m2 - m1 * m1);
}

std::vector<double> axis_kinetic(const Grid1D& g) {
  const auto k = g.wavenumbers();
  std::vector<double> t(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) t[i] = 0.5 * k[i] * k[i];
  return t;
}

void require_periodic(const Grid1D& g, const char* who) {
  if (!g.is_periodic()) throw std::invalid_argument(std::string(who) + ": Fourier kinetic step needs a periodic grid");
}

CVector apply_kinetic(const WaveFunctionFull& psi) {
  const Grid1D& g = psi.grid();
  const auto t = axis_kinetic(g);
  CVector data(psi.amplitudes().begin(), psi.amplitudes().end());
  const auto& plan = fft_plan(psi.extents());
  plan.forward(data);
  TensorCursor cur(g.size(), psi.n_particles());
  for (std::size_t flat = 0; flat < data.size(); ++flat, cur.advance()) {
    double e = 0.0;
    for (std::size_t a = 0; a < psi.n_particles(); ++a) e += t[cur.index(a)];
    data[flat] *= e;
  }
  plan.backward(data);
  return data;
}

}  // namespace

std::vector<double> assemble_potential(const Hamiltonian& h, const Grid1D& grid, std::size_t N) {
  const std::size_t total = static_cast<std::size_t>(std::llround(std::pow(grid.size(), N)));
  std::vector<double> v(total, 0.0);
  if (!h.potential_tensor.empty()) {
    if (h.potential_tensor.size() != total) throw std::invalid_argument("Hamiltonian: potential tensor has wrong size");
    v = h.potential_tensor;
  }
  if (!h.particle_potential.empty()) {
    if (h.particle_potential.size() != grid.size()) {
      throw std::invalid_argument("Hamiltonian: particle potential has wrong size");
    }
    TensorCursor cur(grid.size(), N);
    for (std::size_t flat = 0; flat < total; ++flat, cur.advance()) {
      for (std::size_t a = 0; a < N; ++a) v[flat] += h.particle_potential[cur.index(a)];
    }
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("Hamiltonian: potential must be real and finite");
  }
  return v;
}

std::vector<double> wfe_nonlinear_potential(const WaveFunctionFull& psi, const WfeParams& params) {
  if (params.n_particles != psi.n_particles()) throw std::invalid_argument("WfeParams particle count mismatch");
  const double mean = raw_com_moment(psi.amplitudes(), psi.grid(), psi.n_particles(), 1);
  return nonlinear_potential_from_mean(psi.grid(), psi.n_particles(), mean, params);
}

double kinetic_energy(const WaveFunctionFull& psi) {
  require_periodic(psi.grid(), "kinetic_energy");
  const Grid1D& g = psi.grid();
  const auto t = axis_kinetic(g);
  CVector data(psi.amplitudes().begin(), psi.amplitudes().end());
  fft_plan(psi.extents()).forward(data);
  double s = 0.0;
  TensorCursor cur(g.size(), psi.n_particles());
  for (std::size_t flat = 0; flat < data.size(); ++flat, cur.advance()) {
    double e = 0.0;
    for (std::size_t a = 0; a < psi.n_particles(); ++a) e += t[cur.index(a)];
    s += std::norm(data[flat]) * e;
  }
  return s * psi.volume_element() / static_cast<double>(data.size());
}

double potential_energy(const WaveFunctionFull& psi, const Hamiltonian& h) {
  if (h.particle_potential.empty() && h.potential_tensor.empty()) return 0.0;
  const auto v = assemble_potential(h, psi.grid(), psi.n_particles());
  const auto amps = psi.amplitudes();
  double s = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) s += v[i] * std::norm(amps[i]);
  return s * psi.volume_element();
}

double total_energy(const WaveFunctionFull& psi, const Hamiltonian& h) {
  const double wfe = h.wfe ? wfe_direct(psi, *h.wfe) : 0.0;
  return kinetic_energy(psi) + potential_energy(psi, h) + wfe;
}

CVector apply_hamiltonian(const WaveFunctionFull& psi, const Hamiltonian& h) {
  CVector out = apply_kinetic(psi);
  const auto amps = psi.amplitudes();
  if (!h.particle_potential.empty() || !h.potential_tensor.empty()) {
    const auto v = assemble_potential(h, psi.grid(), psi.n_particles());
    for (std::size_t i = 0; i < amps.size(); ++i) out[i] += v[i] * amps[i];
  }
  if (h.wfe) {
    const auto u = wfe_nonlinear_potential(psi, *h.wfe);
    for (std::size_t i = 0; i < amps.size(); ++i) out[i] += u[i] * amps[i];
  }
  return out;
}

// ---- split step -----------------------------------------------------------

SplitStepPropagator::SplitStepPropagator(const Grid1D& grid, std::size_t n_particles, const Hamiltonian& h, double dt)
    : grid_(grid), n_particles_(n_particles), dt_(dt), wfe_(h.wfe) {
  require_periodic(grid, "SplitStepPropagator");
  if (!(dt > 0.0)) throw std::invalid_argument("SplitStepPropagator: dt must be positive");
  if (wfe_ && wfe_->n_particles != n_particles) throw std::invalid_argument("WfeParams particle count mismatch");
  if (!h.particle_potential.empty() || !h.potential_tensor.empty()) {
    potential_ = assemble_potential(h, grid, n_particles);
  }
  const auto t = axis_kinetic(grid);
  axis_kinetic_phase_.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) axis_kinetic_phase_[i] = std::exp(Complex(0.0, -t[i] * dt));
}

void SplitStepPropagator::half_potential_kick(CVector& amps, const std::vector<double>& u) const {
  const double h = 0.5 * dt_;
  const bool has_v = !potential_.empty();
  const bool has_u = !u.empty();
  if (!has_v && !has_u) return;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double e = (has_v ? potential_[i] : 0.0) + (has_u ? u[i] : 0.0);
    amps[i] *= std::exp(Complex(0.0, -e * h));
  }
}

WaveFunctionFull SplitStepPropagator::step(const WaveFunctionFull& psi) const {
  if (psi.n_particles() != n_particles_ || !psi.grid().same_lattice(grid_)) {
    throw std::invalid_argument("SplitStepPropagator: state does not match propagator grid");
  }
  CVector amps(psi.amplitudes().begin(), psi.amplitudes().end());
  std::vector<double> u;
  if (wfe_) {
    u = wfe_nonlinear_potential(psi, *wfe_);
    double umax = 0.0;
    for (double v : u) umax = std::max(umax, std::abs(v));
    if (dt_ * umax >= kStabilityBound) {
      throw StabilityError("split step: dt*max|U| = " + std::to_string(dt_ * umax) + " exceeds " +
                           std::to_string(kStabilityBound));
    }
  }
  half_potential_kick(amps, u);

  const auto& plan = fft_plan(psi.extents());
  plan.forward(amps);
  TensorCursor cur(grid_.size(), n_particles_);
  for (std::size_t flat = 0; flat < amps.size(); ++flat, cur.advance()) {
    Complex ph(1.0, 0.0);
    for (std::size_t a = 0; a < n_particles_; ++a) ph *= axis_kinetic_phase_[cur.index(a)];
    amps[flat] *= ph;
  }
  plan.backward(amps);

  if (wfe_) {
    // The potential kick leaves |psi|^2 unchanged, so this <X> is also the
    // one of the outgoing state.
    const double mean = raw_com_moment(amps, grid_, n_particles_, 1);
    u = nonlinear_potential_from_mean(grid_, n_particles_, mean, *wfe_);
  }
  half_potential_kick(amps, u);
  return psi.with_amplitudes(std::move(amps));
}

WaveFunctionFull step_split(const WaveFunctionFull& psi, const Hamiltonian& h, double dt) {
  return SplitStepPropagator(psi.grid(), psi.n_particles(), h, dt).step(psi);
}

// ---- Crank-Nicolson -------------------------------------------------------

struct CrankNicolsonPropagator::Impl {
  using SpMat = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
  using Vec = Eigen::VectorXcd;

  Grid1D grid;
  std::size_t n_particles;
  std::optional<WfeParams> wfe;
  SpMat base;                    // I + i dt/2 (T + V)
  std::vector<Complex*> diag;    // pointers to the diagonal entries of `work`
  std::vector<Complex> base_diag;
  mutable SpMat work;
  double half_dt;

  Vec solve(const Vec& rhs_state, const std::vector<double>& u, const Vec& guess) const {
    for (std::size_t i = 0; i < base_diag.size(); ++i) {
      *diag[i] = base_diag[i] + Complex(0.0, half_dt * (u.empty() ? 0.0 : u[i]));
    }
    // (I - i dt/2 H) psi = 2 psi - (I + i dt/2 H) psi
    const Vec b = 2.0 * rhs_state - work * rhs_state;
    Eigen::BiCGSTAB<SpMat> solver;
    solver.setTolerance(1e-14);
    solver.setMaxIterations(500);
    solver.compute(work);
    Vec x = solver.solveWithGuess(b, guess);
    const double rel = (work * x - b).norm() / std::max(b.norm(), 1e-300);
    if (rel > 1e-11) {
      throw std::runtime_error("Crank-Nicolson: linear solve stalled at relative residual " + std::to_string(rel));
    }
    return x;
  }
};

CrankNicolsonPropagator::CrankNicolsonPropagator(const Grid1D& grid, std::size_t n_particles, const Hamiltonian& h,
                                                 double dt)
    : impl_(std::make_unique<Impl>(Impl{grid, n_particles, h.wfe, {}, {}, {}, {}, 0.5 * dt})), dt_(dt) {
  if (n_particles < 1 || n_particles > 2) {
    throw std::invalid_argument("CrankNicolsonPropagator: only N = 1 or N = 2 is supported");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("CrankNicolsonPropagator: dt must be positive");
  require_periodic(grid, "CrankNicolsonPropagator");
  if (h.wfe && h.wfe->n_particles != n_particles) throw std::invalid_argument("WfeParams particle count mismatch");

  const std::size_t n = grid.size();
  const std::size_t total = n_particles == 1 ? n : n * n;
  const Eigen::MatrixXd d2 = fourier_derivative_matrix(grid, 2);
  std::vector<double> v(total, 0.0);
  if (!h.particle_potential.empty() || !h.potential_tensor.empty()) v = assemble_potential(h, grid, n_particles);

  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(total * (n_particles * n));
  const Complex ih(0.0, 0.5 * dt);
  std::vector<std::size_t> idx(n_particles);
  for (std::size_t row = 0; row < total; ++row) {
    unflatten_index(row, n, idx);
    for (std::size_t a = 0; a < n_particles; ++a) {
      for (std::size_t j = 0; j < n; ++j) {
        std::size_t col = 0;
        for (std::size_t b = 0; b < n_particles; ++b) col = col * n + (b == a ? j : idx[b]);
        const double t = -0.5 * d2(static_cast<long>(idx[a]), static_cast<long>(j));
        trip.emplace_back(static_cast<int>(row), static_cast<int>(col), ih * t);
      }
    }
    trip.emplace_back(static_cast<int>(row), static_cast<int>(row), Complex(1.0, 0.0) + ih * v[row]);
  }
  impl_->base.resize(static_cast<long>(total), static_cast<long>(total));
  impl_->base.setFromTriplets(trip.begin(), trip.end());
  impl_->base.makeCompressed();
  impl_->work = impl_->base;
  impl_->diag.resize(total);
  impl_->base_diag.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    impl_->diag[i] = &impl_->work.coeffRef(static_cast<long>(i), static_cast<long>(i));
    impl_->base_diag[i] = *impl_->diag[i];
  }
}

CrankNicolsonPropagator::~CrankNicolsonPropagator() = default;
CrankNicolsonPropagator::CrankNicolsonPropagator(CrankNicolsonPropagator&&) noexcept = default;
CrankNicolsonPropagator& CrankNicolsonPropagator::operator=(CrankNicolsonPropagator&&) noexcept = default;

WaveFunctionFull CrankNicolsonPropagator::step(const WaveFunctionFull& psi) const {
  const Impl& m = *impl_;
  if (psi.n_particles() != m.n_particles || !psi.grid().same_lattice(m.grid)) {
    throw std::invalid_argument("CrankNicolsonPropagator: state does not match propagator grid");
  }
  const auto amps = psi.amplitudes();
  const Impl::Vec state = Eigen::Map<const Impl::Vec>(amps.data(), static_cast<long>(amps.size()));

  std::vector<double> u;
  if (m.wfe) u = wfe_nonlinear_potential(psi, *m.wfe);
  Impl::Vec next = m.solve(state, u, state);
  if (!m.wfe) return psi.with_amplitudes(CVector(next.data(), next.data() + next.size()));

  // One Picard correction with U taken at the midpoint.
  const Impl::Vec mid = 0.5 * (state + next);
  const double mean = raw_com_moment(std::span<const Complex>(mid.data(), static_cast<std::size_t>(mid.size())),
                                     m.grid, m.n_particles, 1);
  u = nonlinear_potential_from_mean(m.grid, m.n_particles, mean, *m.wfe);
  next = m.solve(state, u, next);
  return psi.with_amplitudes(CVector(next.data(), next.data() + next.size()));
}

WaveFunctionFull step_reference(const WaveFunctionFull& psi, const Hamiltonian& h, double dt) {
  return CrankNicolsonPropagator(psi.grid(), psi.n_particles(), h, dt).step(psi);
}

// ---- evolution ------------------------------------------------------------

EvolutionRecord observe(const WaveFunctionFull& psi, const Hamiltonian& h, double time) {
  EvolutionRecord r;
  r.time = time;
  r.norm = std::sqrt(norm_squared(psi));
  r.energy_kinetic = kinetic_energy(psi);
  r.energy_potential = potential_energy(psi, h);
  r.com_mean = com_mean(psi);
  r.com_dispersion = com_dispersion(psi);
  r.wfe = h.wfe ? h.wfe->scale() * r.com_dispersion : 0.0;
  return r;
}

Evolution evolve(const WaveFunctionFull& psi0, const Hamiltonian& h, double dt, std::size_t n_steps,
                 std::size_t record_every, const EvolutionObserver& observer, Integrator integrator) {
  if (record_every == 0) throw std::invalid_argument("evolve: record_every must be positive");
  std::function<WaveFunctionFull(const WaveFunctionFull&)> step;
  if (integrator == Integrator::split) {
    step = [prop = SplitStepPropagator(psi0.grid(), psi0.n_particles(), h, dt)](const WaveFunctionFull& p) {
      return prop.step(p);
    };
  } else {
    auto prop = std::make_shared<CrankNicolsonPropagator>(psi0.grid(), psi0.n_particles(), h, dt);
    step = [prop](const WaveFunctionFull& p) { return prop->step(p); };
  }
  Evolution out{{}, psi0};
  auto record = [&](std::size_t step) {
    const auto r = observe(out.final_state, h, static_cast<double>(step) * dt);
    if (std::abs(r.norm - 1.0) > kNormDriftLimit) {
      throw NormDriftError("evolve: norm drifted to " + std::to_string(r.norm) + " at step " + std::to_string(step));
    }
    out.records.push_back(r);
    if (observer) observer(r, out.final_state);
  };
  record(0);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    out.final_state = step(out.final_state);
    if (s % record_every == 0 || s == n_steps) record(s);
  }
  return out;
}

// ---- discrete action ------------------------------------------------------

namespace {

WaveFunctionFull midpoint(const WaveFunctionFull& a, const WaveFunctionFull& b) {
  CVector m(a.size());
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (x[i] + y[i]);
  return a.with_amplitudes(std::move(m));
}

double energy_functional(const WaveFunctionFull& psi, const Hamiltonian& h) {
  const CVector tpsi = apply_kinetic(psi);
  const auto amps = psi.amplitudes();
  Complex t(0.0, 0.0);
  for (std::size_t i = 0; i < amps.size(); ++i) t += std::conj(amps[i]) * tpsi[i];
  double e = t.real() * psi.volume_element() + potential_energy(psi, h);
  if (h.wfe) e += raw_wfe(psi, *h.wfe);
  return e;
}

void check_trajectory(std::span<const WaveFunctionFull> traj) {
  if (traj.size() < 3) throw std::invalid_argument("discrete action needs at least three time slices");
}

}  // namespace

double discrete_action(std::span<const WaveFunctionFull> traj, const Hamiltonian& h, double dt) {
  if (traj.size() < 2) throw std::invalid_argument("discrete action needs at least two time slices");
  double a = 0.0;
  for (std::size_t n = 0; n + 1 < traj.size(); ++n) {
    a += dt * energy_functional(midpoint(traj[n], traj[n + 1]), h);
    a -= inner_product(traj[n + 1], traj[n]).imag();
  }
  return a;
}

CVector action_gradient(std::span<const WaveFunctionFull> traj, const Hamiltonian& h, double dt, std::size_t n) {
  check_trajectory(traj);
  if (n == 0 || n + 1 >= traj.size()) throw std::invalid_argument("action_gradient: slice must be interior");
  const auto plus = midpoint(traj[n], traj[n + 1]);
  const auto minus = midpoint(traj[n - 1], traj[n]);
  const CVector hp = apply_hamiltonian(plus, h);
  const CVector hm = apply_hamiltonian(minus, h);
  const auto next = traj[n + 1].amplitudes();
  const auto prev = traj[n - 1].amplitudes();
  CVector g(next.size());
  const Complex half_i(0.0, 0.5);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = -half_i * (next[i] - prev[i]) + 0.5 * dt * (hp[i] + hm[i]);
  }
  return g;
}

double variational_residual(std::span<const WaveFunctionFull> traj, const Hamiltonian& h, double dt) {
  check_trajectory(traj);
  double worst = 0.0;
  const double vol = traj[0].volume_element();
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    const CVector g = action_gradient(traj, h, dt, n);
    const auto next = traj[n + 1].amplitudes();
    const auto prev = traj[n - 1].amplitudes();
    double gn = 0.0, dn = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      gn += std::norm(g[i]);
      dn += std::norm(0.5 * (next[i] - prev[i]));
    }
    worst = std::max(worst, std::sqrt(gn * vol) / std::sqrt(dn * vol));
  }
  return worst;
}

}  // namespace wfelab
