#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wfelab/observables.hpp"
#include "wfelab/wavefunction.hpp"

namespace wfelab {

class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NormDriftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// H = -(1/2) sum_k d^2/dx_k^2 + V + U_wfe in units hbar = m = 1.
struct Hamiltonian {
  /// Single-particle table V1(x) applied to every coordinate; empty means zero.
  std::vector<double> particle_potential;
  /// Full V(x_1, ..., x_N) over the product grid; empty means none.
  std::vector<double> potential_tensor;
  std::optional<WfeParams> wfe;
};

/// Diagonal of V over the product grid (zero vector when H has no potential).
std::vector<double> assemble_potential(const Hamiltonian& h, const Grid1D& grid, std::size_t n_particles);

/// U = w N^2 (X^2 - 2<X> X), the functional derivative of w N^2 S_N with
/// respect to psi*, divided by psi. The constant w N^2 <X>^2 is a global phase
/// and is left out.
std::vector<double> wfe_nonlinear_potential(const WaveFunctionFull& psi, const WfeParams& params);

double kinetic_energy(const WaveFunctionFull& psi);
double potential_energy(const WaveFunctionFull& psi, const Hamiltonian& h);
/// kinetic + <V> + WFE.
double total_energy(const WaveFunctionFull& psi, const Hamiltonian& h);

/// Strang splitting with Fourier kinetic step. The WFE potential is frozen at
/// the incoming state for the first half step and refreshed once from the
/// post-kinetic state for the second.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const Grid1D& grid, std::size_t n_particles, const Hamiltonian& h, double dt);

  /// Throws StabilityError when dt * max|U| >= 0.5.
  WaveFunctionFull step(const WaveFunctionFull& psi) const;
  double dt() const { return dt_; }

 private:
  void half_potential_kick(CVector& amps, const std::vector<double>& u) const;

  Grid1D grid_;
  std::size_t n_particles_;
  double dt_;
  std::vector<double> potential_;
  std::optional<WfeParams> wfe_;
  std::vector<Complex> axis_kinetic_phase_;
};

WaveFunctionFull step_split(const WaveFunctionFull& psi, const Hamiltonian& h, double dt);

/// Crank-Nicolson on the full discrete Hamiltonian (same Fourier kinetic
/// operator as the split-step path). U is frozen at the step start, then one
/// Picard correction uses U of the midpoint (psi_n + psi*)/2. N <= 2.
class CrankNicolsonPropagator {
 public:
  CrankNicolsonPropagator(const Grid1D& grid, std::size_t n_particles, const Hamiltonian& h, double dt);
  ~CrankNicolsonPropagator();
  CrankNicolsonPropagator(CrankNicolsonPropagator&&) noexcept;
  CrankNicolsonPropagator& operator=(CrankNicolsonPropagator&&) noexcept;

  WaveFunctionFull step(const WaveFunctionFull& psi) const;
  double dt() const { return dt_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double dt_;
};

WaveFunctionFull step_reference(const WaveFunctionFull& psi, const Hamiltonian& h, double dt);

struct EvolutionRecord {
  double time = 0.0;
  double norm = 0.0;
  double energy_kinetic = 0.0;
  double energy_potential = 0.0;
  double wfe = 0.0;
  double com_mean = 0.0;
  double com_dispersion = 0.0;

  double energy_total() const { return energy_kinetic + energy_potential + wfe; }
};

EvolutionRecord observe(const WaveFunctionFull& psi, const Hamiltonian& h, double time);

struct Evolution {
  std::vector<EvolutionRecord> records;
  WaveFunctionFull final_state;
};

using EvolutionObserver = std::function<void(const EvolutionRecord&, const WaveFunctionFull&)>;

enum class Integrator { split, reference };

/// Repeated steps (split by default), recording at step 0, every
/// `record_every` steps and at the end. Throws NormDriftError when
/// |norm - 1| exceeds 1e-6.
Evolution evolve(const WaveFunctionFull& psi0, const Hamiltonian& h, double dt, std::size_t n_steps,
                 std::size_t record_every, const EvolutionObserver& observer = {},
                 Integrator integrator = Integrator::split);

// Discrete action of the Schroedinger Lagrangian along a time-sampled
// trajectory, with midpoint states psi_{n+1/2} = (psi_n + psi_{n+1})/2:
//   A = sum_n [ dt * E(psi_{n+1/2}) - Im <psi_{n+1}|psi_n> ],
// E = <T + V> + WFE. Its Euler-Lagrange equations are the implicit midpoint
// rule, i.e. Crank-Nicolson for the linear part.
double discrete_action(std::span<const WaveFunctionFull> trajectory, const Hamiltonian& h, double dt);

/// dA/dpsi_n^* for an interior slice n (Wirtinger derivative per dx^N).
CVector action_gradient(std::span<const WaveFunctionFull> trajectory, const Hamiltonian& h, double dt,
                        std::size_t n);

/// max over interior n of ||dA/dpsi_n^*|| / ||(psi_{n+1} - psi_{n-1})/2||.
double variational_residual(std::span<const WaveFunctionFull> trajectory, const Hamiltonian& h, double dt);

/// (H psi) including the WFE potential evaluated at psi itself.
CVector apply_hamiltonian(const WaveFunctionFull& psi, const Hamiltonian& h);

}  // namespace wfelab
