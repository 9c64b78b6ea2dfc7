#pragma once

#include "wfelab/grid.hpp"
#include "wfelab/observables.hpp"
#include "wfelab/wavefunction.hpp"

namespace wfelab {

/// beta = sqrt(w N^2 / 2), the coupling of the CoM density to the Macro-fields.
double macro_coupling(const WfeParams& params);

/// Stationary Macro-fields for phi'' = s with source s = -beta h:
///   phi_minus(x) = int_{-inf}^x (x - y) s(y) dy   (vanishes at -inf)
///   phi_plus(x)  = int_x^{inf}  (y - x) s(y) dy   (vanishes at +inf)
struct MacroFieldSolution {
  RealField phi_minus;
  RealField phi_plus;
  RealField source;
  double beta = 0.0;
};

/// Cumulative trapezoid quadrature, O(n). Throws TailMassError when more than
/// 1e-8 of the mass of h sits within 5 bins of either edge.
MacroFieldSolution solve_poisson_pair(const RealField& h, const WfeParams& params);

/// Terms of the Macro-field Lagrangian evaluated at the stationary fields.
struct MacroLagrangian {
  /// beta * int h (phi_minus + phi_plus)
  double interaction = 0.0;
  /// -(1/2) int (phi')^2 summed over both fields, integrated by parts to
  /// (1/2) int phi phi'' (boundary terms dropped: phi_minus grows linearly).
  double gradient = 0.0;
  /// interaction + gradient
  double stationary_value = 0.0;
  /// -2 * stationary_value = beta^2 int int h h |x - y|, the induced energy
  /// with kernel K = |x - y|.
  double effective_energy = 0.0;
};

MacroLagrangian lagrangian_value(const RealField& h, const MacroFieldSolution& solution, const WfeParams& params);
/// Computes h from psi and requires it to live on the solution's grid.
MacroLagrangian lagrangian_value(const WaveFunctionFull& psi, const MacroFieldSolution& solution,
                                 const WfeParams& params);
MacroLagrangian lagrangian_value(const ProductState& psi, const MacroFieldSolution& solution,
                                 const WfeParams& params);
MacroLagrangian lagrangian_value(const ProductSuperposition& psi, const MacroFieldSolution& solution,
                                 const WfeParams& params);

/// phi(x) = -(1/2) int_x^inf (y - x)^2 s(y) dy with s = -beta h, so that
/// phi''' = s. Throws std::runtime_error when the fourth-order D^3 residual
/// exceeds 1e-3 relative on the interior.
RealField solve_third_order(const RealField& h, const WfeParams& params);

/// Raw one-sided quadratic-kernel integrals of s = -beta h:
///   left(x)  = int_{-inf}^x (x - y)^2 s(y) dy,  right(x) = int_x^inf (y - x)^2 s(y) dy.
struct QuadraticKernelFields {
  RealField left;
  RealField right;
  double beta = 0.0;
};

QuadraticKernelFields quadratic_kernel_fields(const RealField& h, const WfeParams& params);

/// -beta int h (left + right) = beta^2 int int h h (x - y)^2.
double quadratic_kernel_energy(const RealField& h, const WfeParams& params);

/// ||D^order f - target|| / ||target|| over the interior, with the bounded
/// fourth-order difference operator; points within the stencil reach of the
/// edges are excluded.
double interior_residual(const RealField& field, const RealField& target, int order);

struct BoundaryReport {
  /// |phi_minus(x_min)| / max|phi_minus|, mirrored for phi_plus at x_max.
  double minus_left_value = 0.0;
  double plus_right_value = 0.0;
  /// Far-edge slope minus the analytic tail slope (+int s for phi_minus,
  /// -int s for phi_plus).
  double minus_right_slope_error = 0.0;
  double plus_left_slope_error = 0.0;

  bool passed(double value_tol = 1e-6, double slope_tol = 1e-6) const;
};

BoundaryReport check_boundary_conditions(const MacroFieldSolution& solution);

}  // namespace wfelab
