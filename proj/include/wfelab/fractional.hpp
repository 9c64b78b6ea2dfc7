#pragma once

#include <string>
#include <vector>

#include "wfelab/grid.hpp"
#include "wfelab/linear_operator.hpp"

namespace wfelab {

enum class FdKind { riemann_liouville, caputo };
enum class FdSide { left_infinite, right_infinite };

std::string to_string(FdKind kind);
std::string to_string(FdSide side);

/// Fractional derivative of order alpha in (1, 2] built from the integral
/// I^mu, mu = 2 - alpha, with kernel (X - Y)^(mu-1) / Gamma(mu):
///   Riemann-Liouville  D^2 I^mu f   (second difference after integrating)
///   Caputo             I^mu f''     (integral of the Fourier second derivative)
/// Left-sided operators integrate from the left grid edge, right-sided ones
/// from the right edge; the right matrix is the index-reversed left matrix.
struct FractionalOperator {
  FdKind kind;
  FdSide side;
  double order;
  LinearGridOperator op;

  const Grid1D& grid() const { return op.grid(); }
  const Eigen::MatrixXd& matrix() const { return op.matrix(); }

  /// Matrix product after checking that f is negligible (below 1e-12 of its
  /// peak) at the edge(s) the truncated integral or periodic embedding rely
  /// on. Throws TailMassError otherwise.
  RealField apply(const RealField& f) const;
  /// Whether apply() would accept f.
  bool accepts(const RealField& f) const;
};

inline constexpr double kFdTailTolerance = 1e-12;

/// Product-integration weights of I^mu on a uniform grid starting at index 0:
/// the kernel is integrated exactly against the piecewise-linear interpolant
/// of the operand. mu = 0 gives the identity.
Eigen::MatrixXd left_integral_weights(std::size_t n, double dx, double mu);

/// Throws std::invalid_argument unless 1 < order <= 2 and the grid is bounded.
FractionalOperator build_fd(FdKind kind, FdSide side, double order, const Grid1D& grid);

struct TransposeReport {
  double lhs = 0.0;  // <RL_left f, g>
  double rhs = 0.0;  // <f, Caputo_right g>
  double scale = 0.0;
  double relative_difference = 0.0;
  bool skipped = false;
  std::string warning;
  bool passed = false;
};

/// <D_RL,left^(3/2) f, g> against <f, D_C,right^(3/2) g>, relative to
/// ||D f|| ||g||. Inputs with tails at the grid edges skip the check.
TransposeReport transpose_identity_check(const RealField& f, const RealField& g, double tolerance = 1e-4);

/// ||A phi - target|| / ||target||.
double relative_residual(const std::vector<double>& a_phi, const std::vector<double>& target);

/// Fourier third derivative on the periodic embedding.
std::vector<double> third_derivative(const RealField& phi);

struct CompositionReport {
  std::string candidate;
  std::vector<double> residuals;
  double min_residual = 0.0;
  double threshold = 0.1;
  bool passed = false;  // min residual above threshold
};

/// r(phi) = ||Omega^t Omega phi - phi'''|| / ||phi'''|| per test field.
CompositionReport composition_refutation(const FractionalOperator& omega, const std::vector<RealField>& test_set,
                                         double threshold = 0.1);

/// ||Omega Omega phi - phi'''|| / ||phi'''||.
double self_composition_residual(const FractionalOperator& omega, const RealField& phi);

/// Standard test fields on `grid`: Gaussian, Gaussian derivative, sech.
std::vector<RealField> standard_test_set(const Grid1D& grid);

struct AntisymmetryReport {
  double value = 0.0;  // int phi phi''' dx
  double scale = 0.0;  // ||phi|| ||phi'''||
  bool passed = false;
};

AntisymmetryReport antisymmetry_witness(const RealField& phi, double relative_tolerance = 1e-8);

struct MomentCollapseReport {
  std::vector<double> f1;
  std::vector<double> f2;
  std::vector<double> output1;
  std::vector<double> output2;
  /// max |output1 - output2| / max_x sum_y |g(x,y)| (|f1| + |f2|) dy
  double output_difference = 0.0;
  double density_sup_difference = 0.0;
  double output_tolerance = 1e-8;
  double density_threshold = 0.1;
  bool passed = false;
};

/// Pair of densities with equal discrete m0, m1, m2: a unit Gaussian and a
/// three-component Gaussian mixture (centers -spread, 0, spread; width
/// `width`) whose weights solve the 3x3 moment system. Throws
/// std::invalid_argument when the system is singular or a weight is negative.
std::pair<std::vector<double>, std::vector<double>> moment_matched_pair(const Grid1D& grid, double spread = 1.5,
                                                                        double width = 0.3);

/// g(x, y) = op_x (x - y)^2 applied to a moment-matched pair.
MomentCollapseReport moment_collapse_witness(const LinearGridOperator& op, double output_tolerance = 1e-8,
                                             double density_threshold = 0.1);
MomentCollapseReport moment_collapse_witness(const LinearGridOperator& op, const std::vector<double>& f1,
                                             const std::vector<double>& f2, double output_tolerance = 1e-8,
                                             double density_threshold = 0.1);

/// Central antisymmetric third difference (f2 - 2 f1 + 2 f-1 - f-2) / (2 dx^3).
LinearGridOperator antisymmetric_third_difference(const Grid1D& grid);
/// Three-point second difference.
LinearGridOperator second_difference(const Grid1D& grid);

struct DropoutReport {
  /// max |(M + M^t)_ij| over interior rows for Q(phi) = phi^t M phi, M = D^3.
  double third_order_gradient_max = 0.0;
  /// Same for the contrast Q = phi^t D^2 phi.
  double second_order_gradient_max = 0.0;
  double inverse_dx2 = 0.0;
  /// Central finite difference of Q along a random direction against
  /// v^t (M + M^t) phi, relative, for the contrast form.
  double directional_error = 0.0;
  bool passed = false;
};

DropoutReport euler_lagrange_dropout_check(const Grid1D& grid, unsigned seed = 7);

}  // namespace wfelab
