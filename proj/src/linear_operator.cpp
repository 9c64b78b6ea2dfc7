#include "wfelab/linear_operator.hpp"

#include <stdexcept>

#include "wfelab/spectral.hpp"

namespace wfelab {

LinearGridOperator::LinearGridOperator(Grid1D grid, Eigen::MatrixXd matrix)
    : grid_(grid), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(grid_.size());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw std::invalid_argument("LinearGridOperator: matrix shape does not match the grid");
  }
}

LinearGridOperator LinearGridOperator::identity(const Grid1D& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  return LinearGridOperator(grid, Eigen::MatrixXd::Identity(n, n));
}

LinearGridOperator LinearGridOperator::from_stencil(const Grid1D& grid, std::span<const double> stencil,
                                                    double scale) {
  return LinearGridOperator(grid, stencil_matrix(grid.size(), stencil, scale));
}

std::vector<double> LinearGridOperator::apply(std::span<const double> f) const {
  if (f.size() != grid_.size()) throw std::invalid_argument("LinearGridOperator::apply: size mismatch");
  const Eigen::Map<const Eigen::VectorXd> in(f.data(), static_cast<Eigen::Index>(f.size()));
  const Eigen::VectorXd out = matrix_ * in;
  return std::vector<double>(out.data(), out.data() + out.size());
}

RealField LinearGridOperator::apply(const RealField& f) const {
  if (!f.grid.same_lattice(grid_)) throw std::invalid_argument("LinearGridOperator::apply: grid mismatch");
  return RealField(grid_, apply(std::span<const double>(f.values)));
}

LinearGridOperator LinearGridOperator::transpose() const { return LinearGridOperator(grid_, matrix_.transpose()); }

LinearGridOperator LinearGridOperator::compose(const LinearGridOperator& inner) const {
  if (!inner.grid_.same_lattice(grid_)) throw std::invalid_argument("LinearGridOperator::compose: grid mismatch");
  return LinearGridOperator(grid_, matrix_ * inner.matrix_);
}

LinearGridOperator LinearGridOperator::flipped() const {
  return LinearGridOperator(grid_, matrix_.colwise().reverse().rowwise().reverse());
}

}  // namespace wfelab
