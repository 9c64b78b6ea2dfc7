#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "wfelab/grid.hpp"

namespace wfelab {

/// Dense matrix acting on fields sampled on one grid.
class LinearGridOperator {
 public:
  LinearGridOperator(Grid1D grid, Eigen::MatrixXd matrix);

  static LinearGridOperator identity(const Grid1D& grid);
  /// Centered stencil scaled by `scale`, zero beyond the edges.
  static LinearGridOperator from_stencil(const Grid1D& grid, std::span<const double> stencil, double scale);

  const Grid1D& grid() const { return grid_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  std::size_t size() const { return grid_.size(); }

  std::vector<double> apply(std::span<const double> f) const;
  RealField apply(const RealField& f) const;

  LinearGridOperator transpose() const;
  /// (*this) after `inner`.
  LinearGridOperator compose(const LinearGridOperator& inner) const;
  /// J A J with J the index reversal i -> n-1-i.
  LinearGridOperator flipped() const;

 private:
  Grid1D grid_;
  Eigen::MatrixXd matrix_;
};

}  // namespace wfelab
