#pragma once

#include <cstddef>
#include <vector>

namespace wfelab {

// Walks a row-major tensor with `rank` axes of equal extent in flat order,
// tracking per-axis indices and their sum.
class TensorCursor {
 public:
  TensorCursor(std::size_t extent, std::size_t rank) : extent_(extent), idx_(rank, 0) {}

  void advance() {
    for (std::size_t a = idx_.size(); a-- > 0;) {
      if (++idx_[a] < extent_) {
        ++sum_;
        return;
      }
      sum_ -= extent_ - 1;
      idx_[a] = 0;
    }
  }

  std::size_t index(std::size_t axis) const { return idx_[axis]; }
  std::size_t index_sum() const { return sum_; }
  const std::vector<std::size_t>& indices() const { return idx_; }

 private:
  std::size_t extent_;
  std::vector<std::size_t> idx_;
  std::size_t sum_ = 0;
};

}  // namespace wfelab
