#pragma once

#include <cstdint>
#include <vector>

#include "tmsv/state.hpp"

namespace tmsv {

/// Integer count matrix c[n][m] over detected (signal, idler) counts.
class CountMatrix
{
public:
  CountMatrix() = default;
  CountMatrix(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::uint64_t at(std::size_t n, std::size_t m) const;
  /// Adds `k` events to cell (n, m), growing the matrix as needed.
  void add(std::size_t n, std::size_t m, std::uint64_t k = 1);
  void merge(const CountMatrix& other);

  std::uint64_t total() const;
  /// Number of non-zero cells.
  std::size_t occupied_cells() const;
  bool empty() const { return total() == 0; }

  /// Square frequency matrix normalized by total(); n_max covers every non-zero cell
  /// and is at least `min_n_max`.
  JointPND frequencies(unsigned min_n_max = 0) const;

  bool operator==(const CountMatrix& other) const;

private:
  void grow(std::size_t rows, std::size_t cols);

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint64_t> cells_;
};

} // namespace tmsv
