#include "tmsv/counts.hpp"

#include <algorithm>

#include "tmsv/errors.hpp"

namespace tmsv {

CountMatrix::CountMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), cells_(rows * cols, 0)
{
}

std::uint64_t CountMatrix::at(std::size_t n, std::size_t m) const
{
  if (n >= rows_ || m >= cols_)
    return 0;
  return cells_[n * cols_ + m];
}

void CountMatrix::grow(std::size_t rows, std::size_t cols)
{
  if (rows <= rows_ && cols <= cols_)
    return;
  const std::size_t new_rows = std::max(rows, rows_);
  const std::size_t new_cols = std::max(cols, cols_);
  std::vector<std::uint64_t> next(new_rows * new_cols, 0);
  for (std::size_t n = 0; n < rows_; ++n)
    std::copy_n(cells_.begin() + n * cols_, cols_, next.begin() + n * new_cols);
  cells_ = std::move(next);
  rows_ = new_rows;
  cols_ = new_cols;
}

void CountMatrix::add(std::size_t n, std::size_t m, std::uint64_t k)
{
  grow(n + 1, m + 1);
  cells_[n * cols_ + m] += k;
}

void CountMatrix::merge(const CountMatrix& other)
{
  grow(other.rows_, other.cols_);
  for (std::size_t n = 0; n < other.rows_; ++n)
    for (std::size_t m = 0; m < other.cols_; ++m)
      cells_[n * cols_ + m] += other.cells_[n * other.cols_ + m];
}

std::uint64_t CountMatrix::total() const
{
  std::uint64_t acc = 0;
  for (auto c : cells_)
    acc += c;
  return acc;
}

std::size_t CountMatrix::occupied_cells() const
{
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](auto c) { return c > 0; }));
}

JointPND CountMatrix::frequencies(unsigned min_n_max) const
{
  std::size_t extent = 1;
  for (std::size_t n = 0; n < rows_; ++n)
    for (std::size_t m = 0; m < cols_; ++m)
      if (at(n, m) > 0)
        extent = std::max({extent, n + 1, m + 1});
  const std::size_t size = std::max<std::size_t>(extent, min_n_max + 1);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  const std::uint64_t tot = total();
  if (tot == 0)
    return JointPND(std::move(p));
  for (std::size_t n = 0; n < std::min(rows_, extent); ++n)
    for (std::size_t m = 0; m < std::min(cols_, extent); ++m)
      p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
          static_cast<double>(at(n, m)) / static_cast<double>(tot);
  return JointPND(std::move(p));
}

bool CountMatrix::operator==(const CountMatrix& other) const
{
  const std::size_t r = std::max(rows_, other.rows_);
  const std::size_t c = std::max(cols_, other.cols_);
  for (std::size_t n = 0; n < r; ++n)
    for (std::size_t m = 0; m < c; ++m)
      if (at(n, m) != other.at(n, m))
        return false;
  return true;
}

} // namespace tmsv
