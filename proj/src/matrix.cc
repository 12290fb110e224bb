#include "fedids/matrix.h"

#include <algorithm>
#include <string>
#include <utility>

#include "fedids/error.h"

namespace fedids {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) +
                     " values, expected " + std::to_string(rows * cols));
  }
}

Matrix Matrix::SelectRows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw ShapeError("row index " + std::to_string(indices[i]) +
                       " out of range");
    }
    std::ranges::copy(row(indices[i]), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::RowRange(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) {
    throw ShapeError("row range out of bounds");
  }
  std::vector<double> data(data_.begin() + begin * cols_,
                           data_.begin() + end * cols_);
  return Matrix(end - begin, cols_, std::move(data));
}

std::vector<double> Matrix::Column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

}  // namespace fedids
