#include "tfarm/matrix.hpp"

#include <cmath>
#include <string>

#include "tfarm/errors.hpp"

namespace tfarm {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw InvalidArgument("Matrix: non-finite fill value");
}

Matrix Matrix::from_row_major(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw InvalidArgument("Matrix: " + std::to_string(data.size()) + " entries for a " +
                          std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (!std::isfinite(data[k])) {
      throw InvalidArgument("Matrix: non-finite entry at (" + std::to_string(k / cols) + ", " +
                            std::to_string(k % cols) + ")");
    }
  }
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::column(std::size_t j) const {
  Vector out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

}  // namespace tfarm
