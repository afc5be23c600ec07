#include "tfarm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"

namespace tfarm::linalg {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidArgument(msg);
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "multiply: " + shape(a) + " * " + shape(b));
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik != 0.0) kernels::axpy(aik, b.row(k), ci);
    }
  }
  return c;
}

Matrix multiply_at_b(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "multiply_at_b: " + shape(a) + "^T * " + shape(b));
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki != 0.0) kernels::axpy(aki, bk, c.row(i));
    }
  }
  return c;
}

Matrix multiply_a_bt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "multiply_a_bt: " + shape(a) + " * " + shape(b) + "^T");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = kernels::dot(a.row(i), b.row(j));
  return c;
}

Matrix gram_rows(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = kernels::dot(a.row(i), a.row(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), "matvec: " + shape(a) + " * vector of " + std::to_string(x.size()));
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dot(a.row(i), x);
  return y;
}

Vector matvec_t(const Matrix& a, std::span<const double> x) {
  require(a.rows() == x.size(),
          "matvec_t: " + shape(a) + "^T * vector of " + std::to_string(x.size()));
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (x[i] != 0.0) kernels::axpy(x[i], a.row(i), y);
  }
  return y;
}

Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] < a.rows(), "select_rows: row index " + std::to_string(rows[r]) +
                                    " out of range for " + shape(a));
    std::copy_n(a.row(rows[r]).begin(), a.cols(), out.row(r).begin());
  }
  return out;
}

Vector select(std::span<const double> v, std::span<const std::size_t> idx) {
  Vector out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] < v.size(), "select: index out of range");
    out[r] = v[idx[r]];
  }
  return out;
}

double norm1(std::span<const double> v) noexcept {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

double norm2(std::span<const double> v) noexcept { return std::sqrt(kernels::sum_squares(v)); }

double norm_inf(std::span<const double> v) noexcept { return kernels::max_abs(v); }

double max_abs(const Matrix& a) noexcept { return kernels::max_abs(a.values()); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "max_abs_diff: length mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "max_abs_diff: " + shape(a) + " vs " + shape(b));
  return max_abs_diff(a.values(), b.values());
}

double asymmetry(const Matrix& a) {
  require(a.rows() == a.cols(), "asymmetry: matrix is " + shape(a));
  const double scale = max_abs(a);
  if (scale == 0.0) return 0.0;
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) m = std::max(m, std::fabs(a(i, j) - a(j, i)));
  return m / scale;
}

void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw InvalidArgument(std::string(what) + ": non-finite value at index " + std::to_string(i));
    }
  }
}

void require_finite(const Matrix& a, const char* what) { require_finite(a.values(), what); }

Matrix cholesky(const Matrix& a) {
  require(a.rows() == a.cols(), "cholesky: matrix is " + shape(a));
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto lj = l.row(j).first(j);
    const double pivot = a(j, j) - kernels::sum_squares(lj);
    if (!(pivot > 1e-12)) {
      throw NumericalError("cholesky: pivot " + std::to_string(pivot) + " at column " +
                           std::to_string(j) + "; matrix is not positive definite");
    }
    const double d = std::sqrt(pivot);
    l(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - kernels::dot(l.row(i).first(j), lj)) / d;
    }
  }
  return l;
}

Matrix toeplitz(std::size_t p, double rho) {
  Matrix t(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      t(i, j) = std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
  return t;
}

}  // namespace tfarm::linalg
