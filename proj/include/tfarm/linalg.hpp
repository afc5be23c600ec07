#pragma once
// Dense products, norms and the Cholesky factorization. Inner loops go through
// tfarm::kernels.

#include <span>

#include "tfarm/matrix.hpp"

namespace tfarm::linalg {

/// A * B
Matrix multiply(const Matrix& a, const Matrix& b);
/// A^T * B
Matrix multiply_at_b(const Matrix& a, const Matrix& b);
/// A * B^T
Matrix multiply_a_bt(const Matrix& a, const Matrix& b);
/// A * A^T, exactly symmetric.
Matrix gram_rows(const Matrix& a);

/// A * x
Vector matvec(const Matrix& a, std::span<const double> x);
/// A^T * x
Vector matvec_t(const Matrix& a, std::span<const double> x);

Matrix select_rows(const Matrix& a, std::span<const std::size_t> rows);
Vector select(std::span<const double> v, std::span<const std::size_t> idx);

double norm1(std::span<const double> v) noexcept;
double norm2(std::span<const double> v) noexcept;
double norm_inf(std::span<const double> v) noexcept;
double max_abs(const Matrix& a) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs_diff(std::span<const double> a, std::span<const double> b);

/// Largest |a_ij - a_ji| relative to max|a|; 0 for a zero matrix.
double asymmetry(const Matrix& a);

void require_finite(std::span<const double> v, const char* what);
void require_finite(const Matrix& a, const char* what);

/// Lower-triangular L with L L^T = a. Throws NumericalError when a pivot falls
/// to 1e-12 or below (matrix not numerically positive definite).
Matrix cholesky(const Matrix& a);

/// Symmetric Toeplitz matrix with entries rho^|i-j|.
Matrix toeplitz(std::size_t p, double rho);

}  // namespace tfarm::linalg
