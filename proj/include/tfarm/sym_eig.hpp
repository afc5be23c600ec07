#pragma once

#include <cstddef>
#include <optional>

#include "tfarm/matrix.hpp"

namespace tfarm {

struct SymEigResult {
  /// Non-increasing.
  Vector values;
  /// n x k, column i is the unit eigenvector for values[i]. Each column's entry
  /// of largest magnitude is positive (first index wins ties).
  Matrix vectors;
  std::size_t sweeps = 0;
};

struct SymEigOptions {
  /// Stop once the off-diagonal Frobenius norm is at most this times ||A||_F.
  double off_tolerance = 1e-12;
  std::size_t max_sweeps = 100;
};

/// Full symmetric eigendecomposition by cyclic Jacobi rotations, truncated to
/// the leading `top_k` pairs when given.
///
/// Throws InvalidArgument for a non-square input, asymmetry above 1e-10
/// (relative to max|a|) or a non-finite entry, and NumericalError when the
/// sweep cap is hit before the off-diagonal mass falls below tolerance.
SymEigResult sym_eig(const Matrix& a, std::optional<std::size_t> top_k = std::nullopt,
                     const SymEigOptions& options = {});

}  // namespace tfarm
