#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "oracles.hpp"
#include "tfarm/matrix.hpp"

namespace testing {

inline tfarm::Matrix to_matrix(const oracle::Mat& a) {
  tfarm::Matrix m(a.size(), a.empty() ? 0 : a[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) m(i, j) = a[i][j];
  return m;
}

inline oracle::Mat to_mat(const tfarm::Matrix& m) {
  oracle::Mat a(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) a[i][j] = m(i, j);
  return a;
}

inline double max_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return a.size() == b.size() ? d : INFINITY;
}

inline double max_diff(const tfarm::Matrix& a, const oracle::Mat& b) {
  if (a.rows() != b.size()) return INFINITY;
  double d = 0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::fabs(a(i, j) - b[i][j]));
  return d;
}

}  // namespace testing
