#include "tfarm/sym_eig.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tfarm/errors.hpp"
#include "tfarm/kernels.hpp"
#include "tfarm/linalg.hpp"

namespace tfarm {
namespace {

double off_diagonal_norm(const Matrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = i + 1; j < w.cols(); ++j) s += w(i, j) * w(i, j);
  return std::sqrt(2.0 * s);
}

// Rotates the (p, q) plane so that w(p, q) becomes zero. Rows p and q are rotated
// with the vector kernel; symmetry then gives the rotated columns for free.
// `vt` holds eigenvectors as rows.
void annihilate(Matrix& w, Matrix& vt, std::size_t p, std::size_t q) {
  const double apq = w(p, q);
  const double app = w(p, p);
  const double aqq = w(q, q);
  const double theta = (aqq - app) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  kernels::rotate(w.row(p), w.row(q), c, s);
  w(p, p) = app - t * apq;
  w(q, q) = aqq + t * apq;
  w(p, q) = 0.0;
  w(q, p) = 0.0;
  const std::size_t n = w.rows();
  for (std::size_t k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    w(k, p) = w(p, k);
    w(k, q) = w(q, k);
  }
  kernels::rotate(vt.row(p), vt.row(q), c, s);
}

}  // namespace

SymEigResult sym_eig(const Matrix& a, std::optional<std::size_t> top_k,
                     const SymEigOptions& options) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument("sym_eig: matrix is " + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + ", expected square");
  }
  linalg::require_finite(a, "sym_eig");
  if (const double asym = linalg::asymmetry(a); asym > 1e-10) {
    std::ostringstream msg;
    msg << "sym_eig: relative asymmetry " << asym << " exceeds 1e-10";
    throw InvalidArgument(msg.str());
  }
  const std::size_t n = a.rows();
  const std::size_t k = std::min(top_k.value_or(n), n);

  // Work on the exactly symmetrised copy.
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) w(i, j) = 0.5 * (a(i, j) + a(j, i));
  Matrix vt = Matrix::identity(n);

  const double frob = linalg::norm2(w.values());
  const double target = options.off_tolerance * frob;
  std::size_t sweep = 0;
  double off = off_diagonal_norm(w);
  while (off > target && off > 0.0) {
    if (sweep == options.max_sweeps) {
      std::ostringstream msg;
      msg << "sym_eig: no convergence after " << sweep << " sweeps (off-diagonal norm " << off
          << ", target " << target << ")";
      throw NumericalError(msg.str());
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (apq == 0.0) continue;
        // Once the sweep has settled, entries negligible against both diagonal
        // entries are dropped instead of rotated.
        const double g = 100.0 * std::fabs(apq);
        if (sweep > 4 && std::fabs(w(p, p)) + g == std::fabs(w(p, p)) &&
            std::fabs(w(q, q)) + g == std::fabs(w(q, q))) {
          w(p, q) = 0.0;
          w(q, p) = 0.0;
          continue;
        }
        annihilate(w, vt, p, q);
      }
    }
    off = off_diagonal_norm(w);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return w(i, i) > w(j, j); });

  SymEigResult out;
  out.sweeps = sweep;
  out.values.resize(k);
  out.vectors = Matrix(n, k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t src = order[c];
    out.values[c] = w(src, src);
    const auto v = vt.row(src);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::fabs(v[i]) > std::fabs(v[arg])) arg = i;
    const double sign = v[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, c) = sign * v[i];
  }
  return out;
}

}  // namespace tfarm
