#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "tfarm/errors.hpp"
#include "tfarm/factor.hpp"
#include "tfarm/inference.hpp"
#include "tfarm/linalg.hpp"

using namespace tfarm;
using testing::max_diff;
using testing::to_matrix;

namespace {

std::shared_ptr<const FactorDecomposition> plain(const Matrix& u) {
  return std::make_shared<FactorDecomposition>(decompose(u, RankSpec::exactly(0)));
}

PrecisionEstimate theta_of(const Matrix& t) {
  PrecisionEstimate e;
  e.theta = t;
  return e;
}

// Columns orthogonal with u^T u / n = I.
Matrix orthonormal_design(std::size_t n, std::size_t p, std::uint64_t seed) {
  oracle::Lcg g(seed);
  auto a = oracle::random_mat(g, n, p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      long double d = 0;
      for (std::size_t i = 0; i < n; ++i) d += static_cast<long double>(a[i][j]) * a[i][k];
      for (std::size_t i = 0; i < n; ++i) a[i][j] -= static_cast<double>(d / n) * a[i][k];
    }
    long double nn = 0;
    for (std::size_t i = 0; i < n; ++i) nn += static_cast<long double>(a[i][j]) * a[i][j];
    const double s = std::sqrt(static_cast<double>(n)) / std::sqrt(static_cast<double>(nn));
    for (std::size_t i = 0; i < n; ++i) a[i][j] *= s;
  }
  return to_matrix(a);
}

InferenceInputs synthetic_inputs(std::size_t n, std::size_t p, std::uint64_t seed) {
  oracle::Lcg g(seed);
  InferenceInputs in;
  in.target_decomp = plain(to_matrix(oracle::random_mat(g, n, p)));
  in.y_tilde = oracle::random_vec(g, n);
  in.beta_hat = oracle::random_vec(g, p);
  Matrix t(p, p, 0.0);
  for (std::size_t j = 0; j < p; ++j) t(j, j) = 0.5 + j;
  for (std::size_t j = 0; j + 1 < p; ++j) t(j, j + 1) = t(j + 1, j) = 0.1;
  in.theta = theta_of(t);
  in.sigma_hat = 0.8;
  return in;
}

}  // namespace

TEST_SUITE("debias") {
  TEST_CASE("zero residual and zero theta leave beta unchanged") {
    oracle::Lcg g(1);
    const Matrix u = to_matrix(oracle::random_mat(g, 30, 6));
    const auto d = plain(u);
    const Vector beta = oracle::random_vec(g, 6);
    const Vector fitted = linalg::matvec(u, beta);
    const PrecisionEstimate eye = theta_of(Matrix::identity(6));
    CHECK(max_diff(debias(beta, *d, fitted, eye), beta) <= 1e-14);
    const Vector y = oracle::random_vec(g, 30);
    CHECK(debias(beta, *d, y, theta_of(Matrix(6, 6, 0.0))) == beta);
  }

  TEST_CASE("matches dense recomputation") {
    oracle::Lcg g(8);
    const auto u = oracle::random_mat(g, 60, 8);
    const auto y = oracle::random_vec(g, 60);
    const auto beta = oracle::random_vec(g, 8);
    auto t = oracle::random_mat(g, 8, 8);
    const auto fitted = oracle::matvec(u, beta);
    oracle::Vec resid(60);
    for (std::size_t i = 0; i < 60; ++i) resid[i] = y[i] - fitted[i];
    auto score = oracle::matvec(oracle::transpose(u), resid);
    for (double& v : score) v /= 60.0;
    const auto corr = oracle::matvec(t, score);
    oracle::Vec expect(8);
    for (std::size_t j = 0; j < 8; ++j) expect[j] = beta[j] + corr[j];
    const Vector got = debias(beta, *plain(to_matrix(u)), y, theta_of(to_matrix(t)));
    CHECK(max_diff(got, expect) <= 1e-10);
  }

  TEST_CASE("dimension errors") {
    const auto d = plain(Matrix(10, 3, 1.0));
    const PrecisionEstimate eye = theta_of(Matrix::identity(3));
    CHECK_THROWS_AS(debias(Vector(4, 0.0), *d, Vector(10, 0.0), eye), InvalidArgument);
    CHECK_THROWS_AS(debias(Vector(3, 0.0), *d, Vector(9, 0.0), eye), InvalidArgument);
    CHECK_THROWS_AS(debias(Vector(3, 0.0), *d, Vector(10, 0.0), theta_of(Matrix::identity(2))),
                    InvalidArgument);
  }
}

TEST_SUITE("multiplier_bootstrap") {
  const std::vector<std::size_t> all5{0, 1, 2, 3, 4};

  TEST_CASE("zero design gives zero draws") {
    const Vector draws = multiplier_bootstrap(Matrix(20, 5, 0.0), theta_of(Matrix::identity(5)), 1.0,
                                              all5, 50, false, RngStream(1, 0));
    for (double v : draws) CHECK(v == 0.0);
  }

  TEST_CASE("homogeneous in sigma and reproducible across threads") {
    const InferenceInputs in = synthetic_inputs(40, 5, 2);
    const RngStream rng(9, 3);
    const Vector a = multiplier_bootstrap(in.u(), in.theta, 1.0, all5, 200, true, rng);
    const Vector b = multiplier_bootstrap(in.u(), in.theta, 4.0, all5, 200, true, rng);
    for (std::size_t l = 0; l < a.size(); ++l) CHECK(b[l] == 4.0 * a[l]);
    CHECK(multiplier_bootstrap(in.u(), in.theta, 1.0, all5, 200, true, rng, 4) == a);
    CHECK(multiplier_bootstrap(in.u(), in.theta, 1.0, all5, 200, true, RngStream(10, 3)) != a);
  }

  TEST_CASE("Gaussian maximum") {
    const std::size_t n = 200;
    const std::size_t p = 20;
    const Matrix u = orthonormal_design(n, p, 20);
    std::vector<std::size_t> all(p);
    for (std::size_t j = 0; j < p; ++j) all[j] = j;
    const Vector draws =
        multiplier_bootstrap(u, theta_of(Matrix::identity(p)), 1.0, all, 2000, false, RngStream(7, 0));
    const double got = quantile(draws, 0.95);

    oracle::Lcg g(2020);
    std::vector<double> ref(40000);
    for (double& m : ref) {
      m = 0;
      for (std::size_t j = 0; j < p; ++j) m = std::max(m, std::fabs(g.normal()));
    }
    std::sort(ref.begin(), ref.end());
    const double expect = ref[static_cast<std::size_t>(0.95 * ref.size()) - 1];
    CHECK(std::fabs(got / expect - 1.0) <= 0.05);
  }

  TEST_CASE("argument errors") {
    const Matrix u(10, 5, 1.0);
    const PrecisionEstimate eye = theta_of(Matrix::identity(5));
    const RngStream rng(1, 0);
    CHECK_THROWS_AS(multiplier_bootstrap(u, eye, 1.0, all5, 0, false, rng), InvalidArgument);
    CHECK_THROWS_AS(multiplier_bootstrap(u, eye, 1.0, {}, 10, false, rng), InvalidArgument);
    CHECK_THROWS_AS(multiplier_bootstrap(u, eye, 0.0, all5, 10, false, rng), InvalidArgument);
    const std::vector<std::size_t> out{5};
    CHECK_THROWS_AS(multiplier_bootstrap(u, eye, 1.0, out, 10, false, rng), InvalidArgument);
    Matrix t = Matrix::identity(5);
    t(2, 2) = 0.0;
    CHECK_THROWS_AS(multiplier_bootstrap(u, theta_of(t), 1.0, all5, 10, true, rng), NumericalError);
    CHECK_NOTHROW(multiplier_bootstrap(u, theta_of(t), 1.0, all5, 10, false, rng));
  }
}

TEST_SUITE("quantile") {
  TEST_CASE("order statistics") {
    const std::vector<double> d{5, 1, 4, 2, 3};
    CHECK(quantile(d, 0.5) == 3.0);
    CHECK(quantile(d, 0.2) == 1.0);
    CHECK(quantile(d, 0.21) == 2.0);
    CHECK(quantile(d, 1.0 - 1e-12) == 5.0);
    CHECK(quantile(d, 1e-12) == 1.0);
  }

  TEST_CASE("absolute normals") {
    RngStream rng(95, 0);
    std::vector<double> d(10000);
    for (double& v : d) v = std::fabs(rng.normal());
    CHECK(std::fabs(quantile(d, 0.95) - 1.96) <= 0.05);
    double prev = -1;
    for (double level = 0.01; level < 1.0; level += 0.01) {
      const double q = quantile(d, level);
      CHECK(q >= prev);
      prev = q;
    }
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(quantile(std::vector<double>{1.0}, 0.0), InvalidArgument);
    CHECK_THROWS_AS(quantile(std::vector<double>{1.0}, 1.0), InvalidArgument);
  }
}

TEST_SUITE("test and intervals") {
  TEST_CASE("zero debiased estimate never rejects") {
    InferenceInputs in = synthetic_inputs(40, 5, 3);
    in.beta_hat.assign(5, 0.0);
    in.y_tilde.assign(40, 0.0);
    const InferenceResult r = adequacy_test(in, 0.05, 200, RngStream(1, 0));
    CHECK(r.statistic == 0.0);
    CHECK(r.test_critical > 0.0);
    CHECK_FALSE(r.reject);
  }

  TEST_CASE("reject flag follows the statistic") {
    const InferenceInputs in = synthetic_inputs(40, 5, 4);
    const RngStream rng(2, 0);
    const InferenceResult r = adequacy_test(in, 0.05, 300, rng);
    CHECK(r.reject == (r.statistic > r.test_critical));
    CHECK(r.statistic == doctest::Approx(std::sqrt(40.0) * linalg::norm_inf(r.beta_tilde)));
    // Scaling beta~ up can only move a non-rejection to a rejection.
    bool seen_reject = false;
    for (double scale : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0}) {
      InferenceInputs s = in;
      for (double& v : s.beta_hat) v *= scale;
      s.y_tilde = linalg::matvec(s.u(), s.beta_hat);
      const InferenceResult rs = adequacy_test(s, 0.05, 300, rng);
      CHECK(rs.test_critical == r.test_critical);
      if (seen_reject) CHECK(rs.reject);
      seen_reject = seen_reject || rs.reject;
    }
    CHECK(seen_reject);
  }

  TEST_CASE("intervals are centred, symmetric and scale with the precision diagonal") {
    const InferenceInputs in = synthetic_inputs(50, 5, 5);
    const RngStream rng(3, 0);
    const InferenceResult plain_r = simultaneous_cis(in, {}, 0.05, false, 300, rng);
    const InferenceResult stu = simultaneous_cis(in, {}, 0.05, true, 300, rng);
    REQUIRE(stu.intervals.size() == 5);
    const double half0 = plain_r.intervals[0].hi - plain_r.beta_tilde[0];
    for (std::size_t i = 0; i < 5; ++i) {
      for (const InferenceResult* r : {&plain_r, &stu}) {
        const auto& ci = r->intervals[i];
        CHECK(ci.index == i);
        CHECK(ci.lo <= r->beta_tilde[i]);
        CHECK(ci.hi >= r->beta_tilde[i]);
        CHECK((ci.hi - r->beta_tilde[i]) == doctest::Approx(r->beta_tilde[i] - ci.lo).epsilon(1e-12));
      }
      CHECK((plain_r.intervals[i].hi - plain_r.beta_tilde[i]) ==
            doctest::Approx(half0).epsilon(1e-12));
      const double half = stu.intervals[i].hi - stu.beta_tilde[i];
      const double expect = std::sqrt(in.theta.theta(i, i)) * stu.interval_critical / std::sqrt(50.0);
      CHECK(half == doctest::Approx(expect).epsilon(1e-12));
      const double h0 = stu.intervals[0].hi - stu.beta_tilde[0];
      CHECK(half / h0 == doctest::Approx(std::sqrt(in.theta.theta(i, i) / in.theta.theta(0, 0))).epsilon(1e-12));
    }
  }

  TEST_CASE("alpha near one shrinks intervals") {
    const InferenceInputs in = synthetic_inputs(50, 5, 6);
    const RngStream rng(4, 0);
    const InferenceResult wide = simultaneous_cis(in, {}, 0.05, false, 500, rng);
    const InferenceResult narrow = simultaneous_cis(in, {}, 0.999, false, 500, rng);
    CHECK(narrow.interval_critical <= 0.1 * wide.interval_critical);
  }

  TEST_CASE("equal precision diagonal makes studentisation a rescaling") {
    InferenceInputs in = synthetic_inputs(50, 5, 7);
    for (std::size_t j = 0; j < 5; ++j) in.theta.theta(j, j) = 2.25;
    const RngStream rng(5, 0);
    const std::vector<std::size_t> g{1, 3};
    const InferenceResult a = simultaneous_cis(in, g, 0.1, false, 300, rng);
    const InferenceResult b = simultaneous_cis(in, g, 0.1, true, 300, rng);
    CHECK(b.interval_critical * 1.5 == doctest::Approx(a.interval_critical).epsilon(1e-12));
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(a.intervals[i].lo == doctest::Approx(b.intervals[i].lo).epsilon(1e-12));
      CHECK(a.intervals[i].hi == doctest::Approx(b.intervals[i].hi).epsilon(1e-12));
    }
    CHECK(a.group == g);
  }

  TEST_CASE("bitwise reproducible quantiles and bad inputs") {
    const InferenceInputs in = synthetic_inputs(40, 5, 8);
    const RngStream rng(6, 0);
    CHECK(simultaneous_cis(in, {}, 0.05, true, 200, rng).interval_critical ==
          simultaneous_cis(in, {}, 0.05, true, 200, rng, 3).interval_critical);
    CHECK_THROWS_AS(simultaneous_cis(in, {}, 1.0, true, 200, rng), InvalidArgument);
    CHECK_THROWS_AS(adequacy_test(in, 0.0, 200, rng), InvalidArgument);
    const std::vector<std::size_t> bad{7};
    CHECK_THROWS_AS(simultaneous_cis(in, bad, 0.05, true, 200, rng), InvalidArgument);
  }
}
