#include <doctest.h>

#include "esn/normal.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace esn;

TEST_CASE("univariate normal functions agree with Boost") {
  for (double x : {-30.0, -9.0, -8.0, -3.0, -0.5, 0.0, 1.0, 4.0, 7.5}) {
    CHECK(norm_pdf(x) == doctest::Approx(oracle::phi(x)).epsilon(1e-13));
    CHECK(norm_cdf(x) == doctest::Approx(oracle::Phi(x)).epsilon(1e-12));
    CHECK(norm_log_cdf(x) == doctest::Approx(std::log(oracle::Phi(x))).epsilon(1e-12));
    CHECK(inverse_mills(x) == doctest::Approx(oracle::phi(x) / oracle::Phi(x)).epsilon(1e-10));
  }
  // far tail: log Phi(x) ~ -x^2/2 - log(-x) - log sqrt(2 pi)
  const double x = -200.0;
  CHECK(norm_log_cdf(x) == doctest::Approx(-0.5 * x * x - std::log(-x) - kLogSqrt2Pi).epsilon(1e-8));
  CHECK(std::isfinite(inverse_mills(-1e4)));
  for (double p : {1e-12, 0.01, 0.3, 0.5, 0.9, 1 - 1e-10}) {
    CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
  }
}

TEST_CASE("bivariate normal CDF matches the Owen's T representation") {
  for (double r : {-0.999, -0.7, -0.2, 0.0, 0.35, 0.8, 0.95, 0.9999}) {
    for (double h : {-4.0, -1.3, 0.0, 0.4, 2.5}) {
      for (double k : {-2.2, -0.1, 0.0, 1.7, 6.0}) {
        CHECK(bvn_cdf(h, k, r) == doctest::Approx(oracle::bvn(h, k, r)).epsilon(1e-10));
      }
    }
  }
  CHECK(bvn_cdf(0.0, 0.0, 0.0) == doctest::Approx(0.25));
  CHECK(bvn_cdf(0.0, 0.0, 0.5) == doctest::Approx(1.0 / 3.0));  // 1/4 + asin(r)/(2 pi)
}

TEST_CASE("bivariate log CDF stays finite deep in the tail") {
  const double v = bvn_log_cdf(-40.0, -38.0, 0.3);
  CHECK(std::isfinite(v));
  // independent coordinates: log Phi(h) + log Phi(k)
  CHECK(bvn_log_cdf(-30.0, -25.0, 0.0) == doctest::Approx(norm_log_cdf(-30.0) + norm_log_cdf(-25.0)).epsilon(1e-8));
  CHECK(bvn_log_cdf(1.0, -0.5, -0.4) == doctest::Approx(std::log(oracle::bvn(1.0, -0.5, -0.4))).epsilon(1e-12));
}

TEST_CASE("trivariate CDF against conditioning quadrature and QMC") {
  Mat corr(3, 3);
  corr << 1.0, 0.5, -0.3, 0.5, 1.0, 0.2, -0.3, 0.2, 1.0;
  Vec b(3);
  b << 0.3, -0.7, 1.1;
  // P(X <= b) = int_{-inf}^{b0} phi(x) P(X1 <= b1, X2 <= b2 | X0 = x) dx
  const double s1 = std::sqrt(1 - 0.25), s2 = std::sqrt(1 - 0.09);
  const double r12 = (0.2 - 0.5 * -0.3) / (s1 * s2);
  const double ref = oracle::integrate(
      [&](double x) { return oracle::phi(x) * oracle::bvn((b(1) - 0.5 * x) / s1, (b(2) + 0.3 * x) / s2, r12); },
      -std::numeric_limits<double>::infinity(), b(0));
  CHECK(tvn_cdf(b, corr) == doctest::Approx(ref).epsilon(1e-9));
  const MvnCdf q = mvn_cdf_qmc(b, corr, 1e-5);
  CHECK(q.error <= 1e-5);
  CHECK(std::abs(q.value - ref) < 5 * q.error + 1e-7);
  const MvnCdf d = mvn_cdf(b, corr, 1e-6);
  CHECK(d.error == 0.0);
  CHECK(d.value == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("QMC CDF in dimension 4 with a product-form answer") {
  Mat cov = Mat::Identity(4, 4) * 2.0;
  Vec b(4);
  b << 0.1, -0.4, 1.0, 0.0;
  double ref = 1.0;
  for (int i = 0; i < 4; ++i) ref *= oracle::Phi(b(i) / std::sqrt(2.0));
  const MvnCdf q = mvn_cdf(b, cov, 1e-6);
  CHECK(std::abs(q.value - ref) < 5 * q.error + 1e-8);
}

TEST_CASE("log-sum-exp") {
  Vec v(3);
  v << 1000.0, 1000.0, -std::numeric_limits<double>::infinity();
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(log_sum_exp(Vec()) == -std::numeric_limits<double>::infinity());
}
