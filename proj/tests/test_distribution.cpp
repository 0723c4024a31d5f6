#include <doctest.h>

#include "esn/distribution.hpp"
#include "esn/error.hpp"
#include "esn/rng.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace esn;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

Vec v1(double a) { return Vec::Constant(1, a); }

EsnParamsP1 random_params(int d, Rng& rng) {
  EsnParamsP1 p;
  p.xi = std_normal_vec(rng, d);
  Mat a = Mat::Random(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = std_normal(rng);
  p.sigma = a * a.transpose() + 0.5 * Mat::Identity(d, d);
  p.alpha = 1.5 * std_normal_vec(rng, d);
  p.lambda = 1.5 * std_normal(rng);
  return p;
}

// Mean, variance, skewness and kurtosis with batch-means standard errors.
struct McMoments {
  double est[4];
  double se[4];
};

McMoments batch_moments(const Mat& y, int batches) {
  const int per = static_cast<int>(y.rows()) / batches;
  std::vector<std::array<double, 4>> b(batches);
  auto stats = [](const double* x, int n) {
    double m = 0;
    for (int i = 0; i < n; ++i) m += x[i];
    m /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
      const double e = x[i] - m;
      m2 += e * e;
      m3 += e * e * e;
      m4 += e * e * e * e;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    return std::array<double, 4>{m, m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2)};
  };
  for (int k = 0; k < batches; ++k) b[k] = stats(y.data() + k * per, per);
  McMoments r;
  const auto all = stats(y.data(), per * batches);
  for (int j = 0; j < 4; ++j) {
    double s = 0, s2 = 0;
    for (int k = 0; k < batches; ++k) {
      s += b[k][j];
      s2 += b[k][j] * b[k][j];
    }
    const double mean = s / batches;
    r.est[j] = all[j];
    r.se[j] = std::sqrt((s2 / batches - mean * mean) / (batches - 1));
  }
  return r;
}

}  // namespace

TEST_CASE("univariate density matches the definition") {
  const auto p = EsnParamsP1::univariate(2.0, 6.0, 5.0, -2.0);
  for (double y : {-5.0, 0.0, 1.9, 2.0, 3.3, 10.0}) {
    CHECK(std::exp(logpdf_p1(p, v1(y))) == doctest::Approx(oracle::esn_pdf(y, 2, 6, 5, -2)).epsilon(1e-11));
  }
  // far in the left tail the log-density stays finite
  CHECK(std::isfinite(logpdf_p1(p, v1(-60.0))));
  // lambda = alpha = 0 is Gaussian
  const auto g = EsnParamsP1::univariate(1.0, 4.0, 0.0, 0.0);
  CHECK(logpdf_p1(g, v1(2.0)) == doctest::Approx(std::log(oracle::phi(0.5) / 2.0)));
  EsnLogDensity f(p);
  Mat data(3, 1);
  data << 1.0, 2.0, 4.0;
  CHECK(f.sum(data) == doctest::Approx(logpdf_p1(p, v1(1)) + logpdf_p1(p, v1(2)) + logpdf_p1(p, v1(4))));
  CHECK(loglik(p, data) == doctest::Approx(f.sum(data)));
}

TEST_CASE("density integrates to one") {
  for (auto [xi, s2, a, l] : {std::array<double, 4>{2, 6, 5, -2}, {0, 1, -3, 4}, {-1, 0.3, 0.5, 1}, {0, 2, 20, -6}}) {
    const auto p = EsnParamsP1::univariate(xi, s2, a, l);
    const double z = oracle::integrate([&](double y) { return std::exp(logpdf_p1(p, v1(y))); }, -kInf, kInf);
    CHECK(z == doctest::Approx(1.0).epsilon(1e-6));
  }
  EsnParamsP1 p;
  p.xi = Vec::Zero(2);
  p.sigma = Mat(2, 2);
  p.sigma << 2.0, 0.6, 0.6, 1.0;
  p.alpha = Vec(2);
  p.alpha << 1.5, -2.0;
  p.lambda = -1.0;
  const double z = oracle::integrate(
      [&](double y1) {
        return oracle::integrate(
            [&](double y2) {
              Vec y(2);
              y << y1, y2;
              return std::exp(logpdf_p1(p, y));
            },
            -kInf, kInf, 1e-9);
      },
      -kInf, kInf, 1e-9);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("bivariate density matches the definition") {
  Rng rng(3);
  const auto p = random_params(2, rng);
  Eigen::Vector2d xi = p.xi, al = p.alpha;
  Eigen::Matrix2d s = p.sigma;
  Vec y(2);
  y << 0.3, -0.8;
  CHECK(std::exp(logpdf_p1(p, y)) == doctest::Approx(oracle::esn2_pdf(0.3, -0.8, xi, s, al, p.lambda)).epsilon(1e-10));
}

TEST_CASE("parametrization conversion") {
  const auto p1 = p2_to_p1(EsnParamsP2::univariate(2.0, 1.0, 5.0, -0.8));
  CHECK(std::abs(p1.xi(0) - 2.0) < 1e-12);
  CHECK(std::abs(p1.sigma(0, 0) - 26.0) < 0.005);
  CHECK(std::abs(p1.alpha(0) - 0.9806) < 0.005);
  CHECK(std::abs(p1.lambda - -4.0792) < 0.005);
  // sigma = omega + d^2, c0 = sqrt(1 + alpha^2 sigma), alpha = c0 d / sigma, lambda = c0 c
  const double c0 = std::sqrt(1 + p1.alpha(0) * p1.alpha(0) * 26.0);
  CHECK(p1.alpha(0) == doctest::Approx(c0 * 5.0 / 26.0).epsilon(1e-12));
  CHECK(p1.lambda == doctest::Approx(c0 * -0.8).epsilon(1e-12));

  Rng rng(9);
  for (int d : {1, 2, 3}) {
    for (int rep = 0; rep < 10; ++rep) {
      const auto p = random_params(d, rng);
      const auto back = p2_to_p1(p1_to_p2(p));
      CHECK((back.sigma - p.sigma).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((back.alpha - p.alpha).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(std::abs(back.lambda - p.lambda) < 1e-10);
      CHECK((back.xi - p.xi).cwiseAbs().maxCoeff() < 1e-12);
      const Vec y = std_normal_vec(rng, d);
      CHECK(logpdf_p2(p1_to_p2(p), y) == doctest::Approx(logpdf_p1(p, y)).epsilon(1e-10));
    }
  }
}

TEST_CASE("P2 density agrees with the convolution integral") {
  // Y = xi + W + d Z with W ~ N(0, omega2) and Z >= -c having density phi(z)/Phi(c)
  const double xi = 2, om = 1, dd = 5, c = -0.8;
  const auto p = EsnParamsP2::univariate(xi, om, dd, c);
  for (double y : {-1.0, 2.0, 6.5, 12.0}) {
    const double ref = oracle::integrate(
        [&](double z) { return oracle::phi((y - xi - dd * z) / std::sqrt(om)) / std::sqrt(om) * oracle::phi(z) / oracle::Phi(c); },
        -c, kInf);
    CHECK(std::exp(logpdf_p2(p, v1(y))) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("moments reproduce the reference triples") {
  const auto a = moments_univariate(EsnParamsP1::univariate(2, 6, 5, -2));
  CHECK(std::abs(a.variance(0, 0) - 2.0) < 0.05);
  CHECK(std::abs(a.skewness - 1.0) < 0.05);
  CHECK(std::abs(a.kurtosis - 4.0) < 0.05);
  const auto b = moments_univariate(p2_to_p1(EsnParamsP2::univariate(2, 1, 5, -0.8)));
  CHECK(std::abs(b.variance(0, 0) - 6.60) < 0.05);
  CHECK(std::abs(b.skewness - 0.99) < 0.05);
  CHECK(std::abs(b.kurtosis - 4.28) < 0.05);
}

TEST_CASE("moments agree with quadrature and with Monte Carlo") {
  Rng rng(20240611);
  for (const auto& p : {EsnParamsP1::univariate(2, 6, 5, -2), p2_to_p1(EsnParamsP2::univariate(2, 1, 5, -0.8)),
                        EsnParamsP1::univariate(-1, 0.5, -2, 1.5)}) {
    const auto m = moments_univariate(p);
    auto f = [&](double y) { return std::exp(logpdf_p1(p, v1(y))); };
    const double mu = oracle::integrate([&](double y) { return y * f(y); }, -kInf, kInf);
    const double var = oracle::integrate([&](double y) { return (y - mu) * (y - mu) * f(y); }, -kInf, kInf);
    const double m3 = oracle::integrate([&](double y) { return std::pow(y - mu, 3) * f(y); }, -kInf, kInf);
    const double m4 = oracle::integrate([&](double y) { return std::pow(y - mu, 4) * f(y); }, -kInf, kInf);
    CHECK(m.mean(0) == doctest::Approx(mu).epsilon(1e-8));
    CHECK(m.variance(0, 0) == doctest::Approx(var).epsilon(1e-8));
    CHECK(m.skewness == doctest::Approx(m3 / std::pow(var, 1.5)).epsilon(1e-6));
    CHECK(m.kurtosis == doctest::Approx(m4 / (var * var)).epsilon(1e-6));

    const Mat y = sample(p, 1'000'000, rng);
    const McMoments mc = batch_moments(y, 100);
    const double exact[4] = {m.mean(0), m.variance(0, 0), m.skewness, m.kurtosis};
    for (int j = 0; j < 4; ++j) {
      INFO("moment " << j << ": exact " << exact[j] << " mc " << mc.est[j] << " se " << mc.se[j]);
      CHECK(std::abs(mc.est[j] - exact[j]) < 3.0 * mc.se[j]);
    }
  }
}

TEST_CASE("multivariate mean and covariance against Monte Carlo") {
  Rng rng(77);
  const auto p = random_params(3, rng);
  const Vec mu = mean(p);
  const Mat cov = covariance(p);
  const Mat y = sample(p, 400'000, rng);
  const Vec m = y.colwise().mean();
  const Mat c = (y.rowwise() - m.transpose()).transpose() * (y.rowwise() - m.transpose()) / double(y.rows());
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(m(i) - mu(i)) < 4.0 * std::sqrt(cov(i, i) / y.rows()));
    for (int j = 0; j < 3; ++j) CHECK(std::abs(c(i, j) - cov(i, j)) < 0.02 * std::sqrt(cov(i, i) * cov(j, j)));
  }
}

TEST_CASE("truncated standard normal sampler") {
  Rng rng(5);
  for (double c : {1.0, -2.0, -6.0, -15.0}) {
    const int n = 200'000;
    double s = 0, mx = -kInf;
    for (int i = 0; i < n; ++i) {
      const double x = sample_truncated_std(c, rng);
      s += x;
      mx = std::max(mx, x);
    }
    const double exact = -oracle::phi(c) / oracle::Phi(c);  // E[X | X <= c]
    CHECK(mx <= c);
    CHECK(s / n == doctest::Approx(exact).epsilon(c < -5 ? 1e-3 : 5e-3));
  }
}

TEST_CASE("CDF agrees with quadrature of the density") {
  const auto p = EsnParamsP1::univariate(2, 6, 5, -2);
  for (double y : {-2.0, 1.0, 2.5, 6.0}) {
    const double ref = oracle::integrate([&](double t) { return oracle::esn_pdf(t, 2, 6, 5, -2); }, -kInf, y);
    CHECK(cdf(p, v1(y)).value == doctest::Approx(ref).epsilon(1e-9));
  }
  Rng rng(4);
  const auto q = random_params(2, rng);
  Vec y(2);
  y << q.xi(0) + 0.4, q.xi(1) - 0.2;
  const double ref = oracle::integrate(
      [&](double a) {
        return oracle::integrate(
            [&](double b) {
              Vec t(2);
              t << a, b;
              return std::exp(logpdf_p1(q, t));
            },
            -kInf, y(1), 1e-10);
      },
      -kInf, y(0), 1e-10);
  CHECK(cdf(q, y).value == doctest::Approx(ref).epsilon(1e-7));
  // joint CDF building block at alpha = 0 factorizes
  CHECK(esn_joint_cdf(0.7, 2.0, 0.0, -0.3) == doctest::Approx(oracle::Phi(0.7 / std::sqrt(2.0)) * oracle::Phi(-0.3)));
  CHECK(esn_joint_log_cdf(0.7, 2.0, 1.2, -0.3) == doctest::Approx(std::log(esn_joint_cdf(0.7, 2.0, 1.2, -0.3))));
}

TEST_CASE("marginal times conditional equals the joint density") {
  Rng rng(11);
  int checked = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const int d = rep % 2 == 0 ? 2 : 3;
    const auto p = random_params(d, rng);
    const Vec y = p.xi + std_normal_vec(rng, d);
    std::vector<int> keep = {0}, rest;
    if (d == 3 && rep % 4 == 1) keep = {0, 2};
    for (int i = 0; i < d; ++i)
      if (std::find(keep.begin(), keep.end(), i) == keep.end()) rest.push_back(i);
    Vec yk(keep.size()), yr(rest.size());
    for (std::size_t i = 0; i < keep.size(); ++i) yk(i) = y(keep[i]);
    for (std::size_t i = 0; i < rest.size(); ++i) yr(i) = y(rest[i]);
    const double joint = logpdf_p1(p, y);
    const double fact = logpdf_p1(marginal(p, keep), yk) + logpdf_p1(conditional(p, keep, yk), yr);
    CHECK(std::abs(joint - fact) < 1e-8);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("bivariate marginal agrees with integrating out a coordinate") {
  Rng rng(12);
  for (int rep = 0; rep < 3; ++rep) {
    const auto p = random_params(2, rng);
    const auto m = marginal(p, {1});
    for (double y2 : {p.xi(1) - 1.0, p.xi(1) + 0.5}) {
      const double ref = oracle::integrate(
          [&](double y1) {
            Vec y(2);
            y << y1, y2;
            return std::exp(logpdf_p1(p, y));
          },
          -kInf, kInf, 1e-11);
      CHECK(std::exp(logpdf_p1(m, v1(y2))) == doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("affine transformation uses the change-of-variables density") {
  Rng rng(13);
  const auto p = random_params(2, rng);
  Mat a(2, 2);
  a << 1.0, 0.5, -0.3, 2.0;
  Vec shift(2);
  shift << 1.0, -2.0;
  const auto q = affine(p, a, shift);
  for (int rep = 0; rep < 5; ++rep) {
    const Vec z = std_normal_vec(rng, 2);
    const Vec y = a.transpose().inverse() * (z - shift);
    CHECK(logpdf_p1(q, z) == doctest::Approx(logpdf_p1(p, y) - std::log(std::abs(a.determinant()))).epsilon(1e-10));
  }
  // swapping coordinates permutes every block
  Mat perm(2, 2);
  perm << 0.0, 1.0, 1.0, 0.0;
  const auto sw = affine(p, perm, Vec::Zero(2));
  CHECK(sw.sigma(0, 0) == doctest::Approx(p.sigma(1, 1)));
  CHECK(sw.alpha(0) == doctest::Approx(p.alpha(1)));
  CHECK(sw.lambda == doctest::Approx(p.lambda));
  Mat sing = Mat::Ones(2, 2);
  CHECK_THROWS_AS(affine(p, sing, shift), ArgumentError);
}

TEST_CASE("Gaussian embedding is a stationary point of the likelihood") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    Vec data(200);
    for (int i = 0; i < 200; ++i) data(i) = 1.0 + 2.0 * std_normal(rng);
    const Mat m = data;
    for (double l : {-3.0, -1.0, 0.0, 2.0}) {
      const auto p = gaussian_stationary_point(data, l);
      CHECK(p.alpha(0) == 0.0);
      CHECK(p.lambda == l);
      const double ll = loglik(p, m);
      // central differences in (xi, sigma2, alpha, lambda)
      double th[4] = {p.xi(0), p.sigma(0, 0), p.alpha(0), p.lambda};
      double sup = 0;
      for (int k = 0; k < 4; ++k) {
        const double h = 1e-5 * std::max(1.0, std::abs(th[k]));
        double tp[4], tm[4];
        std::copy(th, th + 4, tp);
        std::copy(th, th + 4, tm);
        tp[k] += h;
        tm[k] -= h;
        const double g = (loglik(EsnParamsP1::univariate(tp[0], tp[1], tp[2], tp[3]), m) -
                          loglik(EsnParamsP1::univariate(tm[0], tm[1], tm[2], tm[3]), m)) /
                         (2 * h);
        sup = std::max(sup, std::abs(g));
      }
      CHECK(sup < 1e-4 * (1 + std::abs(ll)));
    }
  }
}

TEST_CASE("invalid parameters are rejected") {
  auto p = EsnParamsP1::univariate(0, 1, 0, 0);
  p.sigma(0, 0) = -1;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK_THROWS_AS(logpdf_p1(p, v1(0)), DomainError);
  auto q = EsnParamsP1::univariate(0, 1, 0, 0);
  q.alpha = Vec::Zero(2);
  CHECK_THROWS_AS(q.validate(), DomainError);
  q = EsnParamsP1::univariate(0, 1, 0, std::nan(""));
  CHECK_THROWS_AS(q.validate(), DomainError);
}

TEST_CASE("sampling is deterministic under a seed") {
  const auto p = EsnParamsP1::univariate(2, 6, 5, -2);
  Rng a(99), b(99);
  CHECK((sample(p, 100, a) - sample(p, 100, b)).cwiseAbs().maxCoeff() == 0.0);
}
