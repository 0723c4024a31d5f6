#include <doctest.h>

#include "esn/model_select.hpp"
#include "esn/rng.hpp"
#include "oracles.hpp"

#include <boost/math/distributions/inverse_gamma.hpp>

#include <cmath>

using namespace esn;

TEST_CASE("Gaussian evidence against two-dimensional quadrature") {
  Mat y(5, 1);
  y << 1.2, -0.3, 2.5, 0.9, 1.7;
  HyperParamsP1 h = default_hyper(1).first;
  h.xi0(0) = 0.4;
  const boost::math::inverse_gamma_distribution<double> ig(h.nu / 2.0, h.V(0, 0) / 2.0);
  const double inf = std::numeric_limits<double>::infinity();
  const double m = oracle::integrate(
      [&](double s2) {
        return boost::math::pdf(ig, s2) * oracle::integrate(
                                              [&](double xi) {
                                                double f = oracle::phi((xi - 0.4) / std::sqrt(s2 / h.kappa)) / std::sqrt(s2 / h.kappa);
                                                for (int i = 0; i < 5; ++i) f *= oracle::phi((y(i) - xi) / std::sqrt(s2)) / std::sqrt(s2);
                                                return f;
                                              },
                                              -inf, inf, 1e-11);
      },
      0.0, inf, 1e-11);
  CHECK(gaussian_log_evidence(y, h) == doctest::Approx(std::log(m)).epsilon(1e-8));
}

TEST_CASE("Gaussian evidence obeys the chain rule through the posterior") {
  Rng rng(2);
  Mat y(30, 2);
  for (int i = 0; i < 30; ++i) y.row(i) = std_normal_vec(rng, 2).transpose();
  const HyperParamsP1 h = default_hyper(2).first;
  const NiwPosterior post = niw_posterior(y.topRows(12), h);
  HyperParamsP1 h2 = h;
  h2.xi0 = post.xi;
  h2.kappa = post.kappa;
  h2.nu = post.nu;
  h2.V = post.V;
  CHECK(gaussian_log_evidence(y, h) ==
        doctest::Approx(gaussian_log_evidence(y.topRows(12), h) + gaussian_log_evidence(y.bottomRows(18), h2)).epsilon(1e-11));
  CHECK(post.kappa == h.kappa + 12);
  CHECK(post.nu == h.nu + 12);
  const Vec ybar = y.topRows(12).colwise().mean();
  CHECK((post.xi - (h.kappa * h.xi0 + 12 * ybar) / (h.kappa + 12)).norm() < 1e-12);
}

TEST_CASE("evidence classification bins") {
  CHECK(classify_log10(-3.0) == EvidenceCategory::Poor);
  CHECK(classify_log10(0.0) == EvidenceCategory::Poor);
  CHECK(classify_log10(0.5) == EvidenceCategory::Poor);
  CHECK(classify_log10(0.5001) == EvidenceCategory::Substantial);
  CHECK(classify_log10(1.0) == EvidenceCategory::Substantial);
  CHECK(classify_log10(1.5) == EvidenceCategory::Strong);
  CHECK(classify_log10(2.0) == EvidenceCategory::Strong);
  CHECK(classify_log10(2.0001) == EvidenceCategory::Decisive);
  const auto same = classify_bayes_factor(-120.0, -120.0);
  CHECK(same.category == EvidenceCategory::Poor);
  CHECK(same.log10_bayes_factor == 0.0);
  const auto dec = classify_bayes_factor(0.0, -10.0);
  CHECK(dec.log10_bayes_factor == doctest::Approx(10.0 / std::log(10.0)));
  CHECK(dec.category == EvidenceCategory::Decisive);
  CHECK(to_string(EvidenceCategory::Substantial) == "substantial");
}
