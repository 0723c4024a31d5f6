#include <doctest.h>

#include "esn/esnsm.hpp"
#include "esn/priors.hpp"
#include "esn/targets.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace esn;

namespace {

// log |det d theta / d u| by central differences.
double numeric_log_jacobian(const TargetModel& t, const Vec& u) {
  const int n = t.dim();
  Mat J(t.to_constrained(u).size(), n);
  for (int k = 0; k < n; ++k) {
    Vec up = u, um = u;
    up(k) += 1e-6;
    um(k) -= 1e-6;
    J.col(k) = (t.to_constrained(up) - t.to_constrained(um)) / 2e-6;
  }
  return std::log(std::abs(J.determinant()));
}

Mat skewed_data(int n, int d, Rng& rng) {
  Mat y(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) y(i, j) = std::abs(std_normal(rng)) + 0.3 * std_normal(rng) + j;
  return y;
}

}  // namespace

TEST_CASE("P1 target: prior density includes the reparametrization Jacobian") {
  Rng rng(1);
  for (int d : {1, 2}) {
    const HyperParamsP1 h = default_hyper(d).first;
    const Mat y = skewed_data(40, d, rng);
    for (bool sn : {false, true}) {
      const EsnP1Target t(y, h, sn);
      CHECK(t.dim() == d + tri(d) + d + (sn ? 0 : 1));
      CHECK(static_cast<int>(t.names().size()) == t.dim());
      for (int rep = 0; rep < 5; ++rep) {
        const Vec u = t.sample_prior(rng);
        const EsnParamsP1 p = t.params(u);
        // the skew-normal prior has no lambda factor N(0; 0, c0^2)
        const double lambda_term = sn ? -std::log(p.c0()) - 0.5 * std::log(2 * M_PI) : 0.0;
        CHECK(t.log_prior(u) ==
              doctest::Approx(log_prior_p1(p, h) - lambda_term + numeric_log_jacobian(t, u)).epsilon(1e-6));
        CHECK(t.log_likelihood(u) == doctest::Approx(loglik(p, y)).epsilon(1e-12));
        CHECK((t.to_unconstrained(t.to_constrained(u)) - u).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((t.pack(p) - u).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
  const EsnP1Target t(skewed_data(10, 1, rng), default_hyper(1).first);
  CHECK(t.names() == std::vector<std::string>{"xi[1]", "Sigma[1,1]", "alpha[1]", "lambda"});
}

TEST_CASE("sn-p1 prior is the marginal of the lambda = 0 section") {
  // with lambda fixed the sn target's prior lacks the lambda factor
  Rng rng(2);
  const HyperParamsP1 h = default_hyper(1).first;
  const Mat y = skewed_data(20, 1, rng);
  const EsnP1Target sn(y, h, true);
  const EsnP1Target full(y, h, false);
  const Vec u = sn.sample_prior(rng);
  Vec uf(u.size() + 1);
  uf << u, 0.0;
  const double c0 = full.params(uf).c0();
  CHECK(full.log_prior(uf) - sn.log_prior(u) == doctest::Approx(-std::log(c0) - 0.5 * std::log(2 * M_PI)).epsilon(1e-10));
}

TEST_CASE("P2 target: prior density includes the reparametrization Jacobian") {
  Rng rng(3);
  for (int d : {1, 2}) {
    const HyperParamsP2 h = default_hyper(d).second;
    const Mat y = skewed_data(30, d, rng);
    const EsnP2Target t(y, h);
    for (int rep = 0; rep < 5; ++rep) {
      const Vec u = t.sample_prior(rng);
      const EsnParamsP2 p = t.params(u);
      CHECK(t.log_prior(u) == doctest::Approx(log_prior_p2(p, h) + numeric_log_jacobian(t, u)).epsilon(1e-6));
      CHECK(t.log_likelihood(u) == doctest::Approx(loglik(p, y)).epsilon(1e-12));
      CHECK((t.to_unconstrained(t.to_constrained(u)) - u).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("Gaussian target: prior density includes the reparametrization Jacobian") {
  Rng rng(4);
  const HyperParamsP1 h = default_hyper(2).first;
  const GaussianTarget t(skewed_data(30, 2, rng), h);
  for (int rep = 0; rep < 5; ++rep) {
    const Vec u = t.sample_prior(rng);
    const Vec th = t.to_constrained(u);
    const double ref = log_niw(th.head(2), unvech(th.tail(3), 2), h.xi0, h.kappa, h.nu, h.V);
    CHECK(t.log_prior(u) == doctest::Approx(ref + numeric_log_jacobian(t, u)).epsilon(1e-6));
  }
}

TEST_CASE("selection target: prior density includes the reparametrization Jacobian") {
  Rng rng(5);
  const EsnsmData data = simulate(design_params(0.3), design_covariates(300, rng), rng);
  const EsnsmHyper h = default_esnsm_hyper(1, 3, data.size());
  for (bool gaussian : {false, true}) {
    const EsnsmTarget t(data, h, gaussian);
    CHECK(t.dim() == 3 + 3 + 1 + 1 + (gaussian ? 0 : 3));
    for (int rep = 0; rep < 5; ++rep) {
      const Vec u = t.sample_prior(rng);
      const EsnsmParams p = t.params(u);
      CHECK(std::abs(p.sigma12(0)) < std::sqrt(p.sigma1(0, 0)));
      // the prior is stated for r = Sigma12 / sqrt(Sigma11); dr / dSigma12 = 1 / sqrt(Sigma11)
      double ref = log_prior_esnsm(p, h, data.x) - 0.5 * std::log(p.sigma1(0, 0)) + numeric_log_jacobian(t, u);
      if (gaussian) {
        // drop the alpha and lambda factors evaluated at zero
        for (int i = 0; i < 2; ++i) ref -= std::log(oracle::phi(-h.mu_alpha(i) / std::sqrt(h.sigma2_alpha)) / std::sqrt(h.sigma2_alpha));
        ref -= std::log(oracle::phi(0.0));
      }
      CHECK(t.log_prior(u) == doctest::Approx(ref).epsilon(1e-6));
      CHECK(t.log_likelihood(u) == doctest::Approx(loglik(p, data)).epsilon(1e-12));
      CHECK((t.to_unconstrained(t.to_constrained(u)) - u).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  const EsnsmTarget t(data, h);
  CHECK(t.names().front() == "B[1,1]");
  CHECK(t.names().back() == "lambda");
}

TEST_CASE("uniform prior on the error correlation") {
  // for d = 1 the implied prior on rho = Sigma12 / sqrt(Sigma11) is uniform on (-1, 1)
  Rng rng(6);
  const EsnsmData data = simulate(design_params(0.3), design_covariates(100, rng), rng);
  const EsnsmTarget t(data, default_esnsm_hyper(1, 3, data.size()));
  const int n = 40'000;
  int below = 0;
  double s2 = 0;
  for (int i = 0; i < n; ++i) {
    const EsnsmParams p = t.params(t.sample_prior(rng));
    const double rho = p.sigma12(0) / std::sqrt(p.sigma1(0, 0));
    below += rho < -0.5;
    s2 += rho * rho;
  }
  CHECK(double(below) / n == doctest::Approx(0.25).epsilon(0.04));
  CHECK(s2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}
