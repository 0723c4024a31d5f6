#pragma once

// Extended skew-normal sample-selection model:
//   Y*_i = B x_i + eps_1i,   S*_i = beta2' x_i + eps_2i,
//   eps_i ~ ESN_{d+1}(xi, [[Sigma1, Sigma12], [Sigma21, 1]], alpha, lambda),
// with xi fixed so that E[eps_i] = 0. Only S_i = 1{S*_i > 0} and
// Y_i = Y*_i S_i are observed.

#include "esn/distribution.hpp"
#include "esn/smc.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace esn {

/// Marker for unobserved outcomes.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct EsnsmParams {
  Mat B;         ///< d x k
  Vec beta2;     ///< k
  Mat sigma1;    ///< d x d
  Vec sigma12;   ///< d
  Vec alpha;     ///< d + 1
  double lambda = 0.0;

  int dim() const { return static_cast<int>(sigma1.rows()); }
  int n_covariates() const { return static_cast<int>(beta2.size()); }
  /// The (d+1) x (d+1) error scale matrix.
  Mat sigma() const;
  /// Location making the error mean zero.
  Vec xi() const;
  /// The error law as a P1 parameter set.
  EsnParamsP1 error_law() const;
  void validate() const;
};

struct EsnsmData {
  Mat x;               ///< n x k
  std::vector<int> s;  ///< n selection indicators
  Mat y;               ///< n x d, rows with s = 0 hold kMissing

  int size() const { return static_cast<int>(x.rows()); }
  void validate(int d) const;
  double censored_fraction() const;
};

/// The simulation design: x = (1, x1, x2), x1, x2 iid N(0, 2),
/// B = (3, -2, 0), beta2 = (1.5, 0, 2), Sigma = [[6, rho sqrt 6], [rho sqrt 6, 1]],
/// alpha = (2, 1), lambda = -2.
EsnsmParams design_params(double rho);
Mat design_covariates(int n, Rng& rng);

EsnsmData simulate(const EsnsmParams& params, const Mat& x, Rng& rng);

double loglik(const EsnsmParams& params, const EsnsmData& data);

struct EsnsmHyper {
  double kappa = 0.1;
  double nu = 6.0;
  Mat V;             ///< d x d
  Mat M;             ///< d x k prior mean of B
  double c_beta1 = 0.0;
  Vec mu_beta2;
  double c_beta2 = 0.0;
  Vec mu_alpha;      ///< d + 1
  double sigma2_alpha = 10.0;

  void validate(int d, int k) const;
};

/// kappa = 0.1, nu = max(6, d + 4), V = 12 I, zero means, c_beta1 = c_beta2 = 5n,
/// sigma2_alpha = 10.
EsnsmHyper default_esnsm_hyper(int d, int k, int n);

/// log prior density with respect to (B, beta2, Sigma1, r, alpha, lambda):
///   Sigma1 ~ IW(V, nu),
///   B | Sigma1 matrix normal, vec(B') ~ N(vec(M'), Sigma1 ⊗ (c_beta1 / kappa) (X'X)^{-1}),
///   beta2 ~ N(mu_beta2, c_beta2 (X'X)^{-1}),
///   r = L1^{-1} Sigma12 uniform on the unit ball (L1 L1' = Sigma1),
///   alpha ~ N(mu_alpha, sigma2_alpha I), lambda | Sigma, alpha ~ N(0, c0^2).
double log_prior_esnsm(const EsnsmParams& params, const EsnsmHyper& hyper, const Mat& x);

/// phi(a) Phi(lambda + alpha a) / Phi_2(a, 1, alpha, lambda).
double tau(double a, double alpha, double lambda);
/// phi(lambda/c0) Phi(a c0 + alpha lambda / c0) / Phi_2(a, 1, alpha, lambda), c0 = sqrt(1 + alpha^2).
double delta(double a, double alpha, double lambda);

struct ConditionalExpectations {
  double selection = 0.0;  ///< E[S* | S = 1, x]
  double outcome = 0.0;    ///< E[Y* | S = 1, x]
};

/// Univariate outcome only.
ConditionalExpectations conditional_expectations(const EsnsmParams& params, const Vec& x);

/// d E[Y* | S = 1, x] / d x_k by central differences.
double marginal_effect(const EsnsmParams& params, const Vec& x, int k);

/// Posterior over the sample-selection parameters. The unconstrained vector is
/// (B row-major, beta2, log-Cholesky of Sigma1, v, alpha, lambda) with
/// Sigma12 = L1 v / sqrt(1 + |v|^2). With `gaussian` set, alpha and lambda are
/// fixed at 0 (the Gaussian Tobit-2 model).
class EsnsmTarget : public TargetModel {
 public:
  EsnsmTarget(EsnsmData data, EsnsmHyper hyper, bool gaussian = false);

  int dim() const override;
  double log_prior(const Vec& u) const override;
  double log_likelihood(const Vec& u) const override;
  Vec sample_prior(Rng& rng) const override;
  Vec start() const override;
  std::vector<std::string> names() const override;
  Vec to_constrained(const Vec& u) const override;
  Vec to_unconstrained(const Vec& theta) const override;

  EsnsmParams params(const Vec& u) const;
  Vec pack(const EsnsmParams& p) const;
  int outcome_dim() const { return d_; }

 private:
  EsnsmData data_;
  EsnsmHyper hyper_;
  bool gaussian_;
  int d_;
  int k_;
};

/// Least squares on the selected rows for B and a probit fit for beta2.
EsnsmParams esnsm_start(const EsnsmData& data);

}  // namespace esn
