#pragma once

// The multivariate extended skew-normal (ESN) distribution in its two
// parametrizations:
//
//   hidden truncation (P1):  Y ~ ESN(xi, Sigma, alpha, lambda)
//       f(y) = phi_d(y; xi, Sigma) Phi(lambda + alpha'(y - xi)) / Phi(lambda / c0),
//       c0 = sqrt(1 + alpha' Sigma alpha)
//
//   convolution (P2):        Y = xi + W + dvec Z,  W ~ N(0, Omega),
//       -Z ~ N(0,1) truncated to (-inf, c].
//
// The two are linked by Sigma = Omega + dvec dvec', alpha = c0 Sigma^{-1} dvec,
// lambda = c0 c.

#include "esn/linalg.hpp"
#include "esn/normal.hpp"
#include "esn/rng.hpp"

#include <array>
#include <vector>

namespace esn {

struct EsnParamsP1 {
  Vec xi;
  Mat sigma;
  Vec alpha;
  double lambda = 0.0;

  int dim() const { return static_cast<int>(xi.size()); }
  /// sqrt(1 + alpha' Sigma alpha).
  double c0() const;
  /// Throws DomainError unless the dimensions agree, all entries are finite
  /// and Sigma is SPD.
  void validate() const;

  static EsnParamsP1 univariate(double xi, double sigma2, double alpha, double lambda);
};

struct EsnParamsP2 {
  Vec xi;
  Mat omega;
  Vec dvec;
  double c = 0.0;

  int dim() const { return static_cast<int>(xi.size()); }
  void validate() const;

  static EsnParamsP2 univariate(double xi, double omega2, double dvec, double c);
};

struct MomentSummary {
  Vec mean;
  Mat variance;
  double skewness = 0.0;
  double kurtosis = 3.0;  ///< non-excess convention
};

/// Precomputed log-density of a P1 parameter set; cheap to evaluate repeatedly.
class EsnLogDensity {
 public:
  explicit EsnLogDensity(const EsnParamsP1& params);
  double operator()(const Vec& y) const;
  /// Sum over the rows of `data`.
  double sum(const Mat& data) const;

 private:
  EsnParamsP1 params_;
  Eigen::LLT<Mat> llt_;
  double log_norm_ = 0.0;  // -d/2 log 2pi - 1/2 log|Sigma| - log Phi(lambda/c0)
};

double logpdf_p1(const EsnParamsP1& params, const Vec& y);
double logpdf_p2(const EsnParamsP2& params, const Vec& y);

EsnParamsP1 p2_to_p1(const EsnParamsP2& params);
EsnParamsP2 p1_to_p2(const EsnParamsP1& params);

/// n IID draws (rows) through the convolution representation.
Mat sample(const EsnParamsP1& params, int n, Rng& rng);

/// One draw of N(0,1) truncated to (-inf, c]. Inverse-CDF for c >= -4,
/// exponential rejection in the far tail.
double sample_truncated_std(double c, Rng& rng);

/// P(Y <= y) through the (d+1)-variate normal CDF. Deterministic for d <= 2;
/// for d = 3 the returned error is the QMC standard error, refined to <= tol.
MvnCdf cdf(const EsnParamsP1& params, const Vec& y, double tol = 1e-7);

/// Phi_2(a, sigma2, alpha, lambda) = P(U <= a, W <= lambda) for the pair
/// (U, W) ~ N(0, [[sigma2, -sigma2 alpha], [-sigma2 alpha, 1 + alpha^2 sigma2]]);
/// the univariate building block of the ESN CDF.
double esn_joint_cdf(double a, double sigma2, double alpha, double lambda);
double esn_joint_log_cdf(double a, double sigma2, double alpha, double lambda);

/// Law of the sub-vector `keep` (0-based indices).
EsnParamsP1 marginal(const EsnParamsP1& params, const std::vector<int>& keep);

/// Law of the complement of `given` conditional on Y_given = y_given.
EsnParamsP1 conditional(const EsnParamsP1& params, const std::vector<int>& given, const Vec& y_given);

/// Law of shift + A' Y.
EsnParamsP1 affine(const EsnParamsP1& params, const Mat& a, const Vec& shift);

/// E[Y] and Var[Y] for any dimension.
Vec mean(const EsnParamsP1& params);
Mat covariance(const EsnParamsP1& params);

/// Mean, variance, skewness and kurtosis of a univariate ESN, from the
/// cumulants of the convolution Y = xi + omega W + dvec Z.
MomentSummary moments_univariate(const EsnParamsP1& params);

/// Cumulants 1..4 of N(0,1) truncated to [a, inf).
std::array<double, 4> truncated_normal_cumulants(double a);

double loglik(const EsnParamsP1& params, const Mat& data);
double loglik(const EsnParamsP2& params, const Mat& data);

/// (mean, biased variance, 0, l): the Gaussian MLE embedded in the ESN family,
/// a stationary point of the log-likelihood for every shift l.
EsnParamsP1 gaussian_stationary_point(const Vec& data, double l);

}  // namespace esn
