#pragma once

#include "esn/linalg.hpp"

namespace esn {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kSqrt2 = 1.41421356237309504880;

double norm_pdf(double x);
double norm_log_pdf(double x);
double norm_cdf(double x);

/// log Phi(x), finite for every finite x. Below x = -8 the Mills ratio is
/// evaluated by its continued fraction instead of going through erfc.
double norm_log_cdf(double x);

/// phi(x)/Phi(x), evaluated in log space so it stays finite in the left tail.
double inverse_mills(double x);

/// Phi^{-1}(p) for p in (0,1).
double norm_quantile(double p);

/// Standard bivariate normal CDF P(X <= h, Y <= k) with correlation r,
/// Drezner-Genz algorithm (absolute error around 1e-15).
double bvn_cdf(double h, double k, double r);

/// log of bvn_cdf; switches to a log-space quadrature when the probability
/// underflows.
double bvn_log_cdf(double h, double k, double r);

struct MvnCdf {
  double value = 0.0;
  double error = 0.0;  ///< 0 for deterministic paths, Monte Carlo standard error otherwise
};

/// Standard trivariate normal CDF with correlation matrix `corr`, computed by
/// one-dimensional adaptive quadrature over the least correlated coordinate.
double tvn_cdf(const Vec& upper, const Mat& corr);

/// Multivariate normal CDF P(X <= upper) for X ~ N(0, cov) by randomized
/// quasi-Monte Carlo (separation of variables, Richtmyer lattice, antithetic
/// baker-transformed points). Refines until the standard error is <= `tol`
/// or `max_points` evaluations were spent.
MvnCdf mvn_cdf_qmc(const Vec& upper, const Mat& cov, double tol, long max_points = 4'000'000);

/// Dispatcher: exact for dimensions 1-3, QMC above.
MvnCdf mvn_cdf(const Vec& upper, const Mat& cov, double tol);

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
double log_sum_exp(const Vec& v);

}  // namespace esn
