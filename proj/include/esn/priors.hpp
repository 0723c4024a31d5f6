#pragma once

#include "esn/distribution.hpp"

#include <utility>

namespace esn {

/// Prior on the hidden-truncation parameters:
///   (xi, Sigma) ~ NIW(xi0, kappa, nu, V),  alpha ~ N(mu_alpha, sigma2_alpha I),
///   lambda | Sigma, alpha ~ N(0, c0^2).
struct HyperParamsP1 {
  Vec xi0;
  double kappa = 0.1;
  double nu = 6.0;
  Mat V;
  Vec mu_alpha;
  double sigma2_alpha = 10.0;

  int dim() const { return static_cast<int>(xi0.size()); }
  /// Throws DomainError unless nu > d + 3, kappa > 0, sigma2_alpha > 0 and V is SPD.
  void validate() const;
};

/// Prior on the convolution parameters:
///   (xi, Omega) ~ NIW(xi0t, kappat, nut, Vt),  dvec | Omega ~ N(mu_d, Omega / kappa_d),
///   c ~ N(0, 1).
struct HyperParamsP2 {
  Vec xi0t;
  double kappat = 0.1;
  double nut = 6.0;
  Mat Vt;
  Vec mu_d;
  double kappa_d = 0.05;

  int dim() const { return static_cast<int>(xi0t.size()); }
  void validate() const;
};

/// 2 / (sigma2_alpha (nut - d - 1)).
double kappa_d_from(double sigma2_alpha, double nut, int d);

std::pair<HyperParamsP1, HyperParamsP2> default_hyper(int d);

/// Throws DomainError unless V - Vt is positive definite and nut >= nu.
void check_pairing(const HyperParamsP1& h1, const HyperParamsP2& h2);

/// log NIW(xi, Sigma; xi0, kappa, nu, V) with the inverse-Wishart part
/// |Sigma|^{-(nu+d+1)/2} exp(-tr(V Sigma^{-1})/2) normalized by Gamma_d.
double log_niw(const Vec& xi, const Mat& sigma, const Vec& xi0, double kappa, double nu, const Mat& V);

double log_prior_p1(const EsnParamsP1& params, const HyperParamsP1& hyper);
double log_prior_p2(const EsnParamsP2& params, const HyperParamsP2& hyper);

/// Sigma ~ IW(V, nu) via the Bartlett decomposition of its Wishart inverse.
Mat sample_inverse_wishart(const Mat& V, double nu, Rng& rng);

EsnParamsP1 sample_prior(const HyperParamsP1& hyper, Rng& rng);
EsnParamsP2 sample_prior(const HyperParamsP2& hyper, Rng& rng);

}  // namespace esn
