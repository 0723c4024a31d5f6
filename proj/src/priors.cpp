#include "esn/priors.hpp"

#include "esn/error.hpp"
#include "esn/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace esn {

namespace {

double log_mvn_iso(const Vec& x, const Vec& mu, double var) {
  const double d = static_cast<double>(x.size());
  return -d * kLogSqrt2Pi - 0.5 * d * std::log(var) - 0.5 * (x - mu).squaredNorm() / var;
}

// log N(x; mu, S / k) given the Cholesky factor of S.
double log_mvn_scaled(const Vec& x, const Vec& mu, const Eigen::LLT<Mat>& llt, double k) {
  const double d = static_cast<double>(x.size());
  const Vec z = llt.matrixL().solve(x - mu);
  return -d * kLogSqrt2Pi + 0.5 * d * std::log(k) - 0.5 * log_det(llt) - 0.5 * k * z.squaredNorm();
}

}  // namespace

void HyperParamsP1::validate() const {
  const int d = dim();
  if (d < 1) throw DomainError("hyperparameters: empty dimension");
  if (V.rows() != d || V.cols() != d || mu_alpha.size() != d) throw DomainError("hyperparameters: dimension mismatch");
  if (!(kappa > 0.0)) throw DomainError("hyperparameters: kappa must be positive");
  if (!(nu > d + 3)) throw DomainError("hyperparameters: nu must exceed d + 3");
  if (!(sigma2_alpha > 0.0)) throw DomainError("hyperparameters: sigma2_alpha must be positive");
  spd_cholesky(V, "V");
}

void HyperParamsP2::validate() const {
  const int d = dim();
  if (d < 1) throw DomainError("hyperparameters: empty dimension");
  if (Vt.rows() != d || Vt.cols() != d || mu_d.size() != d) throw DomainError("hyperparameters: dimension mismatch");
  if (!(kappat > 0.0)) throw DomainError("hyperparameters: kappat must be positive");
  if (!(nut > d + 3)) throw DomainError("hyperparameters: nut must exceed d + 3");
  if (!(kappa_d > 0.0)) throw DomainError("hyperparameters: kappa_d must be positive");
  spd_cholesky(Vt, "Vt");
}

double kappa_d_from(double sigma2_alpha, double nut, int d) {
  const double denom = sigma2_alpha * (nut - d - 1.0);
  if (!(denom > 0.0)) throw DomainError("kappa_d: need sigma2_alpha > 0 and nut > d + 1");
  return 2.0 / denom;
}

std::pair<HyperParamsP1, HyperParamsP2> default_hyper(int d) {
  if (d < 1) throw ArgumentError("default_hyper: d must be >= 1");
  HyperParamsP1 h1;
  h1.xi0 = Vec::Zero(d);
  h1.kappa = 0.1;
  h1.nu = std::max(6.0, d + 4.0);
  h1.V = 12.0 * Mat::Identity(d, d);
  h1.mu_alpha = Vec::Zero(d);
  h1.sigma2_alpha = 10.0;

  HyperParamsP2 h2;
  h2.xi0t = h1.xi0;
  h2.kappat = h1.kappa;
  h2.nut = h1.nu;
  h2.Vt = 2.0 * Mat::Identity(d, d);
  h2.mu_d = Vec::Zero(d);
  h2.kappa_d = kappa_d_from(h1.sigma2_alpha, h2.nut, d);
  return {h1, h2};
}

void check_pairing(const HyperParamsP1& h1, const HyperParamsP2& h2) {
  if (h1.dim() != h2.dim()) throw DomainError("hyperparameters: dimension mismatch between parametrizations");
  if (!is_spd(h1.V - h2.Vt)) throw DomainError("hyperparameters: V - Vt must be positive definite");
  if (h2.nut < h1.nu) throw DomainError("hyperparameters: nut must be >= nu");
}

double log_niw(const Vec& xi, const Mat& sigma, const Vec& xi0, double kappa, double nu, const Mat& V) {
  const int d = static_cast<int>(xi.size());
  const auto llt = spd_cholesky(sigma, "Sigma");
  const auto llt_v = spd_cholesky(V, "V");
  const double log_det_s = log_det(llt);
  const double trace = (llt.solve(V)).trace();
  const double log_iw = 0.5 * nu * log_det(llt_v) - 0.5 * nu * d * std::numbers::ln2 - log_mv_gamma(d, 0.5 * nu) -
                        0.5 * (nu + d + 1.0) * log_det_s - 0.5 * trace;
  return log_mvn_scaled(xi, xi0, llt, kappa) + log_iw;
}

double log_prior_p1(const EsnParamsP1& params, const HyperParamsP1& hyper) {
  params.validate();
  if (params.dim() != hyper.dim()) throw ArgumentError("log_prior_p1: dimension mismatch");
  const double c0 = params.c0();
  return log_niw(params.xi, params.sigma, hyper.xi0, hyper.kappa, hyper.nu, hyper.V) +
         log_mvn_iso(params.alpha, hyper.mu_alpha, hyper.sigma2_alpha) + norm_log_pdf(params.lambda / c0) -
         std::log(c0);
}

double log_prior_p2(const EsnParamsP2& params, const HyperParamsP2& hyper) {
  params.validate();
  if (params.dim() != hyper.dim()) throw ArgumentError("log_prior_p2: dimension mismatch");
  const auto llt = spd_cholesky(params.omega, "Omega");
  return log_niw(params.xi, params.omega, hyper.xi0t, hyper.kappat, hyper.nut, hyper.Vt) +
         log_mvn_scaled(params.dvec, hyper.mu_d, llt, hyper.kappa_d) + norm_log_pdf(params.c);
}

Mat sample_inverse_wishart(const Mat& V, double nu, Rng& rng) {
  const auto d = V.rows();
  if (!(nu > d - 1)) throw DomainError("inverse Wishart: nu must exceed d - 1");
  // W = L A A' L' ~ Wishart(V^{-1}, nu) with L L' = V^{-1}; Sigma = W^{-1}.
  const auto llt_v = spd_cholesky(V, "V");
  const Mat L = spd_cholesky(spd_inverse(llt_v), "V^{-1}").matrixL();
  Mat A = Mat::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    std::chi_squared_distribution<double> chi(nu - static_cast<double>(i));
    A(i, i) = std::sqrt(chi(rng));
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = std_normal(rng);
  }
  const Mat LA = L * A;
  const Mat inv = LA.triangularView<Eigen::Lower>().solve(Mat::Identity(d, d));
  return symmetrize(inv.transpose() * inv);
}

EsnParamsP1 sample_prior(const HyperParamsP1& hyper, Rng& rng) {
  hyper.validate();
  const int d = hyper.dim();
  EsnParamsP1 p;
  p.sigma = sample_inverse_wishart(hyper.V, hyper.nu, rng);
  const Mat L = spd_cholesky(p.sigma, "Sigma").matrixL();
  p.xi = hyper.xi0 + L * std_normal_vec(rng, d) / std::sqrt(hyper.kappa);
  p.alpha = hyper.mu_alpha + std::sqrt(hyper.sigma2_alpha) * std_normal_vec(rng, d);
  p.lambda = p.c0() * std_normal(rng);
  return p;
}

EsnParamsP2 sample_prior(const HyperParamsP2& hyper, Rng& rng) {
  hyper.validate();
  const int d = hyper.dim();
  EsnParamsP2 p;
  p.omega = sample_inverse_wishart(hyper.Vt, hyper.nut, rng);
  const Mat L = spd_cholesky(p.omega, "Omega").matrixL();
  p.xi = hyper.xi0t + L * std_normal_vec(rng, d) / std::sqrt(hyper.kappat);
  p.dvec = hyper.mu_d + L * std_normal_vec(rng, d) / std::sqrt(hyper.kappa_d);
  p.c = std_normal(rng);
  return p;
}

}  // namespace esn
