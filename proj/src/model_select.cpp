#include "esn/model_select.hpp"

#include "esn/error.hpp"

#include <cmath>
#include <numbers>

namespace esn {

std::string to_string(EvidenceCategory c) {
  switch (c) {
    case EvidenceCategory::Poor: return "poor";
    case EvidenceCategory::Substantial: return "substantial";
    case EvidenceCategory::Strong: return "strong";
    case EvidenceCategory::Decisive: return "decisive";
  }
  return "poor";
}

double log_mv_gamma(int d, double x) {
  if (d < 1) throw ArgumentError("log_mv_gamma: d must be >= 1");
  if (!(x > 0.5 * (d - 1))) throw DomainError("log_mv_gamma: argument must exceed (d-1)/2");
  double acc = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= d; ++j) acc += std::lgamma(x + 0.5 * (1 - j));
  return acc;
}

NiwPosterior niw_posterior(const Mat& data, const HyperParamsP1& hyper) {
  hyper.validate();
  const auto n = data.rows();
  if (n < 1) throw ArgumentError("niw_posterior: empty data");
  if (data.cols() != hyper.dim()) throw ArgumentError("niw_posterior: dimension mismatch");
  const double nd = static_cast<double>(n);
  const Vec zbar = data.colwise().mean().transpose();
  const Mat centered = data.rowwise() - zbar.transpose();
  const Vec dev = zbar - hyper.xi0;
  NiwPosterior post;
  post.kappa = hyper.kappa + nd;
  post.nu = hyper.nu + nd;
  post.xi = (hyper.kappa * hyper.xi0 + nd * zbar) / post.kappa;
  post.V = symmetrize(hyper.V + centered.transpose() * centered +
                      (hyper.kappa * nd / post.kappa) * dev * dev.transpose());
  return post;
}

double gaussian_log_evidence(const Mat& data, const HyperParamsP1& hyper) {
  const NiwPosterior post = niw_posterior(data, hyper);
  const int d = hyper.dim();
  const double nd = static_cast<double>(data.rows());
  const double log_det_v = log_det(spd_cholesky(hyper.V, "V"));
  const double log_det_vn = log_det(spd_cholesky(post.V, "V_n"));
  return -0.5 * nd * d * std::log(std::numbers::pi) + log_mv_gamma(d, 0.5 * post.nu) -
         log_mv_gamma(d, 0.5 * hyper.nu) + 0.5 * hyper.nu * log_det_v - 0.5 * post.nu * log_det_vn +
         0.5 * d * (std::log(hyper.kappa) - std::log(post.kappa));
}

EvidenceCategory classify_log10(double log10_bf) {
  if (log10_bf <= 0.5) return EvidenceCategory::Poor;
  if (log10_bf <= 1.0) return EvidenceCategory::Substantial;
  if (log10_bf <= 2.0) return EvidenceCategory::Strong;
  return EvidenceCategory::Decisive;
}

EvidenceComparison classify_bayes_factor(double log_m1, double log_m0) {
  if (!std::isfinite(log_m1) || !std::isfinite(log_m0)) throw ArgumentError("classify_bayes_factor: non-finite evidence");
  EvidenceComparison out;
  out.log_m1 = log_m1;
  out.log_m0 = log_m0;
  out.log10_bayes_factor = (log_m1 - log_m0) / std::numbers::ln10;
  out.category = classify_log10(out.log10_bayes_factor);
  return out;
}

}  // namespace esn
