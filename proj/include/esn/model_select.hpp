#pragma once

#include "esn/priors.hpp"

#include <string>

namespace esn {

enum class EvidenceCategory { Poor, Substantial, Strong, Decisive };

std::string to_string(EvidenceCategory c);

struct EvidenceComparison {
  double log_m1 = 0.0;
  double log_m0 = 0.0;
  double log10_bayes_factor = 0.0;
  EvidenceCategory category = EvidenceCategory::Poor;
};

/// log Gamma_d(x) = d(d-1)/4 log pi + sum_{j=1..d} log Gamma(x + (1-j)/2).
double log_mv_gamma(int d, double x);

/// Log marginal likelihood of the data (rows) under a Gaussian model with
/// the NIW block of `hyper` as conjugate prior.
double gaussian_log_evidence(const Mat& data, const HyperParamsP1& hyper);

/// Parameters of the NIW posterior after observing `data`.
struct NiwPosterior {
  Vec xi;
  double kappa = 0.0;
  double nu = 0.0;
  Mat V;
};
NiwPosterior niw_posterior(const Mat& data, const HyperParamsP1& hyper);

/// Jeffreys-type bins on log10 B10: (-inf,0.5] poor, (0.5,1] substantial,
/// (1,2] strong, (2,inf) decisive.
EvidenceCategory classify_log10(double log10_bf);
EvidenceComparison classify_bayes_factor(double log_m1, double log_m0);

}  // namespace esn
