#pragma once

// Posterior targets for the IID models. Scale matrices are carried in
// log-Cholesky coordinates: Sigma = L L' with L lower triangular, diagonal
// exp(u_ii), stored row-major over the lower triangle.

#include "esn/priors.hpp"
#include "esn/smc.hpp"

namespace esn {

Mat chol_from_logchol(const Vec& u, int d);
Vec logchol_from_spd(const Mat& s);
/// log |d vech(Sigma) / d u| for the log-Cholesky map at factor L.
double logchol_log_jacobian(const Mat& L);

/// Number of free entries of a d x d symmetric matrix.
constexpr int tri(int d) { return d * (d + 1) / 2; }

/// IID ESN posterior under P1 with the default prior family. With
/// `skew_normal` set, lambda is fixed at 0 and dropped from the parameters.
class EsnP1Target : public TargetModel {
 public:
  EsnP1Target(Mat data, HyperParamsP1 hyper, bool skew_normal = false);

  int dim() const override;
  double log_prior(const Vec& u) const override;
  double log_likelihood(const Vec& u) const override;
  Vec sample_prior(Rng& rng) const override;
  Vec start() const override;
  std::vector<std::string> names() const override;
  Vec to_constrained(const Vec& u) const override;
  Vec to_unconstrained(const Vec& theta) const override;

  EsnParamsP1 params(const Vec& u) const;
  Vec pack(const EsnParamsP1& p) const;
  /// Start points for the Laplace initializer: the Gaussian stationary point
  /// is a critical point of the likelihood, so skewed starts are added.
  std::vector<Vec> starts() const;

 private:
  Mat data_;
  HyperParamsP1 hyper_;
  bool sn_;
  int d_;
};

class EsnP2Target : public TargetModel {
 public:
  EsnP2Target(Mat data, HyperParamsP2 hyper);

  int dim() const override;
  double log_prior(const Vec& u) const override;
  double log_likelihood(const Vec& u) const override;
  Vec sample_prior(Rng& rng) const override;
  Vec start() const override;
  std::vector<std::string> names() const override;
  Vec to_constrained(const Vec& u) const override;
  Vec to_unconstrained(const Vec& theta) const override;

  EsnParamsP2 params(const Vec& u) const;
  Vec pack(const EsnParamsP2& p) const;
  std::vector<Vec> starts() const;

 private:
  Mat data_;
  HyperParamsP2 hyper_;
  int d_;
};

/// Gaussian model with the NIW block of a P1 prior; its evidence is known in
/// closed form.
class GaussianTarget : public TargetModel {
 public:
  GaussianTarget(Mat data, HyperParamsP1 hyper);

  int dim() const override;
  double log_prior(const Vec& u) const override;
  double log_likelihood(const Vec& u) const override;
  Vec sample_prior(Rng& rng) const override;
  Vec start() const override;
  std::vector<std::string> names() const override;
  Vec to_constrained(const Vec& u) const override;
  Vec to_unconstrained(const Vec& theta) const override;

 private:
  Mat data_;
  HyperParamsP1 hyper_;
  int d_;
};

/// Labels "prefix[i]" and "prefix[i,j]" (1-based) used in summaries.
std::string label(const std::string& prefix, int i);
std::string label(const std::string& prefix, int i, int j);

}  // namespace esn
