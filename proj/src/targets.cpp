#include "esn/targets.hpp"

#include "esn/error.hpp"

#include <cmath>
#include <numbers>

namespace esn {

namespace {

void check_data(const Mat& data, int d, const char* what) {
  if (data.rows() < 1) throw DataError(std::string(what) + ": empty dataset");
  if (data.cols() != d) throw DataError(std::string(what) + ": data dimension does not match the prior");
  if (!data.allFinite()) throw DataError(std::string(what) + ": non-finite data");
}

void sample_moments(const Mat& data, Vec& mean, Mat& cov, Vec& skew) {
  const auto n = data.rows();
  weighted_moments(data, Vec::Constant(n, 1.0 / n), mean, cov);
  const auto d = data.cols();
  skew.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Vec c = data.col(j).array() - mean(j);
    const double s2 = c.squaredNorm() / n;
    skew(j) = s2 > 0.0 ? c.array().cube().sum() / n / std::pow(s2, 1.5) : 0.0;
  }
  if (!is_spd(cov)) cov = floor_eigenvalues(cov, 1e-6 * std::max(1.0, cov.diagonal().maxCoeff()));
}

// Skewed P1 start points that keep the first two moments of the data roughly
// in place.
std::vector<EsnParamsP1> moment_starts(const Mat& data, bool sn) {
  Vec mean;
  Mat cov;
  Vec skew;
  sample_moments(data, mean, cov, skew);
  const Vec sd = cov.diagonal().cwiseSqrt();
  std::vector<EsnParamsP1> out;
  EsnParamsP1 g;
  g.xi = mean;
  g.sigma = cov;
  g.alpha = Vec::Zero(mean.size());
  g.lambda = 0.0;
  out.push_back(g);
  for (double k : {0.5, 2.0, 5.0}) {
    for (double lam : {-1.0, 0.0, 1.0}) {
      if (sn && lam != 0.0) continue;
      EsnParamsP1 p = g;
      for (Eigen::Index j = 0; j < mean.size(); ++j) p.alpha(j) = (skew(j) >= 0.0 ? k : -k) / sd(j);
      p.lambda = lam;
      const double c0 = p.c0();
      p.xi = mean - p.sigma * p.alpha / c0 * inverse_mills(lam / c0);
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

std::string label(const std::string& prefix, int i) { return prefix + "[" + std::to_string(i + 1) + "]"; }

std::string label(const std::string& prefix, int i, int j) {
  return prefix + "[" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "]";
}

Mat chol_from_logchol(const Vec& u, int d) {
  if (u.size() != tri(d)) throw ArgumentError("chol_from_logchol: wrong length");
  Mat L = Mat::Zero(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j, ++k) L(i, j) = (i == j) ? std::exp(u(k)) : u(k);
  }
  return L;
}

Vec logchol_from_spd(const Mat& s) {
  const Mat L = spd_cholesky(s, "scale matrix").matrixL();
  const int d = static_cast<int>(s.rows());
  Vec u(tri(d));
  int k = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j, ++k) u(k) = (i == j) ? std::log(L(i, i)) : L(i, j);
  }
  return u;
}

double logchol_log_jacobian(const Mat& L) {
  const auto d = L.rows();
  double acc = static_cast<double>(d) * std::numbers::ln2;
  for (Eigen::Index i = 0; i < d; ++i) acc += static_cast<double>(d - i + 1) * std::log(L(i, i));
  return acc;
}

// ---------------------------------------------------------------- P1

EsnP1Target::EsnP1Target(Mat data, HyperParamsP1 hyper, bool skew_normal)
    : data_(std::move(data)), hyper_(std::move(hyper)), sn_(skew_normal), d_(hyper_.dim()) {
  hyper_.validate();
  check_data(data_, d_, "ESN target");
}

int EsnP1Target::dim() const { return 2 * d_ + tri(d_) + (sn_ ? 0 : 1); }

EsnParamsP1 EsnP1Target::params(const Vec& u) const {
  if (u.size() != dim()) throw ArgumentError("ESN target: wrong parameter length");
  const Mat L = chol_from_logchol(u.segment(d_, tri(d_)), d_);
  EsnParamsP1 p;
  p.xi = u.head(d_);
  p.sigma = L * L.transpose();
  p.alpha = u.segment(d_ + tri(d_), d_);
  p.lambda = sn_ ? 0.0 : u(dim() - 1);
  return p;
}

Vec EsnP1Target::pack(const EsnParamsP1& p) const {
  Vec u(dim());
  u.head(d_) = p.xi;
  u.segment(d_, tri(d_)) = logchol_from_spd(p.sigma);
  u.segment(d_ + tri(d_), d_) = p.alpha;
  if (!sn_) u(dim() - 1) = p.lambda;
  return u;
}

double EsnP1Target::log_prior(const Vec& u) const {
  const EsnParamsP1 p = params(u);
  const Mat L = chol_from_logchol(u.segment(d_, tri(d_)), d_);
  double lp;
  if (sn_) {
    lp = log_niw(p.xi, p.sigma, hyper_.xi0, hyper_.kappa, hyper_.nu, hyper_.V) -
         static_cast<double>(d_) * kLogSqrt2Pi - 0.5 * d_ * std::log(hyper_.sigma2_alpha) -
         0.5 * (p.alpha - hyper_.mu_alpha).squaredNorm() / hyper_.sigma2_alpha;
  } else {
    lp = log_prior_p1(p, hyper_);
  }
  return lp + logchol_log_jacobian(L);
}

double EsnP1Target::log_likelihood(const Vec& u) const { return loglik(params(u), data_); }

Vec EsnP1Target::sample_prior(Rng& rng) const { return pack(esn::sample_prior(hyper_, rng)); }

Vec EsnP1Target::start() const { return starts().front(); }

std::vector<Vec> EsnP1Target::starts() const {
  std::vector<Vec> out;
  for (const auto& p : moment_starts(data_, sn_)) out.push_back(pack(p));
  return out;
}

std::vector<std::string> EsnP1Target::names() const {
  std::vector<std::string> n;
  for (int i = 0; i < d_; ++i) n.push_back(label("xi", i));
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j <= i; ++j) n.push_back(label("Sigma", i, j));
  for (int i = 0; i < d_; ++i) n.push_back(label("alpha", i));
  if (!sn_) n.push_back("lambda");
  return n;
}

Vec EsnP1Target::to_constrained(const Vec& u) const {
  const EsnParamsP1 p = params(u);
  Vec t = u;
  t.segment(d_, tri(d_)) = vech(p.sigma);
  return t;
}

Vec EsnP1Target::to_unconstrained(const Vec& theta) const {
  if (theta.size() != dim()) throw ArgumentError("ESN target: wrong parameter length");
  Vec u = theta;
  u.segment(d_, tri(d_)) = logchol_from_spd(unvech(theta.segment(d_, tri(d_)), d_));
  return u;
}

// ---------------------------------------------------------------- P2

EsnP2Target::EsnP2Target(Mat data, HyperParamsP2 hyper)
    : data_(std::move(data)), hyper_(std::move(hyper)), d_(hyper_.dim()) {
  hyper_.validate();
  check_data(data_, d_, "ESN target");
}

int EsnP2Target::dim() const { return 2 * d_ + tri(d_) + 1; }

EsnParamsP2 EsnP2Target::params(const Vec& u) const {
  if (u.size() != dim()) throw ArgumentError("ESN target: wrong parameter length");
  const Mat L = chol_from_logchol(u.segment(d_, tri(d_)), d_);
  EsnParamsP2 p;
  p.xi = u.head(d_);
  p.omega = L * L.transpose();
  p.dvec = u.segment(d_ + tri(d_), d_);
  p.c = u(dim() - 1);
  return p;
}

Vec EsnP2Target::pack(const EsnParamsP2& p) const {
  Vec u(dim());
  u.head(d_) = p.xi;
  u.segment(d_, tri(d_)) = logchol_from_spd(p.omega);
  u.segment(d_ + tri(d_), d_) = p.dvec;
  u(dim() - 1) = p.c;
  return u;
}

double EsnP2Target::log_prior(const Vec& u) const {
  const Mat L = chol_from_logchol(u.segment(d_, tri(d_)), d_);
  return log_prior_p2(params(u), hyper_) + logchol_log_jacobian(L);
}

double EsnP2Target::log_likelihood(const Vec& u) const { return loglik(params(u), data_); }

Vec EsnP2Target::sample_prior(Rng& rng) const { return pack(esn::sample_prior(hyper_, rng)); }

Vec EsnP2Target::start() const { return starts().front(); }

std::vector<Vec> EsnP2Target::starts() const {
  std::vector<Vec> out;
  for (const auto& p : moment_starts(data_, false)) out.push_back(pack(p1_to_p2(p)));
  return out;
}

std::vector<std::string> EsnP2Target::names() const {
  std::vector<std::string> n;
  for (int i = 0; i < d_; ++i) n.push_back(label("xi", i));
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j <= i; ++j) n.push_back(label("Omega", i, j));
  for (int i = 0; i < d_; ++i) n.push_back(label("d", i));
  n.push_back("c");
  return n;
}

Vec EsnP2Target::to_constrained(const Vec& u) const {
  const EsnParamsP2 p = params(u);
  Vec t = u;
  t.segment(d_, tri(d_)) = vech(p.omega);
  return t;
}

Vec EsnP2Target::to_unconstrained(const Vec& theta) const {
  if (theta.size() != dim()) throw ArgumentError("ESN target: wrong parameter length");
  Vec u = theta;
  u.segment(d_, tri(d_)) = logchol_from_spd(unvech(theta.segment(d_, tri(d_)), d_));
  return u;
}

// ---------------------------------------------------------------- Gaussian

GaussianTarget::GaussianTarget(Mat data, HyperParamsP1 hyper)
    : data_(std::move(data)), hyper_(std::move(hyper)), d_(hyper_.dim()) {
  hyper_.validate();
  check_data(data_, d_, "Gaussian target");
}

int GaussianTarget::dim() const { return d_ + tri(d_); }

double GaussianTarget::log_prior(const Vec& u) const {
  const Mat L = chol_from_logchol(u.tail(tri(d_)), d_);
  return log_niw(u.head(d_), L * L.transpose(), hyper_.xi0, hyper_.kappa, hyper_.nu, hyper_.V) +
         logchol_log_jacobian(L);
}

double GaussianTarget::log_likelihood(const Vec& u) const {
  const Mat L = chol_from_logchol(u.tail(tri(d_)), d_);
  const Vec xi = u.head(d_);
  const Mat centered = data_.rowwise() - xi.transpose();
  const Mat z = L.triangularView<Eigen::Lower>().solve(centered.transpose());
  const double n = static_cast<double>(data_.rows());
  return -n * d_ * kLogSqrt2Pi - n * L.diagonal().array().log().sum() - 0.5 * z.squaredNorm();
}

Vec GaussianTarget::sample_prior(Rng& rng) const {
  const Mat sigma = sample_inverse_wishart(hyper_.V, hyper_.nu, rng);
  const Mat L = spd_cholesky(sigma, "Sigma").matrixL();
  Vec u(dim());
  u.head(d_) = hyper_.xi0 + L * std_normal_vec(rng, d_) / std::sqrt(hyper_.kappa);
  u.tail(tri(d_)) = logchol_from_spd(sigma);
  return u;
}

Vec GaussianTarget::start() const {
  Vec mean;
  Mat cov;
  Vec skew;
  sample_moments(data_, mean, cov, skew);
  Vec u(dim());
  u.head(d_) = mean;
  u.tail(tri(d_)) = logchol_from_spd(cov);
  return u;
}

std::vector<std::string> GaussianTarget::names() const {
  std::vector<std::string> n;
  for (int i = 0; i < d_; ++i) n.push_back(label("xi", i));
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j <= i; ++j) n.push_back(label("Sigma", i, j));
  return n;
}

Vec GaussianTarget::to_constrained(const Vec& u) const {
  const Mat L = chol_from_logchol(u.tail(tri(d_)), d_);
  Vec t = u;
  t.tail(tri(d_)) = vech(L * L.transpose());
  return t;
}

Vec GaussianTarget::to_unconstrained(const Vec& theta) const {
  if (theta.size() != dim()) throw ArgumentError("Gaussian target: wrong parameter length");
  Vec u = theta;
  u.tail(tri(d_)) = logchol_from_spd(unvech(theta.tail(tri(d_)), d_));
  return u;
}

}  // namespace esn
