#include "esn/distribution.hpp"

#include "esn/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace esn {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + " has non-finite entries");
}

std::vector<int> complement(const std::vector<int>& idx, int d, const char* op) {
  if (idx.empty() || static_cast<int>(idx.size()) >= d) {
    throw ArgumentError(std::string(op) + ": index set must be a nonempty strict subset");
  }
  std::vector<bool> mark(d, false);
  for (int i : idx) {
    if (i < 0 || i >= d) throw ArgumentError(std::string(op) + ": index out of range");
    if (mark[i]) throw ArgumentError(std::string(op) + ": duplicate index");
    mark[i] = true;
  }
  std::vector<int> rest;
  for (int i = 0; i < d; ++i)
    if (!mark[i]) rest.push_back(i);
  return rest;
}

// Symmetric square root factor R with R R' = m, tolerating a numerically
// semidefinite m (Omega = Sigma - dvec dvec' can lose definiteness in floating
// point when alpha is very large).
Mat sqrt_factor(const Mat& m) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(m));
  const Vec ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.asDiagonal();
}

}  // namespace

double EsnParamsP1::c0() const { return std::sqrt(1.0 + alpha.dot(sigma * alpha)); }

void EsnParamsP1::validate() const {
  const auto d = xi.size();
  if (d == 0) throw DomainError("ESN parameters: empty location");
  if (sigma.rows() != d || sigma.cols() != d || alpha.size() != d) {
    throw DomainError("ESN parameters: dimension mismatch");
  }
  require_finite(xi, "xi");
  require_finite(alpha, "alpha");
  if (!std::isfinite(lambda)) throw DomainError("lambda is not finite");
  spd_cholesky(sigma, "Sigma");
}

EsnParamsP1 EsnParamsP1::univariate(double xi, double sigma2, double alpha, double lambda) {
  EsnParamsP1 p;
  p.xi = Vec::Constant(1, xi);
  p.sigma = Mat::Constant(1, 1, sigma2);
  p.alpha = Vec::Constant(1, alpha);
  p.lambda = lambda;
  return p;
}

void EsnParamsP2::validate() const {
  const auto d = xi.size();
  if (d == 0) throw DomainError("ESN parameters: empty location");
  if (omega.rows() != d || omega.cols() != d || dvec.size() != d) {
    throw DomainError("ESN parameters: dimension mismatch");
  }
  require_finite(xi, "xi");
  require_finite(dvec, "d");
  if (!std::isfinite(c)) throw DomainError("c is not finite");
  spd_cholesky(omega, "Omega");
  spd_cholesky(Mat(omega + dvec * dvec.transpose()), "Omega + d d'");
}

EsnParamsP2 EsnParamsP2::univariate(double xi, double omega2, double dvec, double c) {
  EsnParamsP2 p;
  p.xi = Vec::Constant(1, xi);
  p.omega = Mat::Constant(1, 1, omega2);
  p.dvec = Vec::Constant(1, dvec);
  p.c = c;
  return p;
}

EsnLogDensity::EsnLogDensity(const EsnParamsP1& params) : params_(params) {
  params_.validate();
  llt_ = spd_cholesky(params_.sigma, "Sigma");
  const double d = params_.dim();
  log_norm_ = -d * kLogSqrt2Pi - 0.5 * log_det(llt_) - norm_log_cdf(params_.lambda / params_.c0());
}

double EsnLogDensity::operator()(const Vec& y) const {
  if (y.size() != params_.xi.size()) throw ArgumentError("logpdf: dimension mismatch");
  const Vec r = y - params_.xi;
  const Vec z = llt_.matrixL().solve(r);
  return log_norm_ - 0.5 * z.squaredNorm() + norm_log_cdf(params_.lambda + params_.alpha.dot(r));
}

double EsnLogDensity::sum(const Mat& data) const {
  if (data.rows() < 1) throw ArgumentError("loglik: empty data");
  if (data.cols() != params_.xi.size()) throw ArgumentError("loglik: dimension mismatch");
  if (params_.dim() == 1) {
    const double xi = params_.xi(0);
    const double a = params_.alpha(0);
    const double inv_sd = 1.0 / llt_.matrixL()(0, 0);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double r = data(i, 0) - xi;
      const double z = r * inv_sd;
      acc += -0.5 * z * z + norm_log_cdf(params_.lambda + a * r);
    }
    return acc + static_cast<double>(data.rows()) * log_norm_;
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) acc += (*this)(data.row(i).transpose());
  return acc;
}

double logpdf_p1(const EsnParamsP1& params, const Vec& y) { return EsnLogDensity(params)(y); }

double logpdf_p2(const EsnParamsP2& params, const Vec& y) {
  params.validate();
  if (y.size() != params.xi.size()) throw ArgumentError("logpdf: dimension mismatch");
  const Mat total = params.omega + params.dvec * params.dvec.transpose();
  const auto llt = spd_cholesky(total, "Omega + d d'");
  const Vec sinv_d = llt.solve(params.dvec);
  const double delta = params.dvec.dot(sinv_d);
  if (!(delta < 1.0)) throw NumericalError("logpdf_p2: d'(Omega + dd')^{-1} d >= 1");
  const double c0 = 1.0 / std::sqrt(1.0 - delta);
  const Vec r = y - params.xi;
  const Vec z = llt.matrixL().solve(r);
  const double d = params.dim();
  return -d * kLogSqrt2Pi - 0.5 * log_det(llt) - 0.5 * z.squaredNorm() +
         norm_log_cdf(c0 * (params.c + sinv_d.dot(r))) - norm_log_cdf(params.c);
}

EsnParamsP1 p2_to_p1(const EsnParamsP2& params) {
  params.validate();
  EsnParamsP1 out;
  out.xi = params.xi;
  out.sigma = symmetrize(params.omega + params.dvec * params.dvec.transpose());
  const auto llt = spd_cholesky(out.sigma, "Omega + d d'");
  const Vec sinv_d = llt.solve(params.dvec);
  const double delta = params.dvec.dot(sinv_d);
  if (!(delta < 1.0)) throw NumericalError("p2_to_p1: d'Sigma^{-1}d >= 1");
  const double c0 = 1.0 / std::sqrt(1.0 - delta);
  out.alpha = c0 * sinv_d;
  out.lambda = c0 * params.c;
  return out;
}

EsnParamsP2 p1_to_p2(const EsnParamsP1& params) {
  params.validate();
  const double c0 = params.c0();
  EsnParamsP2 out;
  out.xi = params.xi;
  out.dvec = params.sigma * params.alpha / c0;
  out.omega = symmetrize(params.sigma - out.dvec * out.dvec.transpose());
  out.c = params.lambda / c0;
  return out;
}

double sample_truncated_std(double c, Rng& rng) {
  if (!std::isfinite(c)) {
    if (c == std::numeric_limits<double>::infinity()) return std_normal(rng);
    throw ArgumentError("sample_truncated_std: truncation point must be finite");
  }
  if (c >= -4.0) {
    const double p = norm_cdf(c);
    double u;
    do {
      u = uniform01(rng) * p;
    } while (u <= 0.0);
    return std::min(norm_quantile(u), c);
  }
  // Far tail: X = -T >= a with a > 4, exponential proposal with the optimal rate.
  const double a = -c;
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  while (true) {
    double u1;
    do {
      u1 = uniform01(rng);
    } while (u1 <= 0.0);
    const double z = a - std::log(u1) / rate;
    const double u2 = uniform01(rng);
    if (u2 <= std::exp(-0.5 * (z - rate) * (z - rate))) return -z;
  }
}

Mat sample(const EsnParamsP1& params, int n, Rng& rng) {
  if (n < 1) throw ArgumentError("sample: n must be >= 1");
  const EsnParamsP2 p2 = p1_to_p2(params);
  const Mat root = sqrt_factor(p2.omega);
  const int d = params.dim();
  Mat out(n, d);
  for (int i = 0; i < n; ++i) {
    const Vec w = root * std_normal_vec(rng, d);
    const double z3 = -sample_truncated_std(p2.c, rng);
    out.row(i) = (p2.xi + w + p2.dvec * z3).transpose();
  }
  return out;
}

double esn_joint_cdf(double a, double sigma2, double alpha, double lambda) {
  const double s = std::sqrt(sigma2);
  const double c0 = std::sqrt(1.0 + alpha * alpha * sigma2);
  return bvn_cdf(a / s, lambda / c0, -s * alpha / c0);
}

double esn_joint_log_cdf(double a, double sigma2, double alpha, double lambda) {
  const double s = std::sqrt(sigma2);
  const double c0 = std::sqrt(1.0 + alpha * alpha * sigma2);
  return bvn_log_cdf(a / s, lambda / c0, -s * alpha / c0);
}

MvnCdf cdf(const EsnParamsP1& params, const Vec& y, double tol) {
  if (!(tol > 0.0)) throw ArgumentError("cdf: tolerance must be positive");
  params.validate();
  const int d = params.dim();
  if (y.size() != d) throw ArgumentError("cdf: dimension mismatch");
  const double c0 = params.c0();
  const double norm = norm_cdf(params.lambda / c0);
  Mat cov(d + 1, d + 1);
  const Vec sa = params.sigma * params.alpha;
  cov.topLeftCorner(d, d) = params.sigma;
  cov.topRightCorner(d, 1) = -sa;
  cov.bottomLeftCorner(1, d) = -sa.transpose();
  cov(d, d) = c0 * c0;
  Vec upper(d + 1);
  upper.head(d) = y - params.xi;
  upper(d) = params.lambda;
  // The QMC error is an absolute error on the numerator.
  const MvnCdf joint = mvn_cdf(upper, cov, tol * norm);
  return {std::clamp(joint.value / norm, 0.0, 1.0), joint.error / norm};
}

EsnParamsP1 marginal(const EsnParamsP1& params, const std::vector<int>& keep) {
  params.validate();
  const int d = params.dim();
  const std::vector<int> drop = complement(keep, d, "marginal");
  const Mat s_ii = select(params.sigma, keep, keep);
  const Mat s_ij = select(params.sigma, keep, drop);
  const Mat s_jj = select(params.sigma, drop, drop);
  const Vec a_i = select(params.alpha, keep);
  const Vec a_j = select(params.alpha, drop);
  const auto llt_ii = spd_cholesky(s_ii, "Sigma_ii");
  // Schur complement of the kept block: variance of the dropped coordinates
  // left unexplained by the kept ones.
  const Mat s_jj_i = s_jj - s_ij.transpose() * llt_ii.solve(s_ij);
  const double ci = 1.0 / std::sqrt(1.0 + a_j.dot(s_jj_i * a_j));
  const Vec a_tilde = a_i + llt_ii.solve(s_ij * a_j);
  EsnParamsP1 out;
  out.xi = select(params.xi, keep);
  out.sigma = s_ii;
  out.alpha = ci * a_tilde;
  out.lambda = ci * params.lambda;
  return out;
}

EsnParamsP1 conditional(const EsnParamsP1& params, const std::vector<int>& given, const Vec& y_given) {
  params.validate();
  const int d = params.dim();
  const std::vector<int> rest = complement(given, d, "conditional");
  if (y_given.size() != static_cast<Eigen::Index>(given.size())) {
    throw ArgumentError("conditional: conditioning value has the wrong dimension");
  }
  const Mat s_ii = select(params.sigma, rest, rest);
  const Mat s_ij = select(params.sigma, rest, given);
  const Mat s_jj = select(params.sigma, given, given);
  const Vec a_i = select(params.alpha, rest);
  const Vec a_j = select(params.alpha, given);
  const auto llt_jj = spd_cholesky(s_jj, "Sigma_jj");
  const Vec dev = y_given - select(params.xi, given);
  const Vec a_tilde_j = a_j + llt_jj.solve(s_ij.transpose() * a_i);
  EsnParamsP1 out;
  out.xi = select(params.xi, rest) + s_ij * llt_jj.solve(dev);
  out.sigma = symmetrize(s_ii - s_ij * llt_jj.solve(s_ij.transpose()));
  out.alpha = a_i;
  out.lambda = params.lambda + a_tilde_j.dot(dev);
  return out;
}

EsnParamsP1 affine(const EsnParamsP1& params, const Mat& a, const Vec& shift) {
  params.validate();
  const int d = params.dim();
  if (a.rows() != d || a.cols() != d || shift.size() != d) throw ArgumentError("affine: dimension mismatch");
  Eigen::JacobiSVD<Mat> svd(a);
  const Vec sv = svd.singularValues();
  if (!(sv(d - 1) > 0.0) || sv(0) / sv(d - 1) > 1e12) throw ArgumentError("affine: matrix is singular");
  EsnParamsP1 out;
  out.xi = shift + a.transpose() * params.xi;
  out.sigma = symmetrize(a.transpose() * params.sigma * a);
  out.alpha = a.partialPivLu().solve(params.alpha);
  out.lambda = params.lambda;
  return out;
}

std::array<double, 4> truncated_normal_cumulants(double a) {
  // Cumulants are derivatives of the mean mu + h(a - mu) in the location mu,
  // with h the inverse Mills ratio of the upper tail and h' = h (h - z).
  const double h = inverse_mills(-a);  // phi(a) / (1 - Phi(a))
  const double u = h - a;
  return {h, 1.0 - h * u, h * (u * u + h * u - 1.0), -h * (u * u * u + 4.0 * h * u * u + h * h * u - 3.0 * u - h)};
}

Vec mean(const EsnParamsP1& params) {
  const EsnParamsP2 p2 = p1_to_p2(params);
  return p2.xi + p2.dvec * inverse_mills(p2.c);
}

Mat covariance(const EsnParamsP1& params) {
  const EsnParamsP2 p2 = p1_to_p2(params);
  const auto k = truncated_normal_cumulants(-p2.c);
  return symmetrize(p2.omega + k[1] * p2.dvec * p2.dvec.transpose());
}

MomentSummary moments_univariate(const EsnParamsP1& params) {
  if (params.dim() != 1) throw ArgumentError("moments_univariate: only d = 1 is supported");
  const EsnParamsP2 p2 = p1_to_p2(params);
  const double dv = p2.dvec(0);
  // Z = -T with T <= c, i.e. Z is standard normal truncated to [-c, inf).
  const auto k = truncated_normal_cumulants(-p2.c);
  const double var = p2.omega(0, 0) + dv * dv * k[1];
  MomentSummary out;
  out.mean = Vec::Constant(1, p2.xi(0) + dv * k[0]);
  out.variance = Mat::Constant(1, 1, var);
  out.skewness = dv * dv * dv * k[2] / std::pow(var, 1.5);
  out.kurtosis = 3.0 + dv * dv * dv * dv * k[3] / (var * var);
  return out;
}

double loglik(const EsnParamsP1& params, const Mat& data) { return EsnLogDensity(params).sum(data); }

double loglik(const EsnParamsP2& params, const Mat& data) { return EsnLogDensity(p2_to_p1(params)).sum(data); }

EsnParamsP1 gaussian_stationary_point(const Vec& data, double l) {
  const auto n = data.size();
  if (n < 2) throw ArgumentError("gaussian_stationary_point: need at least two observations");
  const double m = data.mean();
  const double var = data.squaredNorm() / static_cast<double>(n) - m * m;
  if (!(var > 0.0)) throw DomainError("gaussian_stationary_point: degenerate sample variance");
  return EsnParamsP1::univariate(m, var, 0.0, l);
}

}  // namespace esn
