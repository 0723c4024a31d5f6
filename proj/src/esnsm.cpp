#include "esn/esnsm.hpp"

#include "esn/error.hpp"
#include "esn/model_select.hpp"
#include "esn/priors.hpp"
#include "esn/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace esn {

namespace {

Mat gram(const Mat& x) {
  const Mat g = x.transpose() * x;
  if (!is_spd(g)) throw DataError("sample-selection model: X'X is singular");
  return g;
}

double log_unit_ball_volume(int d) { return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0); }

}  // namespace

// ---------------------------------------------------------------- parameters

Mat EsnsmParams::sigma() const {
  const int d = dim();
  Mat s(d + 1, d + 1);
  s.topLeftCorner(d, d) = sigma1;
  s.topRightCorner(d, 1) = sigma12;
  s.bottomLeftCorner(1, d) = sigma12.transpose();
  s(d, d) = 1.0;
  return s;
}

Vec EsnsmParams::xi() const {
  const Mat s = sigma();
  const double c0 = std::sqrt(1.0 + alpha.dot(s * alpha));
  return -(s * alpha / c0) * inverse_mills(lambda / c0);
}

EsnParamsP1 EsnsmParams::error_law() const {
  EsnParamsP1 p;
  p.sigma = sigma();
  p.alpha = alpha;
  p.lambda = lambda;
  p.xi = xi();
  return p;
}

void EsnsmParams::validate() const {
  const int d = dim();
  const int k = n_covariates();
  if (d < 1 || k < 1) throw DomainError("sample-selection parameters: empty blocks");
  if (sigma1.cols() != d || sigma12.size() != d || alpha.size() != d + 1 || B.rows() != d || B.cols() != k) {
    throw DomainError("sample-selection parameters: dimension mismatch");
  }
  if (!B.allFinite() || !beta2.allFinite() || !sigma12.allFinite() || !alpha.allFinite() || !std::isfinite(lambda)) {
    throw DomainError("sample-selection parameters: non-finite entries");
  }
  spd_cholesky(sigma(), "Sigma");
}

void EsnsmData::validate(int d) const {
  const auto n = x.rows();
  if (n < 1) throw DataError("sample-selection data: no observations");
  if (static_cast<Eigen::Index>(s.size()) != n || y.rows() != n || y.cols() != d) {
    throw DataError("sample-selection data: inconsistent sizes");
  }
  if (!x.allFinite()) throw DataError("sample-selection data: non-finite covariates");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (s[i] != 0 && s[i] != 1) throw DataError("sample-selection data: selection indicator must be 0 or 1");
    for (Eigen::Index j = 0; j < d; ++j) {
      const bool observed = std::isfinite(y(i, j));
      if (s[i] == 1 && !observed) throw DataError("sample-selection data: selected row with missing outcome");
      if (s[i] == 0 && !std::isnan(y(i, j))) throw DataError("sample-selection data: censored row with an outcome");
    }
  }
}

double EsnsmData::censored_fraction() const {
  if (s.empty()) return 0.0;
  return static_cast<double>(std::count(s.begin(), s.end(), 0)) / static_cast<double>(s.size());
}

EsnsmParams design_params(double rho) {
  if (!(std::abs(rho) < 1.0)) throw ArgumentError("design_params: |rho| must be < 1");
  EsnsmParams p;
  p.B = Mat(1, 3);
  p.B << 3.0, -2.0, 0.0;
  p.beta2 = Vec(3);
  p.beta2 << 1.5, 0.0, 2.0;
  p.sigma1 = Mat::Constant(1, 1, 6.0);
  p.sigma12 = Vec::Constant(1, rho * std::sqrt(6.0));
  p.alpha = Vec(2);
  p.alpha << 2.0, 1.0;
  p.lambda = -2.0;
  return p;
}

Mat design_covariates(int n, Rng& rng) {
  if (n < 1) throw ArgumentError("design_covariates: n must be >= 1");
  Mat x(n, 3);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::sqrt(2.0) * std_normal(rng);
    x(i, 2) = std::sqrt(2.0) * std_normal(rng);
  }
  return x;
}

EsnsmData simulate(const EsnsmParams& params, const Mat& x, Rng& rng) {
  params.validate();
  const int d = params.dim();
  if (x.cols() != params.n_covariates()) throw ArgumentError("simulate: covariate dimension mismatch");
  const int n = static_cast<int>(x.rows());
  const Mat eps = sample(params.error_law(), n, rng);
  EsnsmData out;
  out.x = x;
  out.s.resize(n);
  out.y = Mat::Constant(n, d, kMissing);
  for (int i = 0; i < n; ++i) {
    const Vec xi = x.row(i).transpose();
    const double s_star = params.beta2.dot(xi) + eps(i, d);
    out.s[i] = s_star > 0.0 ? 1 : 0;
    if (out.s[i] == 1) out.y.row(i) = (params.B * xi + eps.row(i).head(d).transpose()).transpose();
  }
  return out;
}

// ---------------------------------------------------------------- likelihood

double loglik(const EsnsmParams& params, const EsnsmData& data) {
  params.validate();
  const int d = params.dim();
  data.validate(d);
  if (data.x.cols() != params.n_covariates()) throw DataError("sample-selection data: covariate dimension mismatch");

  const Vec xi = params.xi();
  const Vec xi1 = xi.head(d);
  const double xi2 = xi(d);
  const Vec a1 = params.alpha.head(d);
  const double a2 = params.alpha(d);
  const Vec& s12 = params.sigma12;
  const auto llt1 = spd_cholesky(params.sigma1, "Sigma1");
  const Vec s1inv_s12 = llt1.solve(s12);

  // Censored rows: marginal law of eps_2.
  const double a2_tilde = a2 + s12.dot(a1);
  const Mat s11_2 = params.sigma1 - s12 * s12.transpose();
  const double c2 = 1.0 / std::sqrt(1.0 + a1.dot(s11_2 * a1));
  const double log_norm0 = norm_log_cdf(c2 * params.lambda / std::sqrt(1.0 + c2 * c2 * a2_tilde * a2_tilde));

  // Observed rows: marginal of eps_1 times the conditional law of eps_2.
  const double s22_1 = 1.0 - s12.dot(s1inv_s12);
  if (!(s22_1 > 0.0)) throw DomainError("sample-selection parameters: Sigma is not positive definite");
  const Vec a1_tilde = a1 + s1inv_s12 * a2;
  const double c1 = 1.0 / std::sqrt(1.0 + a2 * a2 * s22_1);
  const double log_norm1 = norm_log_cdf(c1 * params.lambda / std::sqrt(1.0 + c1 * c1 * a1_tilde.dot(params.sigma1 * a1_tilde)));
  const double log_phi_const = -d * kLogSqrt2Pi - 0.5 * log_det(llt1);

  double acc = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const Vec x = data.x.row(i).transpose();
    const double lin2 = params.beta2.dot(x);
    if (data.s[i] == 0) {
      acc += esn_joint_log_cdf(-lin2 - xi2, 1.0, c2 * a2_tilde, c2 * params.lambda) - log_norm0;
    } else {
      const Vec e = data.y.row(i).transpose() - params.B * x - xi1;
      const Vec z = llt1.matrixL().solve(e);
      const double m = lin2 + xi2 + s1inv_s12.dot(e);
      acc += log_phi_const - 0.5 * z.squaredNorm() +
             esn_joint_log_cdf(m, s22_1, -a2, params.lambda + a1_tilde.dot(e)) - log_norm1;
    }
  }
  return acc;
}

// ---------------------------------------------------------------- prior

void EsnsmHyper::validate(int d, int k) const {
  if (!(kappa > 0.0)) throw DomainError("sample-selection prior: kappa must be positive");
  if (!(nu > d + 3)) throw DomainError("sample-selection prior: nu must exceed d + 3");
  if (V.rows() != d || V.cols() != d || M.rows() != d || M.cols() != k || mu_beta2.size() != k ||
      mu_alpha.size() != d + 1) {
    throw DomainError("sample-selection prior: dimension mismatch");
  }
  if (!(c_beta1 > 0.0) || !(c_beta2 > 0.0)) throw DomainError("sample-selection prior: scale factors must be positive");
  if (!(sigma2_alpha > 0.0)) throw DomainError("sample-selection prior: sigma2_alpha must be positive");
  spd_cholesky(V, "V");
}

EsnsmHyper default_esnsm_hyper(int d, int k, int n) {
  if (d < 1 || k < 1 || n < 1) throw ArgumentError("default_esnsm_hyper: sizes must be positive");
  EsnsmHyper h;
  h.kappa = 0.1;
  h.nu = std::max(6.0, d + 4.0);
  h.V = 12.0 * Mat::Identity(d, d);
  h.M = Mat::Zero(d, k);
  h.c_beta1 = 5.0 * n;
  h.mu_beta2 = Vec::Zero(k);
  h.c_beta2 = 5.0 * n;
  h.mu_alpha = Vec::Zero(d + 1);
  h.sigma2_alpha = 10.0;
  return h;
}

double log_prior_esnsm(const EsnsmParams& params, const EsnsmHyper& hyper, const Mat& x) {
  params.validate();
  const int d = params.dim();
  const int k = params.n_covariates();
  hyper.validate(d, k);
  if (x.cols() != k) throw DataError("sample-selection prior: covariate dimension mismatch");
  const Mat g = gram(x);
  const auto llt_g = spd_cholesky(g, "X'X");
  const double log_det_g = log_det(llt_g);

  const auto llt1 = spd_cholesky(params.sigma1, "Sigma1");
  const auto llt_v = spd_cholesky(hyper.V, "V");
  const double log_det_s1 = log_det(llt1);
  double lp = 0.5 * hyper.nu * log_det(llt_v) - 0.5 * hyper.nu * d * std::numbers::ln2 -
              log_mv_gamma(d, 0.5 * hyper.nu) - 0.5 * (hyper.nu + d + 1.0) * log_det_s1 -
              0.5 * llt1.solve(hyper.V).trace();

  // B: precision Sigma1^{-1} ⊗ (kappa / c_beta1) X'X.
  const double prec = hyper.kappa / hyper.c_beta1;
  const Mat D = params.B - hyper.M;
  const double quad_b = (llt1.solve(D) * g * D.transpose()).trace();
  lp += -d * k * kLogSqrt2Pi + 0.5 * d * (k * std::log(prec) + log_det_g) - 0.5 * k * log_det_s1 - 0.5 * prec * quad_b;

  // beta2 ~ N(mu, c_beta2 (X'X)^{-1}).
  const Vec db = params.beta2 - hyper.mu_beta2;
  lp += -k * kLogSqrt2Pi - 0.5 * k * std::log(hyper.c_beta2) + 0.5 * log_det_g - 0.5 * db.dot(g * db) / hyper.c_beta2;

  // r uniform on the unit ball.
  lp -= log_unit_ball_volume(d);

  const Vec da = params.alpha - hyper.mu_alpha;
  lp += -(d + 1) * kLogSqrt2Pi - 0.5 * (d + 1) * std::log(hyper.sigma2_alpha) - 0.5 * da.squaredNorm() / hyper.sigma2_alpha;
  const double c0 = std::sqrt(1.0 + params.alpha.dot(params.sigma() * params.alpha));
  lp += norm_log_pdf(params.lambda / c0) - std::log(c0);
  return lp;
}

// ---------------------------------------------------------------- marginal effects

double tau(double a, double alpha, double lambda) {
  const double lp = esn_joint_log_cdf(a, 1.0, alpha, lambda);
  if (!std::isfinite(lp)) throw DomainError("tau: vanishing selection probability");
  return std::exp(norm_log_pdf(a) + norm_log_cdf(lambda + alpha * a) - lp);
}

double delta(double a, double alpha, double lambda) {
  const double lp = esn_joint_log_cdf(a, 1.0, alpha, lambda);
  if (!std::isfinite(lp)) throw DomainError("delta: vanishing selection probability");
  const double c0 = std::sqrt(1.0 + alpha * alpha);
  return std::exp(norm_log_pdf(lambda / c0) + norm_log_cdf(a * c0 + alpha * lambda / c0) - lp);
}

ConditionalExpectations conditional_expectations(const EsnsmParams& params, const Vec& x) {
  params.validate();
  if (params.dim() != 1) throw ArgumentError("conditional_expectations: univariate outcome only");
  if (x.size() != params.n_covariates()) throw ArgumentError("conditional_expectations: covariate dimension mismatch");
  const Vec xi = params.xi();
  const double s11 = params.sigma1(0, 0);
  const double s12 = params.sigma12(0);
  const double a1 = params.alpha(0);
  const double a2 = params.alpha(1);
  const double s11_2 = s11 - s12 * s12;
  const double c2 = 1.0 / std::sqrt(1.0 + a1 * a1 * s11_2);
  const double shape = c2 * (a2 + s12 * a1);
  const double c02 = std::sqrt(1.0 + shape * shape);
  const double a = xi(1) + params.beta2.dot(x);
  const double t = tau(a, -shape, c2 * params.lambda);
  const double dl = delta(a, -shape, c2 * params.lambda);
  ConditionalExpectations out;
  out.selection = params.beta2.dot(x) + xi(1) + t + shape / c02 * dl;
  out.outcome = xi(0) + params.B.row(0).dot(x) + s12 * t + dl * (s12 * shape + a1 * s11_2 * c2) / c02;
  return out;
}

double marginal_effect(const EsnsmParams& params, const Vec& x, int k) {
  if (k < 0 || k >= x.size()) throw ArgumentError("marginal_effect: covariate index out of range");
  const double h = 1e-5 * std::max(1.0, std::abs(x(k)));
  Vec xp = x;
  Vec xm = x;
  xp(k) += h;
  xm(k) -= h;
  return (conditional_expectations(params, xp).outcome - conditional_expectations(params, xm).outcome) / (2.0 * h);
}

// ---------------------------------------------------------------- start values

EsnsmParams esnsm_start(const EsnsmData& data) {
  const int d = static_cast<int>(data.y.cols());
  data.validate(d);
  const int k = static_cast<int>(data.x.cols());
  std::vector<int> sel;
  for (int i = 0; i < data.size(); ++i)
    if (data.s[i] == 1) sel.push_back(i);
  if (static_cast<int>(sel.size()) <= k) throw DataError("sample-selection data: too few selected rows");

  Mat xs(sel.size(), k);
  Mat ys(sel.size(), d);
  for (std::size_t r = 0; r < sel.size(); ++r) {
    xs.row(r) = data.x.row(sel[r]);
    ys.row(r) = data.y.row(sel[r]);
  }
  const auto llt = spd_cholesky(gram(xs), "X_s'X_s");
  EsnsmParams p;
  p.B = llt.solve(xs.transpose() * ys).transpose();
  const Mat resid = ys - xs * p.B.transpose();
  p.sigma1 = symmetrize(resid.transpose() * resid / static_cast<double>(sel.size()));
  if (!is_spd(p.sigma1)) p.sigma1 = floor_eigenvalues(p.sigma1, 1e-6);
  p.sigma12 = Vec::Zero(d);
  p.alpha = Vec::Zero(d + 1);
  p.lambda = 0.0;

  // Probit by Fisher scoring.
  Vec b = Vec::Zero(k);
  for (int it = 0; it < 50; ++it) {
    Vec score = Vec::Zero(k);
    Mat info = Mat::Zero(k, k);
    for (int i = 0; i < data.size(); ++i) {
      const Vec xi = data.x.row(i).transpose();
      const double eta = b.dot(xi);
      const double up = inverse_mills(eta);    // phi / Phi
      const double dn = inverse_mills(-eta);   // phi / (1 - Phi)
      score += (data.s[i] == 1 ? up : -dn) * xi;
      info += (up * dn) * xi * xi.transpose();
    }
    const Eigen::LDLT<Mat> ldlt(info);
    const Vec step = ldlt.solve(score);
    if (!step.allFinite()) break;
    b += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  p.beta2 = b;
  return p;
}

// ---------------------------------------------------------------- target

EsnsmTarget::EsnsmTarget(EsnsmData data, EsnsmHyper hyper, bool gaussian)
    : data_(std::move(data)), hyper_(std::move(hyper)), gaussian_(gaussian) {
  d_ = static_cast<int>(data_.y.cols());
  k_ = static_cast<int>(data_.x.cols());
  data_.validate(d_);
  hyper_.validate(d_, k_);
  gram(data_.x);
}

int EsnsmTarget::dim() const { return d_ * k_ + k_ + tri(d_) + d_ + (gaussian_ ? 0 : d_ + 2); }

EsnsmParams EsnsmTarget::params(const Vec& u) const {
  if (u.size() != dim()) throw ArgumentError("sample-selection target: wrong parameter length");
  int pos = 0;
  EsnsmParams p;
  p.B = Mat(d_, k_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < k_; ++j) p.B(i, j) = u(pos++);
  p.beta2 = u.segment(pos, k_);
  pos += k_;
  const Mat L = chol_from_logchol(u.segment(pos, tri(d_)), d_);
  pos += tri(d_);
  p.sigma1 = L * L.transpose();
  const Vec v = u.segment(pos, d_);
  pos += d_;
  p.sigma12 = L * v / std::sqrt(1.0 + v.squaredNorm());
  if (gaussian_) {
    p.alpha = Vec::Zero(d_ + 1);
    p.lambda = 0.0;
  } else {
    p.alpha = u.segment(pos, d_ + 1);
    p.lambda = u(pos + d_ + 1);
  }
  return p;
}

Vec EsnsmTarget::pack(const EsnsmParams& p) const {
  Vec u(dim());
  int pos = 0;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < k_; ++j) u(pos++) = p.B(i, j);
  u.segment(pos, k_) = p.beta2;
  pos += k_;
  const auto llt = spd_cholesky(p.sigma1, "Sigma1");
  u.segment(pos, tri(d_)) = logchol_from_spd(p.sigma1);
  pos += tri(d_);
  const Vec r = llt.matrixL().solve(p.sigma12);
  const double r2 = r.squaredNorm();
  if (!(r2 < 1.0)) throw DomainError("sample-selection parameters: Sigma is not positive definite");
  u.segment(pos, d_) = r / std::sqrt(1.0 - r2);
  pos += d_;
  if (!gaussian_) {
    u.segment(pos, d_ + 1) = p.alpha;
    u(pos + d_ + 1) = p.lambda;
  }
  return u;
}

double EsnsmTarget::log_prior(const Vec& u) const {
  const EsnsmParams p = params(u);
  const int off = d_ * k_ + k_;
  const Mat L = chol_from_logchol(u.segment(off, tri(d_)), d_);
  const Vec v = u.segment(off + tri(d_), d_);
  double lp;
  if (gaussian_) {
    // Same prior without the shape and shift blocks.
    EsnsmParams q = p;
    q.alpha = Vec::Zero(d_ + 1);
    q.lambda = 0.0;
    lp = log_prior_esnsm(q, hyper_, data_.x) -
         (-(d_ + 1) * kLogSqrt2Pi - 0.5 * (d_ + 1) * std::log(hyper_.sigma2_alpha) -
          0.5 * hyper_.mu_alpha.squaredNorm() / hyper_.sigma2_alpha) -
         norm_log_pdf(0.0);
  } else {
    lp = log_prior_esnsm(p, hyper_, data_.x);
  }
  return lp + logchol_log_jacobian(L) - 0.5 * (d_ + 2.0) * std::log1p(v.squaredNorm());
}

double EsnsmTarget::log_likelihood(const Vec& u) const { return loglik(params(u), data_); }

Vec EsnsmTarget::sample_prior(Rng& rng) const {
  const Mat g = gram(data_.x);
  const auto llt_g = spd_cholesky(g, "X'X");
  EsnsmParams p;
  p.sigma1 = sample_inverse_wishart(hyper_.V, hyper_.nu, rng);
  const Mat L = spd_cholesky(p.sigma1, "Sigma1").matrixL();
  // Rows of B - M: N(0, Sigma1 ⊗ (c/kappa) (X'X)^{-1}), i.e. L Z U^{-1} with U'U = (kappa/c) X'X.
  const Mat U = llt_g.matrixU();
  Mat Z(d_, k_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < k_; ++j) Z(i, j) = std_normal(rng);
  const double scale = std::sqrt(hyper_.c_beta1 / hyper_.kappa);
  const Mat Zt = U.triangularView<Eigen::Upper>().solve(Mat(Z.transpose()));
  p.B = hyper_.M + scale * L * Zt.transpose();
  p.beta2 = hyper_.mu_beta2 + std::sqrt(hyper_.c_beta2) * U.triangularView<Eigen::Upper>().solve(std_normal_vec(rng, k_));
  // Uniform on the unit ball.
  Vec dir = std_normal_vec(rng, d_);
  dir /= dir.norm();
  const double radius = std::pow(uniform01(rng), 1.0 / d_);
  p.sigma12 = L * (radius * dir);
  if (gaussian_) {
    p.alpha = Vec::Zero(d_ + 1);
    p.lambda = 0.0;
  } else {
    p.alpha = hyper_.mu_alpha + std::sqrt(hyper_.sigma2_alpha) * std_normal_vec(rng, d_ + 1);
    p.lambda = std::sqrt(1.0 + p.alpha.dot(p.sigma() * p.alpha)) * std_normal(rng);
  }
  return pack(p);
}

Vec EsnsmTarget::start() const { return pack(esnsm_start(data_)); }

std::vector<std::string> EsnsmTarget::names() const {
  std::vector<std::string> n;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < k_; ++j) n.push_back(label("B", i, j));
  for (int j = 0; j < k_; ++j) n.push_back(label("beta2", j));
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j <= i; ++j) n.push_back(label("Sigma1", i, j));
  for (int i = 0; i < d_; ++i) n.push_back(label("Sigma12", i));
  if (!gaussian_) {
    for (int i = 0; i <= d_; ++i) n.push_back(label("alpha", i));
    n.push_back("lambda");
  }
  return n;
}

Vec EsnsmTarget::to_constrained(const Vec& u) const {
  const EsnsmParams p = params(u);
  Vec t = u;
  const int off = d_ * k_ + k_;
  t.segment(off, tri(d_)) = vech(p.sigma1);
  t.segment(off + tri(d_), d_) = p.sigma12;
  return t;
}

Vec EsnsmTarget::to_unconstrained(const Vec& theta) const {
  if (theta.size() != dim()) throw ArgumentError("sample-selection target: wrong parameter length");
  Vec u = theta;
  const int off = d_ * k_ + k_;
  const Mat s1 = unvech(theta.segment(off, tri(d_)), d_);
  const Mat L = spd_cholesky(s1, "Sigma1").matrixL();
  u.segment(off, tri(d_)) = logchol_from_spd(s1);
  const Vec r = L.triangularView<Eigen::Lower>().solve(theta.segment(off + tri(d_), d_));
  const double r2 = r.squaredNorm();
  if (!(r2 < 1.0)) throw DomainError("sample-selection parameters: Sigma is not positive definite");
  u.segment(off + tri(d_), d_) = r / std::sqrt(1.0 - r2);
  return u;
}

}  // namespace esn
