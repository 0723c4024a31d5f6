#include "esn/normal.hpp"

#include "esn/error.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace esn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Mills ratio Phi(-t)/phi(t) for t >= 8 by backward evaluation of
// 1/(t + 1/(t + 2/(t + 3/(t + ...)))).
double mills_ratio_tail(double t) {
  double f = t;
  for (int k = 80; k >= 1; --k) f = t + k / f;
  return 1.0 / f;
}

template <int N>
double genz_sum_small(double asr, double hk, double hs) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double sgn : {-1.0, 1.0}) {
      const double sn = std::sin(asr * (1.0 + sgn * x[i]));
      acc += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
  }
  return acc;
}

template <int N>
double genz_sum_large(double a, double bs, double hk, double c, double d) {
  using Rule = boost::math::quadrature::gauss<double, N>;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (double sgn : {-1.0, 1.0}) {
      const double xs = std::pow(a * (1.0 + sgn * x[i]), 2);
      const double asr = -(bs / xs + hk) / 2.0;
      if (asr <= -100.0) continue;
      const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
      const double rs = std::sqrt(1.0 - xs);
      const double ep = std::exp(-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
      acc += w[i] * std::exp(asr) * (sp - ep);
    }
  }
  return acc;
}

// Upper orthant P(X > dh, Y > dk).
double bvn_upper(double dh, double dk, double r) {
  if (dh == kInf || dk == kInf) return 0.0;
  if (dh == -kInf) return dk == -kInf ? 1.0 : norm_cdf(-dk);
  if (dk == -kInf) return norm_cdf(-dh);
  if (r == 0.0) return norm_cdf(-dh) * norm_cdf(-dk);
  constexpr double tp = 2.0 * std::numbers::pi;
  double h = dh;
  double k = dk;
  double hk = h * k;
  double bvn = 0.0;
  const double ar = std::abs(r);
  if (ar < 0.925) {
    const double hs = (h * h + k * k) / 2.0;
    const double asr = std::asin(r) / 2.0;
    double s;
    if (ar < 0.3) {
      s = genz_sum_small<6>(asr, hk, hs);
    } else if (ar < 0.75) {
      s = genz_sum_small<12>(asr, hk, hs);
    } else {
      s = genz_sum_small<20>(asr, hk, hs);
    }
    bvn = s * asr / tp + norm_cdf(-h) * norm_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double asr = -(bs / as + hk) / 2.0;
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 80.0;
      if (asr > -100.0) {
        bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
      }
      if (hk > -100.0) {
        const double b = std::sqrt(bs);
        const double sp = std::sqrt(tp) * norm_cdf(-b / a);
        bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
      }
      a /= 2.0;
      bvn = (a * genz_sum_large<20>(a, bs, hk, c, d) - bvn) / tp;
    }
    if (r > 0.0) {
      bvn += norm_cdf(-std::max(h, k));
    } else if (h >= k) {
      bvn = -bvn;
    } else {
      const double l = h < 0.0 ? norm_cdf(k) - norm_cdf(h) : norm_cdf(-h) - norm_cdf(-k);
      bvn = l - bvn;
    }
  }
  return std::clamp(bvn, 0.0, 1.0);
}

// log of int_{-inf}^{h} phi(x) Phi((k - r x)/s) dx, for the deep-tail case.
// The log integrand is concave, so it is rescaled at its mode and integrated
// on a window that holds all but a negligible fraction of the mass.
double bvn_log_cdf_quadrature(double h, double k, double r) {
  const double s = std::sqrt((1.0 - r) * (1.0 + r));
  auto logf = [&](double x) { return norm_log_pdf(x) + norm_log_cdf((k - r * x) / s); };
  auto dlogf = [&](double x) { return -x - (r / s) * inverse_mills((k - r * x) / s); };
  double mode = h;
  if (dlogf(h) < 0.0) {
    double lo = std::min(h, 0.0) - 1.0;
    double step = 1.0;
    while (dlogf(lo) < 0.0) {
      step *= 2.0;
      lo -= step;
    }
    double hi = h;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (dlogf(mid) < 0.0 ? hi : lo) = mid;
    }
    mode = 0.5 * (lo + hi);
  }
  const double peak = logf(mode);
  auto g = [&](double x) { return std::exp(logf(x) - peak); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = GK::integrate(g, mode - 12.0, mode, 15, 1e-12);
  if (mode < h) total += GK::integrate(g, mode, std::min(h, mode + 12.0), 15, 1e-12);
  return peak + std::log(total);
}

}  // namespace

double norm_pdf(double x) { return std::exp(norm_log_pdf(x)); }

double norm_log_pdf(double x) { return -kLogSqrt2Pi - 0.5 * x * x; }

double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double norm_log_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x == kInf) return 0.0;
  if (x == -kInf) return -kInf;
  if (x > 5.0) return std::log1p(-0.5 * std::erfc(x / kSqrt2));
  if (x >= -8.0) return std::log(0.5 * std::erfc(-x / kSqrt2));
  return norm_log_pdf(x) + std::log(mills_ratio_tail(-x));
}

double inverse_mills(double x) {
  if (x < -8.0) return 1.0 / mills_ratio_tail(-x);
  return std::exp(norm_log_pdf(x) - norm_log_cdf(x));
}

double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw ArgumentError("norm_quantile: probability outside [0,1]");
  }
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double bvn_cdf(double h, double k, double r) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(r)) return std::numeric_limits<double>::quiet_NaN();
  r = std::clamp(r, -1.0, 1.0);
  if (r == 1.0) return norm_cdf(std::min(h, k));
  if (r == -1.0) return std::max(0.0, norm_cdf(h) - norm_cdf(-k));
  return bvn_upper(-h, -k, r);
}

double bvn_log_cdf(double h, double k, double r) {
  const double p = bvn_cdf(h, k, r);
  if (p > 1e-200) return std::log(p);
  r = std::clamp(r, -1.0, 1.0);
  if (r == 1.0) return norm_log_cdf(std::min(h, k));
  if (r == -1.0) return p > 0.0 ? std::log(p) : -kInf;
  if (h == -kInf || k == -kInf) return -kInf;
  if (h == kInf) return norm_log_cdf(k);
  if (k == kInf) return norm_log_cdf(h);
  return bvn_log_cdf_quadrature(h, k, r);
}

double tvn_cdf(const Vec& upper, const Mat& corr) {
  if (upper.size() != 3 || corr.rows() != 3 || corr.cols() != 3) {
    throw ArgumentError("tvn_cdf: expected three dimensions");
  }
  for (int i = 0; i < 3; ++i)
    if (upper(i) == -kInf) return 0.0;
  // Condition on the coordinate least correlated with the other two.
  int pivot = 0;
  double best = kInf;
  for (int i = 0; i < 3; ++i) {
    double m = 0.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) m = std::max(m, std::abs(corr(i, j)));
    if (m < best) {
      best = m;
      pivot = i;
    }
  }
  const int j = (pivot + 1) % 3;
  const int k = (pivot + 2) % 3;
  const double rj = corr(pivot, j);
  const double rk = corr(pivot, k);
  const double sj = std::sqrt(std::max(0.0, 1.0 - rj * rj));
  const double sk = std::sqrt(std::max(0.0, 1.0 - rk * rk));
  if (sj < 1e-12 || sk < 1e-12) {
    throw NumericalError("tvn_cdf: degenerate correlation matrix");
  }
  const double rjk = std::clamp((corr(j, k) - rj * rk) / (sj * sk), -1.0, 1.0);
  const double hp = upper(pivot);
  const double hj = upper(j);
  const double hk = upper(k);
  auto integrand = [&](double x) {
    const double a = hj == kInf ? kInf : (hj - rj * x) / sj;
    const double b = hk == kInf ? kInf : (hk - rk * x) / sk;
    return norm_pdf(x) * bvn_cdf(a, b, rjk);
  };
  constexpr double lower = -9.0;
  if (hp <= lower) return 0.0;
  const double top = std::min(hp, 9.0);
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  double value = GK::integrate(integrand, lower, top, 20, 1e-12);
  if (hp > top) {
    // Remaining slab above 9 contributes at most Phi(-9); the integrand there
    // is phi(x) times a probability that has converged to its limit.
    const double a = hj == kInf ? kInf : (hj - rj * top) / sj;
    const double b = hk == kInf ? kInf : (hk - rk * top) / sk;
    value += (norm_cdf(hp) - norm_cdf(top)) * bvn_cdf(a, b, rjk);
  }
  return std::clamp(value, 0.0, 1.0);
}

MvnCdf mvn_cdf_qmc(const Vec& upper, const Mat& cov, double tol, long max_points) {
  if (!(tol > 0.0)) throw ArgumentError("mvn_cdf_qmc: tolerance must be positive");
  const int m = static_cast<int>(upper.size());
  if (cov.rows() != m || cov.cols() != m) throw ArgumentError("mvn_cdf_qmc: dimension mismatch");
  const auto llt = spd_cholesky(cov, "mvn_cdf_qmc covariance");
  const Mat c = llt.matrixL();

  static constexpr std::array<int, 16> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (m > static_cast<int>(primes.size()) + 1) throw ArgumentError("mvn_cdf_qmc: dimension too large");
  Vec q(std::max(m - 1, 1));
  for (int i = 0; i < m - 1; ++i) q(i) = std::sqrt(static_cast<double>(primes[i])) - std::floor(std::sqrt(static_cast<double>(primes[i])));

  // One integrand evaluation of the separation-of-variables transform.
  Vec y(m);
  auto integrand = [&](const Vec& w) {
    double f = 1.0;
    for (int i = 0; i < m; ++i) {
      double shift = 0.0;
      for (int j = 0; j < i; ++j) shift += c(i, j) * y(j);
      const double e = upper(i) == kInf ? 1.0 : norm_cdf((upper(i) - shift) / c(i, i));
      f *= e;
      if (f == 0.0) return 0.0;
      if (i + 1 < m) {
        const double u = std::clamp(w(i) * e, 1e-300, 1.0 - 1e-16);
        y(i) = norm_quantile(u);
      }
    }
    return f;
  };

  constexpr int kShifts = 12;
  std::mt19937_64 gen(0x5eedULL + static_cast<unsigned long long>(m));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  long n = 256;
  long used = 0;
  MvnCdf out;
  Vec w(std::max(m - 1, 1));
  Vec wa(std::max(m - 1, 1));
  while (true) {
    double sum = 0.0;
    double sumsq = 0.0;
    for (int s = 0; s < kShifts; ++s) {
      Vec delta(std::max(m - 1, 1));
      for (int i = 0; i < delta.size(); ++i) delta(i) = unif(gen);
      double acc = 0.0;
      for (long p = 1; p <= n; ++p) {
        for (int i = 0; i < m - 1; ++i) {
          const double frac = std::fmod(static_cast<double>(p) * q(i) + delta(i), 1.0);
          w(i) = std::abs(2.0 * frac - 1.0);
          wa(i) = 1.0 - w(i);
        }
        acc += 0.5 * (integrand(w) + integrand(wa));
      }
      const double mean = acc / static_cast<double>(n);
      sum += mean;
      sumsq += mean * mean;
    }
    used += 2L * n * kShifts;
    const double avg = sum / kShifts;
    const double var = std::max(0.0, (sumsq / kShifts - avg * avg) * kShifts / (kShifts - 1));
    out.value = std::clamp(avg, 0.0, 1.0);
    out.error = std::sqrt(var / kShifts);
    if (out.error <= tol || used >= max_points) break;
    n *= 2;
  }
  return out;
}

MvnCdf mvn_cdf(const Vec& upper, const Mat& cov, double tol) {
  if (!(tol > 0.0)) throw ArgumentError("mvn_cdf: tolerance must be positive");
  const auto m = upper.size();
  if (cov.rows() != m || cov.cols() != m) throw ArgumentError("mvn_cdf: dimension mismatch");
  spd_cholesky(cov, "mvn_cdf covariance");
  const Vec sd = cov.diagonal().array().sqrt();
  const Vec z = upper.array() / sd.array();
  const Mat corr = cov.array() / (sd * sd.transpose()).array();
  switch (m) {
    case 1:
      return {norm_cdf(z(0)), 0.0};
    case 2:
      return {bvn_cdf(z(0), z(1), corr(0, 1)), 0.0};
    case 3:
      return {tvn_cdf(z, corr), 0.0};
    default:
      return mvn_cdf_qmc(upper, cov, tol);
  }
}

double log_sum_exp(const Vec& v) {
  if (v.size() == 0) return -kInf;
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

}  // namespace esn
