#include "esn/smc.hpp"

#include "esn/error.hpp"
#include "esn/normal.hpp"
#include "esn/optimize.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace esn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kResampleStream = 0x8000000000000000ULL;

// log of eta1^{1-rho} pi^rho, keeping -inf where either endpoint vanishes.
double tempered(double log_eta1, double log_target, double rho) {
  if (rho <= 0.0) return log_eta1;
  if (rho >= 1.0) return log_target;
  if (!std::isfinite(log_eta1) || !std::isfinite(log_target)) return kNegInf;
  return (1.0 - rho) * log_eta1 + rho * log_target;
}

Vec shifted_log_weights(const ParticleSystem& system, double rho_new) {
  const double step = rho_new - system.rho;
  if (step == 0.0) return system.log_weights;
  const Vec lr = system.log_ratio();
  Vec out(lr.size());
  for (Eigen::Index m = 0; m < lr.size(); ++m) {
    out(m) = std::isfinite(lr(m)) ? system.log_weights(m) + step * lr(m) : kNegInf;
  }
  return out;
}

GaussianSpec gaussian_from_hessian(const Vec& mode, const Mat& hessian) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrize(-hessian));
  Vec ev = eig.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    // A non-negative curvature direction gets its curvature magnitude (or unit
    // variance when flat) instead of an unusable negative variance.
    const double a = std::abs(ev(i));
    ev(i) = a > 0.0 ? 1.0 / a : 1.0;
  }
  Mat cov = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  return {mode, floor_eigenvalues(symmetrize(cov), 1e-8)};
}

}  // namespace

double TargetModel::log_posterior_unnorm(const Vec& u) const {
  if (!u.allFinite()) return kNegInf;
  try {
    const double lp = log_prior(u);
    if (!std::isfinite(lp)) return kNegInf;
    const double ll = log_likelihood(u);
    if (!std::isfinite(ll)) return kNegInf;
    return lp + ll;
  } catch (const DomainError&) {
    return kNegInf;
  } catch (const NumericalError&) {
    return kNegInf;
  }
}

GaussianInit::GaussianInit(GaussianSpec spec) : spec_(std::move(spec)) {
  if (spec_.mean.size() != spec_.cov.rows() || spec_.cov.rows() != spec_.cov.cols()) {
    throw ArgumentError("GaussianInit: dimension mismatch");
  }
  llt_ = spd_cholesky(spec_.cov, "initial covariance");
  log_norm_ = -static_cast<double>(spec_.mean.size()) * kLogSqrt2Pi - 0.5 * log_det(llt_);
}

double GaussianInit::logpdf(const Vec& u) const {
  const Vec z = llt_.matrixL().solve(u - spec_.mean);
  return log_norm_ - 0.5 * z.squaredNorm();
}

Vec GaussianInit::sample(Rng& rng) const {
  return spec_.mean + llt_.matrixL() * std_normal_vec(rng, spec_.mean.size());
}

void SmcConfig::validate(int dim) const {
  if (n_particles < 2) throw ArgumentError("SMC: need at least two particles");
  if (!(ess_threshold_fraction > 0.0 && ess_threshold_fraction < 1.0)) {
    throw ArgumentError("SMC: ess_threshold_fraction must lie in (0,1)");
  }
  if (mh_steps < 1) throw ArgumentError("SMC: mh_steps must be >= 1");
  if (!(bisect_epsilon > 0.0 && bisect_epsilon < 1.0)) throw ArgumentError("SMC: bisect_epsilon must lie in (0,1)");
  if (!(acceptance_band.first > 0.0 && acceptance_band.first < acceptance_band.second && acceptance_band.second < 1.0)) {
    throw ArgumentError("SMC: invalid acceptance band");
  }
  if (final_sweeps_max < 0) throw ArgumentError("SMC: final_sweeps_max must be >= 0");
  if (dim < 1) throw ArgumentError("SMC: target dimension must be >= 1");
}

Vec ParticleSystem::log_ratio() const {
  Vec lr(log_target.size());
  for (Eigen::Index m = 0; m < lr.size(); ++m) {
    lr(m) = std::isfinite(log_target(m)) ? log_target(m) - log_eta1(m) : kNegInf;
  }
  return lr;
}

Vec ParticleSystem::weights() const { return normalize_log_weights(log_weights).array().exp(); }

double ess(const Vec& log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw NumericalError("ESS: all particle weights vanish");
  const Vec w = (log_weights.array() - lse).exp();
  return std::clamp(1.0 / w.squaredNorm(), 1.0, static_cast<double>(log_weights.size()));
}

Vec normalize_log_weights(const Vec& log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw NumericalError("degenerate particle system: all weights vanish");
  return log_weights.array() - lse;
}

Vec reweight(const ParticleSystem& system, double rho_new) {
  if (rho_new < system.rho || rho_new > 1.0) throw ArgumentError("reweight: rho_new outside [rho, 1]");
  return normalize_log_weights(shifted_log_weights(system, rho_new));
}

double evidence_increment(const ParticleSystem& system, double rho_new) {
  return log_sum_exp(shifted_log_weights(system, rho_new)) - log_sum_exp(system.log_weights);
}

double next_temperature(const ParticleSystem& system, const SmcConfig& config) {
  if (!(system.rho < 1.0)) throw ArgumentError("next_temperature: already at rho = 1");
  const double beta = config.ess_threshold_fraction * system.size();
  const auto ess_at = [&](double rho) {
    const Vec lw = shifted_log_weights(system, rho);
    return std::isfinite(log_sum_exp(lw)) ? ess(lw) : 0.0;
  };
  if (ess_at(1.0) >= beta) return 1.0;
  double lo = system.rho;
  double hi = 1.0;
  while (hi - lo >= config.bisect_epsilon) {
    const double mid = 0.5 * (lo + hi);
    if (ess_at(mid) >= beta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::min(1.0, std::max(lo, system.rho + config.bisect_epsilon));
}

std::vector<int> systematic_resample(const Vec& log_weights, double u, int n_out) {
  if (!(u >= 0.0 && u < 1.0)) throw ArgumentError("systematic_resample: offset must lie in [0,1)");
  const Vec w = normalize_log_weights(log_weights).array().exp();
  const int n_in = static_cast<int>(w.size());
  if (n_out <= 0) n_out = n_in;
  std::vector<int> idx(n_out);
  double cum = w(0);
  int j = 0;
  for (int m = 0; m < n_out; ++m) {
    const double point = (m + u) / n_out;
    while (point > cum && j < n_in - 1) cum += w(++j);
    idx[m] = j;
  }
  return idx;
}

std::vector<int> systematic_resample(const Vec& log_weights, double u) {
  return systematic_resample(log_weights, u, 0);
}

std::vector<int> systematic_resample(const Vec& log_weights, Rng& rng) {
  return systematic_resample(log_weights, uniform01(rng), 0);
}

Mat proposal_covariance(const Mat& cov) {
  const Mat s = symmetrize(cov);
  if (s.allFinite() && is_spd(s)) return s;
  Vec diag = s.diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!std::isfinite(diag(i)) || diag(i) < 0.0) diag(i) = 0.0;
  }
  return Mat((diag.array() + 1e-8).matrix().asDiagonal());
}

MoveStats rwmh_propagate(ParticleSystem& system, const TargetModel& target, const InitialDistribution& eta1,
                         double rho, const Mat& cov, double scale, int steps, std::uint64_t seed,
                         std::uint64_t stage) {
  if (steps < 1) throw ArgumentError("rwmh_propagate: steps must be >= 1");
  if (!(scale > 0.0)) throw ArgumentError("rwmh_propagate: scale must be positive");
  const Mat chol = spd_cholesky(Mat(scale * proposal_covariance(cov)), "proposal covariance").matrixL();
  const int n = system.size();
  const auto dim = system.particles.cols();
  long accepted = 0;
  for (int m = 0; m < n; ++m) {
    Rng rng = make_stream(seed, stage, static_cast<std::uint64_t>(m));
    Vec u = system.particles.row(m).transpose();
    double lt = system.log_target(m);
    double le = system.log_eta1(m);
    double cur = tempered(le, lt, rho);
    for (int s = 0; s < steps; ++s) {
      const Vec prop = u + chol * std_normal_vec(rng, dim);
      const double lt_p = target.log_posterior_unnorm(prop);
      const double le_p = eta1.logpdf(prop);
      const double next = tempered(le_p, lt_p, rho);
      const double log_u = std::log(uniform01(rng));
      if (std::isfinite(next) && (log_u < next - cur || !std::isfinite(cur))) {
        u = prop;
        lt = lt_p;
        le = le_p;
        cur = next;
        ++accepted;
      }
    }
    system.particles.row(m) = u.transpose();
    system.log_target(m) = lt;
    system.log_eta1(m) = le;
  }
  return {static_cast<double>(accepted) / (static_cast<double>(n) * steps)};
}

SmcResult run(const TargetModel& target, const InitialDistribution& eta1, const SmcConfig& config) {
  const int dim = target.dim();
  config.validate(dim);
  const int n = config.n_particles;
  using Clock = std::chrono::steady_clock;

  ParticleSystem sys;
  sys.particles.resize(n, dim);
  sys.log_target.resize(n);
  sys.log_eta1.resize(n);
  for (int m = 0; m < n; ++m) {
    Rng rng = make_stream(config.seed, 0, static_cast<std::uint64_t>(m));
    const Vec u = eta1.sample(rng);
    if (u.size() != dim) throw ArgumentError("SMC: initial distribution has the wrong dimension");
    sys.particles.row(m) = u.transpose();
    sys.log_target(m) = target.log_posterior_unnorm(u);
    sys.log_eta1(m) = eta1.logpdf(u);
  }
  sys.log_weights = Vec::Constant(n, -std::log(static_cast<double>(n)));

  double scale = config.scale_init > 0.0 ? config.scale_init : 2.38 * 2.38 / dim;
  const auto [band_lo, band_hi] = config.acceptance_band;
  const auto adapt = [&](double acc) {
    if (acc < band_lo) scale *= 0.5;
    else if (acc > band_hi) scale *= 2.0;
  };

  double last_acc = 0.0;
  std::uint64_t stage = 1;
  while (sys.rho < 1.0) {
    const auto t0 = Clock::now();
    const double rho_new = next_temperature(sys, config);
    const double inc = evidence_increment(sys, rho_new);
    if (!std::isfinite(inc)) {
      throw NumericalError("SMC: degenerate particle system at stage " + std::to_string(stage) +
                           " (rho = " + std::to_string(sys.rho) + ")");
    }
    sys.log_weights = reweight(sys, rho_new);
    sys.rho = rho_new;
    sys.log_evidence_acc += inc;

    StageRecord rec;
    rec.rho = rho_new;
    rec.ess = ess(sys.log_weights);
    rec.log_evidence_increment = inc;
    rec.scale = scale;

    Vec mean;
    Mat cov;
    weighted_moments(sys.particles, sys.weights(), mean, cov);

    Rng rs = make_stream(config.seed, stage, kResampleStream);
    const std::vector<int> idx = systematic_resample(sys.log_weights, rs);
    ParticleSystem next = sys;
    for (int m = 0; m < n; ++m) {
      next.particles.row(m) = sys.particles.row(idx[m]);
      next.log_target(m) = sys.log_target(idx[m]);
      next.log_eta1(m) = sys.log_eta1(idx[m]);
    }
    next.log_weights = Vec::Constant(n, -std::log(static_cast<double>(n)));
    sys = std::move(next);

    const MoveStats st = rwmh_propagate(sys, target, eta1, sys.rho, cov, scale, config.mh_steps, config.seed, stage);
    rec.acceptance_rate = st.acceptance_rate;
    last_acc = st.acceptance_rate;
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    sys.history.push_back(rec);
    adapt(st.acceptance_rate);
    ++stage;
  }

  for (int k = 0; k < config.final_sweeps_max && (last_acc < band_lo || last_acc > band_hi); ++k) {
    const auto t0 = Clock::now();
    Vec mean;
    Mat cov;
    weighted_moments(sys.particles, sys.weights(), mean, cov);
    StageRecord rec;
    rec.rho = 1.0;
    rec.ess = ess(sys.log_weights);
    rec.scale = scale;
    const MoveStats st = rwmh_propagate(sys, target, eta1, 1.0, cov, scale, config.mh_steps, config.seed, stage);
    rec.acceptance_rate = st.acceptance_rate;
    last_acc = st.acceptance_rate;
    rec.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    sys.history.push_back(rec);
    adapt(st.acceptance_rate);
    ++stage;
  }

  SmcResult out;
  out.log_evidence = sys.log_evidence_acc;
  out.final_acceptance = last_acc;
  out.system = std::move(sys);
  return out;
}

GaussianSpec laplace_init(const TargetModel& target, const std::vector<Vec>& starts) {
  if (starts.empty()) throw ArgumentError("laplace_init: no start points");
  const Objective f = [&target](const Vec& u) { return target.log_posterior_unnorm(u); };
  bool have = false;
  OptimizeResult best;
  for (const Vec& s : starts) {
    if (!std::isfinite(f(s))) continue;
    const OptimizeResult r = bfgs_maximize(f, s);
    if (!r.converged || !std::isfinite(r.value)) continue;
    if (!have || r.value > best.value) {
      best = r;
      have = true;
    }
  }
  if (!have) throw NumericalError("laplace_init: optimizer did not converge from any start point");
  return gaussian_from_hessian(best.x, numeric_hessian(f, best.x));
}

GaussianSpec laplace_init(const TargetModel& target, const Vec& start) {
  return laplace_init(target, std::vector<Vec>{start});
}

GaussianSpec pilot_mh_init(const TargetModel& target, int iterations, Rng& rng) {
  if (iterations < 1000) throw ArgumentError("pilot_mh_init: need at least 1000 iterations");
  const int dim = target.dim();
  Vec u = target.start();
  double cur = target.log_posterior_unnorm(u);
  if (!std::isfinite(cur)) throw NumericalError("pilot_mh_init: log-posterior not finite at the start point");

  const int burn = iterations / 2;
  const int block = 200;
  Mat chain(iterations, dim);
  Mat cov = 0.01 * Mat::Identity(dim, dim);
  double log_scale = std::log(2.38 * 2.38 / dim);
  Mat chol = spd_cholesky(Mat(std::exp(log_scale) * cov), "pilot proposal").matrixL();
  long accepted_kept = 0;
  long accepted_total = 0;
  int accepted_block = 0;
  for (int it = 0; it < iterations; ++it) {
    const Vec prop = u + chol * std_normal_vec(rng, dim);
    const double next = target.log_posterior_unnorm(prop);
    if (std::isfinite(next) && std::log(uniform01(rng)) < next - cur) {
      u = prop;
      cur = next;
      ++accepted_total;
      ++accepted_block;
      if (it >= burn) ++accepted_kept;
    }
    chain.row(it) = u.transpose();
    if (it < burn && (it + 1) % block == 0) {
      // Robbins-Monro on the log scale toward a 0.234 acceptance rate, and a
      // proposal covariance from the second half of the chain so far.
      const double rate = static_cast<double>(accepted_block) / block;
      accepted_block = 0;
      log_scale += (rate - 0.234) * 2.0 / std::sqrt((it + 1.0) / block);
      const int from = (it + 1) / 2;
      const Mat part = chain.middleRows(from, it + 1 - from);
      const Vec w = Vec::Constant(part.rows(), 1.0 / part.rows());
      Vec m;
      Mat c;
      weighted_moments(part, w, m, c);
      if (accepted_total >= 2 * dim) cov = proposal_covariance(Mat(c + 1e-10 * Mat::Identity(dim, dim)));
      chol = spd_cholesky(Mat(std::exp(log_scale) * cov), "pilot proposal").matrixL();
    }
  }
  if (accepted_kept == 0) throw NumericalError("pilot_mh_init: no proposal accepted after burn-in");
  const Mat kept = chain.bottomRows(iterations - burn);
  Vec mean;
  Mat c;
  weighted_moments(kept, Vec::Constant(kept.rows(), 1.0 / kept.rows()), mean, c);
  return {mean, proposal_covariance(c)};
}

}  // namespace esn
