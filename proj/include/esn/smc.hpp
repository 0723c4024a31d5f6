#pragma once

// Adaptive tempered SMC over the geometric bridge
//   pi_rho(u) ∝ eta1(u)^{1 - rho} pi(u)^rho,  rho in [0, 1],
// in unconstrained coordinates u.

#include "esn/linalg.hpp"
#include "esn/rng.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace esn {

/// Posterior expressed in unconstrained coordinates. log_prior must be the
/// prior density of u (Jacobian of the reparametrization included), so that
/// it integrates to one over R^dim.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual int dim() const = 0;
  virtual double log_prior(const Vec& u) const = 0;
  virtual double log_likelihood(const Vec& u) const = 0;
  virtual Vec sample_prior(Rng& rng) const = 0;
  /// A reasonable starting point for optimizers and pilot chains.
  virtual Vec start() const = 0;

  /// Natural (constrained) parameter vector and its labels.
  virtual std::vector<std::string> names() const = 0;
  virtual Vec to_constrained(const Vec& u) const = 0;
  virtual Vec to_unconstrained(const Vec& theta) const = 0;

  /// log prior + log likelihood; -inf where either throws or is not finite.
  double log_posterior_unnorm(const Vec& u) const;
};

/// The normalized initial distribution eta1 of the bridge.
class InitialDistribution {
 public:
  virtual ~InitialDistribution() = default;
  virtual double logpdf(const Vec& u) const = 0;
  virtual Vec sample(Rng& rng) const = 0;
};

struct GaussianSpec {
  Vec mean;
  Mat cov;
};

class GaussianInit : public InitialDistribution {
 public:
  explicit GaussianInit(GaussianSpec spec);
  double logpdf(const Vec& u) const override;
  Vec sample(Rng& rng) const override;
  const GaussianSpec& spec() const { return spec_; }

 private:
  GaussianSpec spec_;
  Eigen::LLT<Mat> llt_;
  double log_norm_ = 0.0;
};

/// eta1 = prior of the target.
class PriorInit : public InitialDistribution {
 public:
  explicit PriorInit(const TargetModel& target) : target_(target) {}
  double logpdf(const Vec& u) const override { return target_.log_prior(u); }
  Vec sample(Rng& rng) const override { return target_.sample_prior(rng); }

 private:
  const TargetModel& target_;
};

struct SmcConfig {
  int n_particles = 10000;
  double ess_threshold_fraction = 0.5;
  int mh_steps = 3;
  double bisect_epsilon = 1e-4;
  double scale_init = 0.0;  ///< <= 0 selects 2.38^2 / dim
  std::pair<double, double> acceptance_band{0.2, 0.6};
  /// Extra MH sweeps at rho = 1 when the last stage's acceptance rate falls
  /// outside the band (the scale is re-adapted before each sweep).
  int final_sweeps_max = 5;
  std::uint64_t seed = 1;

  void validate(int dim) const;
};

struct StageRecord {
  double rho = 0.0;
  double ess = 0.0;
  double acceptance_rate = 0.0;
  double scale = 0.0;
  double log_evidence_increment = 0.0;
  double wall_time_ms = 0.0;
};

struct ParticleSystem {
  Mat particles;      ///< N x dim
  Vec log_weights;    ///< normalized: log-sum-exp is 0
  Vec log_target;     ///< cached log prior + log likelihood per particle
  Vec log_eta1;       ///< cached log eta1 per particle
  double rho = 0.0;
  double log_evidence_acc = 0.0;
  std::vector<StageRecord> history;

  int size() const { return static_cast<int>(particles.rows()); }
  /// log(pi / eta1) per particle; -inf where the target vanishes.
  Vec log_ratio() const;
  Vec weights() const;
};

struct SmcResult {
  ParticleSystem system;
  double log_evidence = 0.0;
  double final_acceptance = 0.0;
};

/// [sum W^2]^{-1} from unnormalized log-weights.
double ess(const Vec& log_weights);

/// Log-weights shifted so that log-sum-exp is 0.
Vec normalize_log_weights(const Vec& log_weights);

/// Normalized log-weights after moving the system from its rho to rho_new.
Vec reweight(const ParticleSystem& system, double rho_new);

/// log sum_m W^m (pi/eta1)^(rho_new - rho) at the system's current weights.
double evidence_increment(const ParticleSystem& system, double rho_new);

/// Largest admissible temperature by bisection on ESS(rho) >= beta.
double next_temperature(const ParticleSystem& system, const SmcConfig& config);

/// Systematic resampling with offset u in [0,1): index m takes the particle
/// whose cumulative weight first exceeds (m + u) / N.
std::vector<int> systematic_resample(const Vec& log_weights, double u);
/// As above with `n_out` draws (n_out <= 0 means one per input particle).
std::vector<int> systematic_resample(const Vec& log_weights, double u, int n_out);
std::vector<int> systematic_resample(const Vec& log_weights, Rng& rng);

struct MoveStats {
  double acceptance_rate = 0.0;
};

/// `steps` random-walk MH moves per particle targeting pi_rho with proposal
/// N(u, scale * cov). Particle m of stage `stage` uses the stream
/// derive_seed(seed, stage, m).
MoveStats rwmh_propagate(ParticleSystem& system, const TargetModel& target, const InitialDistribution& eta1,
                         double rho, const Mat& cov, double scale, int steps, std::uint64_t seed,
                         std::uint64_t stage);

SmcResult run(const TargetModel& target, const InitialDistribution& eta1, const SmcConfig& config);

/// Laplace approximation in unconstrained coordinates from each start point;
/// the best mode wins. Throws NumericalError when no start converges.
GaussianSpec laplace_init(const TargetModel& target, const std::vector<Vec>& starts);
GaussianSpec laplace_init(const TargetModel& target, const Vec& start);

/// Adaptive random-walk pilot chain from target.start(); the proposal is
/// tuned during the first half, eta1 takes the moments of the second half.
GaussianSpec pilot_mh_init(const TargetModel& target, int iterations, Rng& rng);

/// Proposal covariance used by the engine: cov if SPD, otherwise its diagonal
/// plus a 1e-8 ridge.
Mat proposal_covariance(const Mat& cov);

}  // namespace esn
