#include "esn/cli.hpp"

#include "esn/error.hpp"
#include "esn/io.hpp"
#include "esn/model_select.hpp"
#include "esn/summary.hpp"
#include "esn/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace esn {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model", "seed", "n", "input", "output", "stage_log", "particles_out", "posterior", "truth", "init",
      "pilot_iterations", "covariate", "particles", "ess_threshold", "mh_steps", "bisect_epsilon", "scale_init",
      "acceptance_band", "final_sweeps",
      // parameter blocks
      "xi", "sigma", "alpha", "lambda", "omega", "d", "c", "rho", "B", "beta2", "sigma1", "sigma12",
      // hyperparameters
      "xi0", "kappa", "nu", "V", "mu_alpha", "sigma2_alpha", "xi0t", "kappat", "nut", "Vt", "mu_d", "kappa_d",
      "c_beta1", "c_beta2", "mu_beta2", "M"};
  return keys;
}

const std::set<std::string>& known_models() {
  static const std::set<std::string> m = {"esn-p1", "esn-p2", "sn-p1", "gaussian", "esnsm", "tobit2"};
  return m;
}

bool is_iid(const std::string& model) { return model == "esn-p1" || model == "esn-p2" || model == "sn-p1" || model == "gaussian"; }
bool is_selection(const std::string& model) { return model == "esnsm" || model == "tobit2"; }

double num(const Json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("'" + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError("'" + key + "' must be finite");
  return v;
}

std::string str(const Json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError("'" + key + "' must be a string");
  return j.get<std::string>();
}

long integer(const Json& j, const std::string& key) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError("'" + key + "' must be an integer");
  return j.get<long>();
}

// A number (length-1 vector) or an array of numbers.
Vec vec_of(const Json& j, const std::string& key) {
  if (j.is_number()) return Vec::Constant(1, num(j, key));
  if (!j.is_array() || j.empty()) throw ConfigError("'" + key + "' must be a number or a non-empty array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = num(j[i], key);
  return v;
}

// A number (1x1), or an array of equal-length arrays.
Mat mat_of(const Json& j, const std::string& key) {
  if (j.is_number()) return Mat::Constant(1, 1, num(j, key));
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    throw ConfigError("'" + key + "' must be a number or an array of rows");
  }
  Mat m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != j[0].size()) throw ConfigError("'" + key + "': ragged rows");
    for (std::size_t k = 0; k < j[i].size(); ++k) m(i, k) = num(j[i][k], key);
  }
  return m;
}

Vec vec_key(const RunConfig& cfg, const std::string& key, const Vec& fallback, int expected = -1) {
  if (!cfg.raw.contains(key)) return fallback;
  Vec v = vec_of(cfg.raw.at(key), key);
  if (expected >= 0 && v.size() != expected) {
    throw ConfigError("'" + key + "' must have length " + std::to_string(expected));
  }
  return v;
}

Mat mat_key(const RunConfig& cfg, const std::string& key, const Mat& fallback, int rows = -1, int cols = -1) {
  if (!cfg.raw.contains(key)) return fallback;
  Mat m = mat_of(cfg.raw.at(key), key);
  if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols)) {
    throw ConfigError("'" + key + "' must be " + std::to_string(rows) + " x " + std::to_string(cols));
  }
  return m;
}

double num_key(const RunConfig& cfg, const std::string& key, double fallback) {
  return cfg.raw.contains(key) ? num(cfg.raw.at(key), key) : fallback;
}

template <class F>
auto as_config_error(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t require_seed(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("a seed is required (config key 'seed' or --seed)");
  return *cfg.seed;
}

void require_path(const std::string& p, const std::string& key) {
  if (p.empty()) throw ConfigError("'" + key + "' is required for this command");
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write to '" + path + "' failed");
}

Json parameter_json(const ParameterSummary& s) {
  Json j;
  j["name"] = s.name;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["mode"] = s.mode;
  j["sd"] = s.sd;
  j["q025"] = s.q025;
  j["q975"] = s.q975;
  if (s.truth) {
    j["truth"] = *s.truth;
    const auto put = [&](const char* key, double est) {
      const auto dev = percent_deviation(est, *s.truth);
      j[key] = dev ? Json(*dev) : Json(nullptr);
    };
    put("pct_dev_mean", s.mean);
    put("pct_dev_median", s.median);
    put("pct_dev_mode", s.mode);
  }
  return j;
}

void attach_truth(std::vector<ParameterSummary>& sums, const Json& truth) {
  if (!truth.is_object()) throw ConfigError("'truth' must be an object of name -> value");
  std::set<std::string> names;
  for (auto& s : sums) {
    names.insert(s.name);
    if (truth.contains(s.name)) s.truth = num(truth.at(s.name), "truth." + s.name);
  }
  for (const auto& [k, v] : truth.items()) {
    if (!names.count(k)) throw ConfigError("'truth' names unknown parameter '" + k + "'");
  }
}

struct FitOutcome {
  Mat draws;  ///< constrained
  std::vector<std::string> names;
  Mat derived;
  std::vector<std::string> derived_names;
  double log_evidence = 0.0;
  std::string init;
  std::optional<SmcResult> smc;
  int n_obs = 0;
  int dim = 0;
};

Mat constrained_draws(const TargetModel& t, const Mat& particles) {
  Mat out(particles.rows(), t.dim());
  for (Eigen::Index m = 0; m < particles.rows(); ++m) out.row(m) = t.to_constrained(particles.row(m).transpose()).transpose();
  return out;
}

FitOutcome smc_fit(const TargetModel& target, const std::vector<Vec>& starts, bool iid, const RunConfig& cfg) {
  SmcConfig smc = cfg.smc;
  smc.seed = require_seed(cfg);
  std::string init = cfg.init;
  if (init == "auto") init = iid ? "laplace" : "pilot";
  std::unique_ptr<InitialDistribution> eta1;
  std::string used = init;
  Rng pilot_rng = make_stream(smc.seed, ~0ULL, 0);
  if (init == "laplace") {
    try {
      eta1 = std::make_unique<GaussianInit>(laplace_init(target, starts));
    } catch (const NumericalError&) {
      if (cfg.init != "auto") throw;
      eta1 = std::make_unique<GaussianInit>(pilot_mh_init(target, cfg.pilot_iterations, pilot_rng));
      used = "pilot";
    }
  } else if (init == "pilot") {
    eta1 = std::make_unique<GaussianInit>(pilot_mh_init(target, cfg.pilot_iterations, pilot_rng));
  } else {
    eta1 = std::make_unique<PriorInit>(target);
  }
  FitOutcome fo;
  fo.smc = run(target, *eta1, smc);
  fo.init = used;
  fo.names = target.names();
  fo.draws = constrained_draws(target, fo.smc->system.particles);
  fo.log_evidence = fo.smc->log_evidence;
  fo.dim = target.dim();
  return fo;
}

FitOutcome gaussian_exact(const Mat& data, const HyperParamsP1& hyper, const RunConfig& cfg) {
  const std::uint64_t seed = require_seed(cfg);
  const NiwPosterior post = niw_posterior(data, hyper);
  const int d = hyper.dim();
  GaussianTarget t(data, hyper);
  FitOutcome fo;
  fo.names = t.names();
  fo.draws.resize(cfg.smc.n_particles, t.dim());
  for (int m = 0; m < cfg.smc.n_particles; ++m) {
    Rng rng = make_stream(seed, 0, static_cast<std::uint64_t>(m));
    const Mat sigma = sample_inverse_wishart(post.V, post.nu, rng);
    const Mat L = spd_cholesky(sigma, "Sigma").matrixL();
    Vec theta(t.dim());
    theta.head(d) = post.xi + L * std_normal_vec(rng, d) / std::sqrt(post.kappa);
    theta.tail(tri(d)) = vech(sigma);
    fo.draws.row(m) = theta.transpose();
  }
  fo.log_evidence = gaussian_log_evidence(data, hyper);
  fo.init = "exact";
  fo.dim = t.dim();
  return fo;
}

FitOutcome fit_model(const RunConfig& cfg) {
  require_path(cfg.input, "input");
  const std::string& model = cfg.model;
  if (is_iid(model)) {
    const Mat data = read_matrix_csv(cfg.input);
    const int d = static_cast<int>(data.cols());
    FitOutcome fo;
    if (model == "gaussian") {
      fo = gaussian_exact(data, hyper_p1(cfg, d), cfg);
    } else if (model == "esn-p2") {
      const EsnP2Target t(data, hyper_p2(cfg, d));
      fo = smc_fit(t, t.starts(), true, cfg);
    } else {
      const EsnP1Target t(data, hyper_p1(cfg, d), model == "sn-p1");
      fo = smc_fit(t, t.starts(), true, cfg);
    }
    fo.n_obs = static_cast<int>(data.rows());
    return fo;
  }
  const EsnsmData data = read_esnsm_csv(cfg.input);
  const int d = static_cast<int>(data.y.cols());
  const int k = static_cast<int>(data.x.cols());
  const EsnsmTarget t(data, hyper_esnsm(cfg, d, k, data.size()), model == "tobit2");
  FitOutcome fo = smc_fit(t, {t.start()}, false, cfg);
  fo.n_obs = data.size();
  if (d == 1) {
    fo.derived_names = {"rho"};
    fo.derived.resize(fo.draws.rows(), 1);
    const int off = d * k + k;
    for (Eigen::Index m = 0; m < fo.draws.rows(); ++m) {
      fo.derived(m, 0) = fo.draws(m, off + 1) / std::sqrt(fo.draws(m, off));
    }
  }
  return fo;
}

Json stages_json(const SmcResult& r, bool with_time) {
  Json arr = Json::array();
  for (const auto& h : r.system.history) {
    Json s;
    s["rho"] = h.rho;
    s["ess"] = h.ess;
    s["acceptance_rate"] = h.acceptance_rate;
    s["scale"] = h.scale;
    s["log_evidence_increment"] = h.log_evidence_increment;
    if (with_time) s["wall_time_ms"] = h.wall_time_ms;
    arr.push_back(s);
  }
  return arr;
}

}  // namespace

// ---------------------------------------------------------------- config

RunConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known_keys().count(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  RunConfig cfg;
  cfg.raw = j;
  if (j.contains("model")) cfg.model = str(j.at("model"), "model");
  if (!known_models().count(cfg.model)) throw ConfigError("unknown model '" + cfg.model + "'");
  if (j.contains("seed")) {
    const long s = integer(j.at("seed"), "seed");
    if (s < 0) throw ConfigError("'seed' must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("n")) {
    const long n = integer(j.at("n"), "n");
    if (n < 1) throw ConfigError("'n' must be >= 1");
    cfg.n = static_cast<int>(n);
  }
  if (j.contains("input")) cfg.input = str(j.at("input"), "input");
  if (j.contains("output")) cfg.output = str(j.at("output"), "output");
  if (j.contains("stage_log")) cfg.stage_log = str(j.at("stage_log"), "stage_log");
  if (j.contains("particles_out")) cfg.particles_out = str(j.at("particles_out"), "particles_out");
  if (j.contains("posterior")) cfg.posterior = str(j.at("posterior"), "posterior");
  if (j.contains("init")) {
    cfg.init = str(j.at("init"), "init");
    if (cfg.init != "auto" && cfg.init != "laplace" && cfg.init != "pilot" && cfg.init != "prior") {
      throw ConfigError("'init' must be one of auto, laplace, pilot, prior");
    }
  }
  if (j.contains("pilot_iterations")) {
    const long it = integer(j.at("pilot_iterations"), "pilot_iterations");
    if (it < 1000) throw ConfigError("'pilot_iterations' must be >= 1000");
    cfg.pilot_iterations = static_cast<int>(it);
  }
  if (j.contains("covariate")) {
    const long c = integer(j.at("covariate"), "covariate");
    if (c < 1) throw ConfigError("'covariate' is 1-based");
    cfg.covariate = static_cast<int>(c);
  }
  if (j.contains("particles")) cfg.smc.n_particles = static_cast<int>(integer(j.at("particles"), "particles"));
  if (j.contains("ess_threshold")) cfg.smc.ess_threshold_fraction = num(j.at("ess_threshold"), "ess_threshold");
  if (j.contains("mh_steps")) cfg.smc.mh_steps = static_cast<int>(integer(j.at("mh_steps"), "mh_steps"));
  if (j.contains("bisect_epsilon")) cfg.smc.bisect_epsilon = num(j.at("bisect_epsilon"), "bisect_epsilon");
  if (j.contains("scale_init")) cfg.smc.scale_init = num(j.at("scale_init"), "scale_init");
  if (j.contains("final_sweeps")) cfg.smc.final_sweeps_max = static_cast<int>(integer(j.at("final_sweeps"), "final_sweeps"));
  if (j.contains("acceptance_band")) {
    const Vec b = vec_of(j.at("acceptance_band"), "acceptance_band");
    if (b.size() != 2) throw ConfigError("'acceptance_band' must be [low, high]");
    cfg.smc.acceptance_band = {b(0), b(1)};
  }
  if (j.contains("truth")) {
    cfg.truth = j.at("truth");
    if (!cfg.truth.is_object()) throw ConfigError("'truth' must be an object of name -> value");
  }
  as_config_error([&] {
    cfg.smc.validate(1);
    return 0;
  });
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("configuration '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.particles) {
    cfg.smc.n_particles = *o.particles;
    as_config_error([&] {
      cfg.smc.validate(1);
      return 0;
    });
  }
  if (o.out) cfg.output = *o.out;
  if (o.truth_path) {
    std::ifstream in(*o.truth_path);
    if (!in) throw ConfigError("cannot open truth file '" + *o.truth_path + "'");
    try {
      cfg.truth = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("truth file is not valid JSON: " + std::string(e.what()));
    }
    if (!cfg.truth.is_object()) throw ConfigError("truth file must hold an object of name -> value");
  }
}

HyperParamsP1 hyper_p1(const RunConfig& cfg, int d) {
  return as_config_error([&] {
    HyperParamsP1 h = default_hyper(d).first;
    h.xi0 = vec_key(cfg, "xi0", h.xi0, d);
    h.kappa = num_key(cfg, "kappa", h.kappa);
    h.nu = num_key(cfg, "nu", h.nu);
    h.V = mat_key(cfg, "V", h.V, d, d);
    h.mu_alpha = vec_key(cfg, "mu_alpha", h.mu_alpha, d);
    h.sigma2_alpha = num_key(cfg, "sigma2_alpha", h.sigma2_alpha);
    h.validate();
    return h;
  });
}

HyperParamsP2 hyper_p2(const RunConfig& cfg, int d) {
  return as_config_error([&] {
    const HyperParamsP1 h1 = hyper_p1(cfg, d);
    HyperParamsP2 h = default_hyper(d).second;
    h.xi0t = vec_key(cfg, "xi0t", h1.xi0, d);
    h.kappat = num_key(cfg, "kappat", h1.kappa);
    h.nut = num_key(cfg, "nut", h1.nu);
    h.Vt = mat_key(cfg, "Vt", h.Vt, d, d);
    h.mu_d = vec_key(cfg, "mu_d", h.mu_d, d);
    h.kappa_d = num_key(cfg, "kappa_d", kappa_d_from(h1.sigma2_alpha, h.nut, d));
    h.validate();
    check_pairing(h1, h);
    return h;
  });
}

EsnsmHyper hyper_esnsm(const RunConfig& cfg, int d, int k, int n) {
  return as_config_error([&] {
    EsnsmHyper h = default_esnsm_hyper(d, k, n);
    h.kappa = num_key(cfg, "kappa", h.kappa);
    h.nu = num_key(cfg, "nu", h.nu);
    h.V = mat_key(cfg, "V", h.V, d, d);
    h.M = mat_key(cfg, "M", h.M, d, k);
    h.c_beta1 = num_key(cfg, "c_beta1", h.c_beta1);
    h.c_beta2 = num_key(cfg, "c_beta2", h.c_beta2);
    h.mu_beta2 = vec_key(cfg, "mu_beta2", h.mu_beta2, k);
    h.mu_alpha = vec_key(cfg, "mu_alpha", h.mu_alpha, d + 1);
    h.sigma2_alpha = num_key(cfg, "sigma2_alpha", h.sigma2_alpha);
    h.validate(d, k);
    return h;
  });
}

EsnParamsP1 config_params_p1(const RunConfig& cfg) {
  return as_config_error([&] {
    if (!cfg.raw.contains("xi") || !cfg.raw.contains("sigma")) throw ConfigError("parameters 'xi' and 'sigma' are required");
    EsnParamsP1 p;
    p.xi = vec_key(cfg, "xi", Vec());
    const int d = p.dim();
    p.sigma = mat_key(cfg, "sigma", Mat(), d, d);
    p.alpha = vec_key(cfg, "alpha", Vec::Zero(d), d);
    p.lambda = num_key(cfg, "lambda", 0.0);
    if (cfg.model == "gaussian" && (p.alpha.squaredNorm() != 0.0 || p.lambda != 0.0)) {
      throw ConfigError("the gaussian model takes no 'alpha' or 'lambda'");
    }
    if (cfg.model == "sn-p1" && p.lambda != 0.0) throw ConfigError("the sn-p1 model has lambda = 0");
    p.validate();
    return p;
  });
}

EsnParamsP2 config_params_p2(const RunConfig& cfg) {
  return as_config_error([&] {
    if (!cfg.raw.contains("xi") || !cfg.raw.contains("omega")) throw ConfigError("parameters 'xi' and 'omega' are required");
    EsnParamsP2 p;
    p.xi = vec_key(cfg, "xi", Vec());
    const int d = p.dim();
    p.omega = mat_key(cfg, "omega", Mat(), d, d);
    p.dvec = vec_key(cfg, "d", Vec::Zero(d), d);
    p.c = num_key(cfg, "c", 0.0);
    p.validate();
    return p;
  });
}

EsnsmParams config_params_esnsm(const RunConfig& cfg) {
  return as_config_error([&] {
    EsnsmParams p = design_params(num_key(cfg, "rho", 0.3));
    p.B = mat_key(cfg, "B", p.B);
    const int d = static_cast<int>(p.B.rows());
    const int k = static_cast<int>(p.B.cols());
    p.beta2 = vec_key(cfg, "beta2", p.beta2, k);
    p.sigma1 = mat_key(cfg, "sigma1", d == 1 ? p.sigma1 : Mat(Mat::Identity(d, d)), d, d);
    p.sigma12 = vec_key(cfg, "sigma12", d == 1 ? p.sigma12 : Vec(Vec::Zero(d)), d);
    p.alpha = vec_key(cfg, "alpha", d == 1 ? p.alpha : Vec(Vec::Zero(d + 1)), d + 1);
    p.lambda = num_key(cfg, "lambda", p.lambda);
    if (cfg.model == "tobit2") {
      if (cfg.raw.contains("alpha") || cfg.raw.contains("lambda")) throw ConfigError("the tobit2 model takes no 'alpha' or 'lambda'");
      p.alpha.setZero();
      p.lambda = 0.0;
    }
    p.validate();
    return p;
  });
}

// ---------------------------------------------------------------- commands

Json cmd_simulate(const RunConfig& cfg) {
  const std::uint64_t seed = require_seed(cfg);
  require_path(cfg.output, "output");
  Rng rng = make_stream(seed, 0, 0);
  Json out;
  out["command"] = "simulate";
  out["model"] = cfg.model;
  out["seed"] = seed;
  out["rows"] = cfg.n;
  if (is_iid(cfg.model)) {
    const EsnParamsP1 p = cfg.model == "esn-p2" ? p2_to_p1(config_params_p2(cfg)) : config_params_p1(cfg);
    const Mat y = sample(p, cfg.n, rng);
    write_matrix_csv(cfg.output, y);
    out["dimension"] = p.dim();
  } else {
    const EsnsmParams p = config_params_esnsm(cfg);
    if (p.n_covariates() != 3) throw ConfigError("simulation uses the design covariates (1, x1, x2): B needs 3 columns");
    const Mat x = design_covariates(cfg.n, rng);
    const EsnsmData data = simulate(p, x, rng);
    write_esnsm_csv(cfg.output, data);
    out["dimension"] = p.dim();
    out["censored_fraction"] = data.censored_fraction();
  }
  out["output"] = cfg.output;
  return out;
}

Json cmd_fit(const RunConfig& cfg) {
  const FitOutcome fo = fit_model(cfg);
  std::vector<ParameterSummary> sums = summarize(fo.draws, fo.names);
  attach_truth(sums, cfg.truth.is_object() ? cfg.truth : Json::object());
  Json out;
  out["command"] = "fit";
  out["model"] = cfg.model;
  out["seed"] = *cfg.seed;
  out["n_observations"] = fo.n_obs;
  out["n_particles"] = cfg.smc.n_particles;
  out["initialization"] = fo.init;
  out["log_evidence"] = fo.log_evidence;
  out["n_stages"] = fo.smc ? static_cast<int>(fo.smc->system.history.size()) : 0;
  out["final_acceptance"] = fo.smc ? Json(fo.smc->final_acceptance) : Json(nullptr);
  Json params = Json::array();
  for (const auto& s : sums) params.push_back(parameter_json(s));
  out["parameters"] = params;
  Json derived = Json::array();
  if (fo.derived.cols() > 0) {
    for (const auto& s : summarize(fo.derived, fo.derived_names)) derived.push_back(parameter_json(s));
  }
  out["derived"] = derived;
  out["stages"] = fo.smc ? stages_json(*fo.smc, false) : Json::array();

  if (!cfg.stage_log.empty()) {
    Json log;
    log["model"] = cfg.model;
    log["stages"] = fo.smc ? stages_json(*fo.smc, true) : Json::array();
    write_json(cfg.stage_log, log);
  }
  if (!cfg.particles_out.empty()) {
    CsvTable t;
    t.header = fo.names;
    for (Eigen::Index m = 0; m < fo.draws.rows(); ++m) {
      std::vector<std::string> r;
      for (Eigen::Index j = 0; j < fo.draws.cols(); ++j) r.push_back(format_double(fo.draws(m, j)));
      t.rows.push_back(std::move(r));
    }
    write_csv(cfg.particles_out, t);
  }
  if (!cfg.output.empty()) write_json(cfg.output, out);
  return out;
}

Json cmd_compare(const RunConfig& cfg) {
  if (!is_iid(cfg.model) || cfg.model == "gaussian") {
    throw ConfigError("compare fits an ESN-family model (esn-p1, esn-p2, sn-p1) against the Gaussian model");
  }
  const FitOutcome fo = fit_model(cfg);
  const Mat data = read_matrix_csv(cfg.input);
  const double log_m0 = gaussian_log_evidence(data, hyper_p1(cfg, static_cast<int>(data.cols())));
  const EvidenceComparison cmp = classify_bayes_factor(fo.log_evidence, log_m0);
  Json out;
  out["command"] = "compare";
  out["model"] = cfg.model;
  out["seed"] = *cfg.seed;
  out["n_observations"] = fo.n_obs;
  out["n_particles"] = cfg.smc.n_particles;
  out["log_m1"] = cmp.log_m1;
  out["log_m0"] = cmp.log_m0;
  out["log10_bayes_factor"] = cmp.log10_bayes_factor;
  out["category"] = to_string(cmp.category);
  if (!cfg.output.empty()) write_json(cfg.output, out);
  return out;
}

Json cmd_marginal_effects(const RunConfig& cfg) {
  if (!is_selection(cfg.model)) throw ConfigError("marginal effects need the esnsm or tobit2 model");
  require_path(cfg.input, "input");
  require_path(cfg.output, "output");
  const EsnsmData data = read_esnsm_csv(cfg.input);
  const int d = static_cast<int>(data.y.cols());
  const int k = static_cast<int>(data.x.cols());
  if (d != 1) throw DataError("marginal effects are defined for a univariate outcome");
  const int cov = cfg.covariate == 0 ? k : cfg.covariate;
  if (cov > k) throw ConfigError("'covariate' exceeds the number of covariates");

  EsnsmParams p;
  std::string source;
  if (!cfg.posterior.empty()) {
    std::ifstream in(cfg.posterior);
    if (!in) throw ConfigError("cannot open posterior summary '" + cfg.posterior + "'");
    Json post;
    try {
      post = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("posterior summary is not valid JSON: " + std::string(e.what()));
    }
    const EsnsmTarget t(data, hyper_esnsm(cfg, d, k, data.size()), cfg.model == "tobit2");
    const auto names = t.names();
    Vec theta(t.dim());
    if (!post.contains("parameters") || !post["parameters"].is_array()) throw ConfigError("posterior summary lacks 'parameters'");
    for (std::size_t i = 0; i < names.size(); ++i) {
      bool found = false;
      for (const auto& e : post["parameters"]) {
        if (e.value("name", "") == names[i]) {
          theta(i) = num(e.at("mean"), names[i]);
          found = true;
        }
      }
      if (!found) throw ConfigError("posterior summary lacks parameter '" + names[i] + "'");
    }
    p = as_config_error([&] { return t.params(t.to_unconstrained(theta)); });
    source = "posterior_mean";
  } else {
    p = config_params_esnsm(cfg);
    if (p.n_covariates() != k) throw ConfigError("parameter blocks do not match the data's covariates");
    source = "config";
  }

  CsvTable t;
  t.header = {"row", "effect"};
  double sum = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const double me = marginal_effect(p, data.x.row(i).transpose(), cov - 1);
    sum += me;
    t.rows.push_back({std::to_string(i + 1), format_double(me)});
  }
  write_csv(cfg.output, t);
  Json out;
  out["command"] = "me";
  out["model"] = cfg.model;
  out["parameters_from"] = source;
  out["covariate"] = "x" + std::to_string(cov);
  out["n_observations"] = data.size();
  out["average_marginal_effect"] = sum / data.size();
  out["output"] = cfg.output;
  return out;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e)) return 3;
  return 4;
}

}  // namespace esn
