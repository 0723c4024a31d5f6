#pragma once

// Configuration and command implementations behind the esn-smc executable.

#include "esn/esnsm.hpp"
#include "esn/priors.hpp"
#include "esn/smc.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace esn {

using Json = nlohmann::ordered_json;

struct RunConfig {
  std::string model = "esn-p1";
  std::optional<std::uint64_t> seed;
  int n = 1000;
  std::string input;
  std::string output;
  std::string stage_log;
  std::string particles_out;
  std::string posterior;
  std::string init = "auto";  ///< auto | laplace | pilot | prior
  int pilot_iterations = 10000;
  int covariate = 0;          ///< 1-based; 0 selects the last column
  SmcConfig smc;
  Json truth = Json::object();
  Json raw = Json::object();  ///< the full configuration, for parameter and hyperparameter blocks
};

/// Parses a flat JSON configuration. Unknown keys, wrong types and invalid
/// values raise ConfigError.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& path);

/// Command-line overrides applied on top of the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> particles;
  std::optional<std::string> out;
  std::optional<std::string> truth_path;
};
void apply_overrides(RunConfig& cfg, const Overrides& o);

/// Hyperparameters: defaults for the dimension, then any overrides present in cfg.raw.
HyperParamsP1 hyper_p1(const RunConfig& cfg, int d);
HyperParamsP2 hyper_p2(const RunConfig& cfg, int d);
EsnsmHyper hyper_esnsm(const RunConfig& cfg, int d, int k, int n);

/// Parameter blocks of the configuration.
EsnParamsP1 config_params_p1(const RunConfig& cfg);
EsnParamsP2 config_params_p2(const RunConfig& cfg);
EsnsmParams config_params_esnsm(const RunConfig& cfg);

Json cmd_simulate(const RunConfig& cfg);
Json cmd_fit(const RunConfig& cfg);
Json cmd_compare(const RunConfig& cfg);
Json cmd_marginal_effects(const RunConfig& cfg);

/// Exit codes: 0 success, 2 configuration, 3 data, 4 numerical failure.
int exit_code_for(const std::exception& e);

}  // namespace esn
