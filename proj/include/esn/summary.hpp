#pragma once

#include "esn/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace esn {

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double median = 0.0;
  double mode = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  std::optional<double> truth;
};

/// Linear-interpolation quantile of `sorted` (ascending) at probability p.
double quantile_sorted(const std::vector<double>& sorted, double p);

/// Silverman's rule-of-thumb bandwidth 0.9 min(sd, IQR/1.34) n^{-1/5}.
double silverman_bandwidth(const std::vector<double>& values);

/// Argmax of a Gaussian kernel density estimate on a 512-point grid spanning
/// the sample range padded by three bandwidths.
double kde_mode(const std::vector<double>& values);

/// Equal-weight summary of each column of `draws`.
std::vector<ParameterSummary> summarize(const Mat& draws, const std::vector<std::string>& names);

/// 100 (estimate - truth) / truth; nullopt when truth is 0.
std::optional<double> percent_deviation(double estimate, double truth);

}  // namespace esn
