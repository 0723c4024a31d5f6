#include "esn/summary.hpp"

#include "esn/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace esn {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw ArgumentError("quantile: empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

double sample_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

}  // namespace

double silverman_bandwidth(const std::vector<double>& values) {
  std::vector<double> s = values;
  std::sort(s.begin(), s.end());
  const double sd = sample_sd(s);
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 0.0;
  return 0.9 * spread * std::pow(static_cast<double>(s.size()), -0.2);
}

double kde_mode(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("kde_mode: empty sample");
  const double h = silverman_bandwidth(values);
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (!(h > 0.0)) return *mn;
  const int grid = 512;
  const double lo = *mn - 3.0 * h;
  const double hi = *mx + 3.0 * h;
  double best_x = lo;
  double best = -1.0;
  for (int g = 0; g < grid; ++g) {
    const double x = lo + (hi - lo) * g / (grid - 1);
    double dens = 0.0;
    for (double v : values) {
      const double z = (x - v) / h;
      dens += std::exp(-0.5 * z * z);
    }
    if (dens > best) {
      best = dens;
      best_x = x;
    }
  }
  return best_x;
}

std::vector<ParameterSummary> summarize(const Mat& draws, const std::vector<std::string>& names) {
  if (static_cast<Eigen::Index>(names.size()) != draws.cols()) throw ArgumentError("summarize: names do not match columns");
  if (draws.rows() < 1) throw ArgumentError("summarize: no draws");
  std::vector<ParameterSummary> out;
  for (Eigen::Index j = 0; j < draws.cols(); ++j) {
    std::vector<double> v(draws.rows());
    for (Eigen::Index i = 0; i < draws.rows(); ++i) v[i] = draws(i, j);
    ParameterSummary s;
    s.name = names[j];
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    s.sd = sample_sd(v);
    s.mode = kde_mode(v);
    std::sort(v.begin(), v.end());
    s.median = quantile_sorted(v, 0.5);
    s.q025 = quantile_sorted(v, 0.025);
    s.q975 = quantile_sorted(v, 0.975);
    out.push_back(s);
  }
  return out;
}

std::optional<double> percent_deviation(double estimate, double truth) {
  if (truth == 0.0) return std::nullopt;
  return 100.0 * (estimate - truth) / truth;
}

}  // namespace esn
