#pragma once

#include "esn/linalg.hpp"

#include <cstdint>
#include <random>

namespace esn {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream identified by (root, a, b). Streams for distinct
/// tuples are statistically independent for practical purposes.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(root) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

inline Rng make_stream(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
  return Rng(derive_seed(root, a, b));
}

inline double std_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

inline double uniform01(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

inline Vec std_normal_vec(Rng& rng, Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = std_normal(rng);
  return v;
}

}  // namespace esn
