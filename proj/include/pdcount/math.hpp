#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace pdcount {

inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// log Pois(k; lambda); k is a non-negative integer stored as double
inline double poisson_log_pmf(double k, double lambda) {
  if (lambda <= 0.0) {
    return k == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
}

inline double poisson_pmf(double k, double lambda) {
  return std::exp(poisson_log_pmf(k, lambda));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Child stream r of a base seed; replicates draw from disjoint streams.
inline std::uint64_t child_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 1));
}

}  // namespace pdcount
