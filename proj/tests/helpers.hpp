#pragma once

// Shared helpers for the unit suites: seeded random assignments and small
// distance utilities. Every suite seeds its own mt19937_64 so failures
// reproduce exactly.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "attribkit/pmf.hpp"

namespace testutil {

// Strictly positive random PMF; `floor` keeps entries away from zero so
// geometric pools stay on their positive path.
inline attribkit::Pmf random_pmf(std::mt19937_64& rng, std::size_t t,
                                 double floor = 1e-6) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<double> raw(t);
  for (double& v : raw) v = u(rng);
  return attribkit::normalize(std::move(raw));
}

inline std::vector<attribkit::Pmf> random_pmf_set(std::mt19937_64& rng,
                                                  std::size_t count,
                                                  std::size_t t,
                                                  double floor = 1e-6) {
  std::vector<attribkit::Pmf> set;
  set.reserve(count);
  for (std::size_t k = 0; k < count; ++k) set.push_back(random_pmf(rng, t, floor));
  return set;
}

inline double linf(const attribkit::Pmf& a, const attribkit::Pmf& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.universe_size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

inline double linf(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, std::abs(a[i] - b[i]));
  }
  return d;
}

// Random convex weight vector with strictly positive entries.
inline attribkit::PoolWeights random_weights(std::mt19937_64& rng,
                                             std::size_t count) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(count);
  double sum = 0.0;
  for (double& v : w) {
    v = u(rng);
    sum += v;
  }
  for (double& v : w) v /= sum;
  return attribkit::PoolWeights(std::move(w));
}

}  // namespace testutil
