#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attribkit/errors.hpp"

namespace attribkit {

using ActorId = int;

// Tolerance on the total mass of a valid probability assignment.
inline constexpr double kPmfSumTolerance = 1e-9;

// Probability mass function over the actor universe {0, ..., t-1}.
// Entries are dense and indexed by actor id; explicit zeros are legal.
// Immutable after construction, safe to share across threads.
class Pmf {
public:
  Pmf() = default;

  // Validates: at least one entry, every entry finite and in [0, 1],
  // total mass within kPmfSumTolerance of 1.
  explicit Pmf(std::vector<double> probabilities);

  static Pmf uniform(std::size_t universe_size);

  std::size_t universe_size() const { return p_.size(); }
  bool empty() const { return p_.empty(); }
  double operator[](std::size_t actor) const { return p_[actor]; }
  std::span<const double> probabilities() const { return p_; }

  // Most probable actor; ties resolve to the lowest actor id.
  ActorId argmax() const;
  double max_probability() const;

  friend bool operator==(const Pmf&, const Pmf&) = default;

private:
  std::vector<double> p_;
};

// Convex pooling weights: non-negative, summing to 1 within tolerance.
class PoolWeights {
public:
  explicit PoolWeights(std::vector<double> weights);

  // w_k = 1/count for every k. The default everywhere in this toolkit.
  static PoolWeights equal(std::size_t count);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t k) const { return w_[k]; }
  std::span<const double> values() const { return w_; }

private:
  std::vector<double> w_;
};

// Scales a non-negative vector to unit mass.
// Throws AllZeroMassError when the total mass is zero.
Pmf normalize(std::vector<double> raw);

// Weighted arithmetic mean of the inputs.
Pmf linear_pool(std::span<const Pmf> inputs, const PoolWeights& weights);

// Weighted geometric mean of the inputs, renormalized. Computed in the log
// domain with a max shift so that tiny masses cannot underflow to zero.
// An exact zero in any positively-weighted input zeroes that actor in the
// output; if that holds everywhere the inputs are fully contradictory and
// AllZeroMassError is thrown.
Pmf log_pool(std::span<const Pmf> inputs, const PoolWeights& weights);

// Weighted power mean with exponent alpha, renormalized. alpha = 1 recovers
// the linear pool; alpha = 0 is defined as the log pool (the analytic limit).
Pmf holder_pool(std::span<const Pmf> inputs, const PoolWeights& weights,
                double alpha);

// Equal-weight conveniences.
Pmf linear_pool(std::span<const Pmf> inputs);
Pmf log_pool(std::span<const Pmf> inputs);
Pmf holder_pool(std::span<const Pmf> inputs, double alpha);

}  // namespace attribkit
