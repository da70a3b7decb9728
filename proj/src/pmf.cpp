#include "attribkit/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace attribkit {

namespace {

void require_nonempty(std::span<const Pmf> inputs) {
  if (inputs.empty()) {
    throw EmptyInputError("pool: at least one input assignment is required");
  }
}

std::size_t require_same_universe(std::span<const Pmf> inputs) {
  const std::size_t t = inputs.front().universe_size();
  for (const Pmf& q : inputs) {
    if (q.universe_size() != t) {
      throw UniverseMismatchError(
          "pool: inputs are defined over different actor universes");
    }
  }
  return t;
}

void require_matching_weights(std::span<const Pmf> inputs,
                              const PoolWeights& weights) {
  if (weights.size() != inputs.size()) {
    throw ValidationError("pool: weight count does not match input count");
  }
}

bool all_strictly_positive(std::span<const Pmf> inputs) {
  double lowest = 1.0;
  for (const Pmf& q : inputs) {
    for (double v : q.probabilities()) lowest = std::min(lowest, v);
  }
  return lowest > 0.0;
}

bool equal_weights(const PoolWeights& w) {
  for (std::size_t k = 1; k < w.size(); ++k) {
    if (w[k] != w[0]) return false;
  }
  return true;
}

// x^e for an exponent known to be an exact negative power of two
// (0.5 -> one sqrt, 0.125 -> three), or -1 if e has no such form.
int sqrt_passes_for(double e) {
  int passes = 0;
  while (e < 1.0 && passes < 8) {
    e *= 2.0;
    ++passes;
    if (e == 1.0) return passes;
  }
  return -1;
}

// Geometric pooling of strictly positive equal-weight inputs in the direct
// domain: w_k = w for all k, so prod_k q_k^w = (prod_k q_k)^w. Returns the
// finished pool, or false if the running product underflows and the
// log-domain route has to take over.
bool log_pool_positive_equal(std::span<const Pmf> inputs, double w,
                             Pmf& result) {
  const std::size_t t = inputs.front().universe_size();
  std::vector<double> out(t);
  if (inputs.size() == 2) {
    // Pairwise form used heavily by the pairing aggregator: one sqrt per
    // input entry, no transcendental calls.
    if (w != 0.5) return false;
    const auto a = inputs[0].probabilities();
    const auto b = inputs[1].probabilities();
    for (std::size_t i = 0; i < t; ++i) {
      out[i] = std::sqrt(a[i]) * std::sqrt(b[i]);
    }
    result = normalize(std::move(out));
    return true;
  }
  const auto q0 = inputs[0].probabilities();
  for (std::size_t i = 0; i < t; ++i) out[i] = q0[i];
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const auto q = inputs[k].probabilities();
    for (std::size_t i = 0; i < t; ++i) out[i] *= q[i];
  }
  for (double v : out) {
    if (v == 0.0) return false;  // underflow; log domain handles it
  }
  const int passes = sqrt_passes_for(w);
  if (passes > 0) {
    for (int p = 0; p < passes; ++p) {
      for (double& v : out) v = std::sqrt(v);
    }
  } else {
    for (double& v : out) v = std::pow(v, w);
  }
  double sum = 0.0;
  for (double v : out) sum += v;
  // Entries are in (0, 1], so sum is positive and finite; one reciprocal
  // replaces t divisions, with a clamp for the ulp the multiply can add.
  const double inv = 1.0 / sum;
  for (double& v : out) v = std::min(v * inv, 1.0);
  result = Pmf(std::move(out));
  return true;
}

}  // namespace

Pmf::Pmf(std::vector<double> probabilities) : p_(std::move(probabilities)) {
  if (p_.empty()) {
    throw ValidationError("pmf: actor universe must be non-empty");
  }
  double sum = 0.0;
  for (double v : p_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError("pmf: probabilities must lie in [0, 1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kPmfSumTolerance) {
    throw ValidationError("pmf: total mass deviates from 1 beyond tolerance");
  }
}

Pmf Pmf::uniform(std::size_t universe_size) {
  if (universe_size == 0) {
    throw ValidationError("pmf: actor universe must be non-empty");
  }
  return Pmf(std::vector<double>(universe_size, 1.0 / universe_size));
}

ActorId Pmf::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p_.size(); ++i) {
    if (p_[i] > p_[best]) best = i;
  }
  return static_cast<ActorId>(best);
}

double Pmf::max_probability() const { return p_[argmax()]; }

PoolWeights::PoolWeights(std::vector<double> weights) : w_(std::move(weights)) {
  if (w_.empty()) {
    throw ValidationError("weights: at least one weight is required");
  }
  double sum = 0.0;
  for (double v : w_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("weights: entries must be finite and >= 0");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kPmfSumTolerance) {
    throw ValidationError("weights: total must be 1 within tolerance");
  }
}

PoolWeights PoolWeights::equal(std::size_t count) {
  if (count == 0) {
    throw ValidationError("weights: at least one weight is required");
  }
  return PoolWeights(std::vector<double>(count, 1.0 / count));
}

Pmf normalize(std::vector<double> raw) {
  if (raw.empty()) {
    throw EmptyInputError("normalize: empty mass vector");
  }
  double sum = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("normalize: masses must be finite and >= 0");
    }
    sum += v;
  }
  if (sum == 0.0) {
    throw AllZeroMassError("normalize: total mass is zero");
  }
  for (double& v : raw) v /= sum;
  return Pmf(std::move(raw));
}

Pmf linear_pool(std::span<const Pmf> inputs, const PoolWeights& weights) {
  require_nonempty(inputs);
  require_matching_weights(inputs, weights);
  const std::size_t t = require_same_universe(inputs);
  std::vector<double> acc(t, 0.0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const double w = weights[k];
    const auto q = inputs[k].probabilities();
    for (std::size_t i = 0; i < t; ++i) acc[i] += w * q[i];
  }
  return normalize(std::move(acc));
}

Pmf log_pool(std::span<const Pmf> inputs, const PoolWeights& weights) {
  require_nonempty(inputs);
  require_matching_weights(inputs, weights);
  const std::size_t t = require_same_universe(inputs);

  Pmf fast;
  if (equal_weights(weights) && all_strictly_positive(inputs) &&
      log_pool_positive_equal(inputs, weights[0], fast)) {
    return fast;
  }

  // Log domain: an exact zero under a positive weight zeroes the actor;
  // everything else accumulates as sum of w_k * ln q_k, shifted by the
  // maximum before exponentiation so small masses survive.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> lm(t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const double w = weights[k];
      if (w == 0.0) continue;
      const double q = inputs[k][i];
      if (q == 0.0) {
        acc = kNegInf;
        break;
      }
      acc += w * std::log(q);
    }
    lm[i] = acc;
  }
  const double shift = *std::max_element(lm.begin(), lm.end());
  if (shift == kNegInf) {
    throw AllZeroMassError("log pool: inputs contradict everywhere");
  }
  std::vector<double> raw(t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    raw[i] = lm[i] == kNegInf ? 0.0 : std::exp(lm[i] - shift);
  }
  return normalize(std::move(raw));
}

Pmf holder_pool(std::span<const Pmf> inputs, const PoolWeights& weights,
                double alpha) {
  if (!std::isfinite(alpha)) {
    throw ValidationError("holder pool: alpha must be finite");
  }
  if (alpha == 0.0) return log_pool(inputs, weights);
  require_nonempty(inputs);
  require_matching_weights(inputs, weights);
  const std::size_t t = require_same_universe(inputs);

  // Power mean (sum_k w_k q_k^alpha)^(1/alpha), evaluated through the log
  // domain with a max shift so extreme alphas stay representable.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<double> lraw(t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    double s = 0.0;
    bool zero_input = false;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      const double w = weights[k];
      if (w == 0.0) continue;
      const double q = inputs[k][i];
      if (q == 0.0) {
        if (alpha < 0.0) zero_input = true;  // q^alpha diverges
        continue;
      }
      s += w * std::pow(q, alpha);
    }
    if (zero_input || s == 0.0 || std::isinf(s)) {
      // A diverging or empty mean carries no mass at this actor.
      lraw[i] = kNegInf;
    } else {
      lraw[i] = std::log(s) / alpha;
    }
  }
  const double shift = *std::max_element(lraw.begin(), lraw.end());
  if (shift == kNegInf) {
    throw AllZeroMassError("holder pool: inputs contradict everywhere");
  }
  std::vector<double> raw(t, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    raw[i] = lraw[i] == kNegInf ? 0.0 : std::exp(lraw[i] - shift);
  }
  return normalize(std::move(raw));
}

Pmf linear_pool(std::span<const Pmf> inputs) {
  // Equal weights cancel under the final normalization, so the hot path
  // just sums; the weighted overload remains the general form.
  require_nonempty(inputs);
  const std::size_t t = require_same_universe(inputs);
  std::vector<double> acc(inputs.front().probabilities().begin(),
                          inputs.front().probabilities().end());
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const auto q = inputs[k].probabilities();
    for (std::size_t i = 0; i < t; ++i) acc[i] += q[i];
  }
  return normalize(std::move(acc));
}

Pmf log_pool(std::span<const Pmf> inputs) {
  require_nonempty(inputs);
  require_same_universe(inputs);
  Pmf fast;
  if (all_strictly_positive(inputs) &&
      log_pool_positive_equal(inputs, 1.0 / inputs.size(), fast)) {
    return fast;
  }
  return log_pool(inputs, PoolWeights::equal(inputs.size()));
}

Pmf holder_pool(std::span<const Pmf> inputs, double alpha) {
  return holder_pool(inputs, PoolWeights::equal(inputs.size()), alpha);
}

}  // namespace attribkit
