#include "attribkit/batch.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace attribkit {

Pmf PairingScratch::run(std::span<const Pmf> inputs) {
  if (inputs.size() < 2) {
    return aggregate(PoolStrategy::pairing, inputs);
  }
  const std::size_t k_count = inputs.size();
  const std::size_t t = inputs.front().universe_size();
  double lowest = 1.0;
  for (const Pmf& q : inputs) {
    if (q.universe_size() != t) {
      throw UniverseMismatchError("pairing: universe mismatch");
    }
    for (double v : q.probabilities()) lowest = std::min(lowest, v);
  }
  if (!(lowest > 0.0)) {
    // Zeros need the log-domain contradiction handling; take the
    // reference path.
    return aggregate(PoolStrategy::pairing, inputs);
  }

  // Same quantity as the reference path, rearranged: with u = sqrt(q),
  // each pair contributes w * u_a u_b / <u_a, u_b>, so the per-element
  // division by the pair mass folds into one scalar per pair. Square roots
  // are taken once per input instead of once per pair. Agrees with
  // aggregate(PoolStrategy::pairing, ...) within a few ulp per entry.
  roots_.resize(k_count * t);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto q = inputs[k].probabilities();
    double* u = roots_.data() + k * t;
    for (std::size_t i = 0; i < t; ++i) u[i] = std::sqrt(q[i]);
  }
  const std::size_t pair_count = k_count * (k_count - 1) / 2;
  const double pair_weight = 1.0 / static_cast<double>(pair_count);
  acc_.assign(t, 0.0);
  raw_.resize(t);
  for (std::size_t a = 0; a + 1 < k_count; ++a) {
    const double* ua = roots_.data() + a * t;
    for (std::size_t b = a + 1; b < k_count; ++b) {
      const double* ub = roots_.data() + b * t;
      double dot = 0.0;
      for (std::size_t i = 0; i < t; ++i) {
        raw_[i] = ua[i] * ub[i];
        dot += raw_[i];
      }
      if (!(dot > 0.0) || !std::isfinite(dot)) {
        // Underflowed pair mass; the log-domain reference handles it.
        return aggregate(PoolStrategy::pairing, inputs);
      }
      const double scale = pair_weight / dot;
      for (std::size_t i = 0; i < t; ++i) {
        acc_[i] += scale * raw_[i];
      }
    }
  }
  double total = 0.0;
  for (double v : acc_) total += v;
  const double inv_total = 1.0 / total;
  std::vector<double> out(t);
  // min() absorbs the ulp the reciprocal multiply can add at a dominant
  // entry; entries stay in [0, 1] by construction otherwise.
  for (std::size_t i = 0; i < t; ++i) {
    out[i] = std::min(acc_[i] * inv_total, 1.0);
  }
  return Pmf(std::move(out));
}

std::vector<Pmf> module_opinions(std::span<const AttributorBinding> bindings,
                                 const Incident& incident) {
  std::vector<Pmf> opinions;
  opinions.reserve(bindings.size());
  for (const AttributorBinding& binding : bindings) {
    opinions.push_back(attribute(binding, incident));
  }
  return opinions;
}

namespace {

Pmf fuse(std::span<const Pmf> opinions, PoolStrategy strategy,
         PairingScratch& scratch) {
  if (opinions.size() == 1) return opinions.front();
  switch (strategy) {
    case PoolStrategy::linear:
      return linear_pool(opinions);
    case PoolStrategy::logarithmic:
      return log_pool(opinions);
    case PoolStrategy::pairing:
      return scratch.run(opinions);
  }
  throw InternalError("unknown pool strategy");
}

}  // namespace

std::vector<Pmf> attribute_incidents_serial(
    std::span<const AttributorBinding> bindings,
    std::span<const Incident> incidents, PoolStrategy strategy) {
  if (bindings.empty()) {
    throw EmptyInputError("batch: at least one binding needed");
  }
  std::vector<Pmf> finals(incidents.size());
  PairingScratch scratch;
  for (std::size_t r = 0; r < incidents.size(); ++r) {
    const std::vector<Pmf> opinions = module_opinions(bindings, incidents[r]);
    finals[r] = fuse(opinions, strategy, scratch);
  }
  return finals;
}

std::vector<Pmf> attribute_incidents_omp(
    std::span<const AttributorBinding> bindings,
    std::span<const Incident> incidents, PoolStrategy strategy, int threads) {
  if (bindings.empty()) {
    throw EmptyInputError("batch: at least one binding needed");
  }
#ifdef _OPENMP
  if (threads != 1) {
    std::vector<Pmf> finals(incidents.size());
    const std::int64_t n = static_cast<std::int64_t>(incidents.size());
#pragma omp parallel num_threads(threads > 0 ? threads \
                                             : omp_get_max_threads())
    {
      PairingScratch scratch;
#pragma omp for schedule(static)
      for (std::int64_t r = 0; r < n; ++r) {
        const std::vector<Pmf> opinions =
            module_opinions(bindings, incidents[r]);
        finals[r] = fuse(opinions, strategy, scratch);
      }
    }
    return finals;
  }
#endif
  return attribute_incidents_serial(bindings, incidents, strategy);
}

std::vector<Pmf> predict_incidents_serial(
    const TrainedAttributor& model, std::span<const Incident> incidents) {
  std::vector<Pmf> finals(incidents.size());
  for (std::size_t r = 0; r < incidents.size(); ++r) {
    finals[r] = model.predict(incidents[r]);
  }
  return finals;
}

std::vector<Pmf> predict_incidents_omp(const TrainedAttributor& model,
                                       std::span<const Incident> incidents,
                                       int threads) {
#ifdef _OPENMP
  if (threads != 1) {
    std::vector<Pmf> finals(incidents.size());
    const std::int64_t n = static_cast<std::int64_t>(incidents.size());
#pragma omp parallel for schedule(static) \
    num_threads(threads > 0 ? threads : omp_get_max_threads())
    for (std::int64_t r = 0; r < n; ++r) {
      finals[r] = model.predict(incidents[r]);
    }
    return finals;
  }
#endif
  return predict_incidents_serial(model, incidents);
}

}  // namespace attribkit
