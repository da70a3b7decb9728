#include "attribkit/attribution.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <json.hpp>

namespace attribkit {

namespace {

void require_unique_names(std::span<const std::pair<std::string, Pmf>> named) {
  std::set<std::string> seen;
  for (const auto& [name, pmf] : named) {
    if (!seen.insert(name).second) {
      throw ValidationError("pairing: duplicate attributor name: " + name);
    }
  }
}

void require_consistent_universe(
    std::span<const std::pair<std::string, Pmf>> named) {
  const std::size_t t = named.front().second.universe_size();
  for (const auto& [name, pmf] : named) {
    if (pmf.universe_size() != t) {
      throw UniverseMismatchError(
          "pairing: attributors disagree on the actor universe");
    }
  }
}

// Pair enumeration and two-stage pooling over inputs already arranged in
// enumeration order. Index pairs come out as (0,1), (0,2), ..., (K-2,K-1).
struct PairingCore {
  std::vector<std::pair<std::size_t, std::size_t>> pair_indices;
  std::vector<Pmf> pair_pmfs;
  Pmf final;
};

PairingCore pairing_core(std::span<const Pmf> inputs) {
  PairingCore out;
  const PoolWeights half = PoolWeights::equal(2);
  for (std::size_t a = 0; a + 1 < inputs.size(); ++a) {
    for (std::size_t b = a + 1; b < inputs.size(); ++b) {
      const Pmf pair_input[2] = {inputs[a], inputs[b]};
      try {
        out.pair_pmfs.push_back(log_pool(pair_input, half));
        out.pair_indices.emplace_back(a, b);
      } catch (const AllZeroMassError&) {
        // Fully contradictory pair: contributes nothing.
      }
    }
  }
  if (out.pair_pmfs.empty()) {
    throw AllZeroMassError("pairing: every pair is fully contradictory");
  }
  out.final = linear_pool(out.pair_pmfs);
  return out;
}

}  // namespace

std::string to_string(PoolStrategy strategy) {
  switch (strategy) {
    case PoolStrategy::linear:
      return "linear";
    case PoolStrategy::logarithmic:
      return "logarithmic";
    case PoolStrategy::pairing:
      return "pairing";
  }
  throw InternalError("unknown pool strategy");
}

PoolStrategy parse_pool_strategy(const std::string& name) {
  if (name == "linear") return PoolStrategy::linear;
  if (name == "logarithmic") return PoolStrategy::logarithmic;
  if (name == "pairing") return PoolStrategy::pairing;
  throw ValidationError("unknown pool strategy: " + name);
}

Pmf attribute(const AttributorBinding& binding, const Incident& incident) {
  if (!binding.model || !binding.model->trained()) {
    throw UntrainedModelError("attribute: binding '" + binding.name +
                              "' has no fitted model");
  }
  if (binding.feature_indices != binding.model->feature_indices()) {
    throw ValidationError("attribute: binding '" + binding.name +
                          "' disagrees with its model about features");
  }
  return binding.model->predict(incident);
}

std::vector<std::pair<std::string, std::string>> pair_attributors(
    std::span<const std::pair<std::string, Pmf>> named) {
  if (named.size() < 2) {
    throw TooFewAttributorsError("pairing: at least two attributors needed");
  }
  require_unique_names(named);
  std::vector<std::string> names;
  names.reserve(named.size());
  for (const auto& [name, pmf] : named) names.push_back(name);
  std::sort(names.begin(), names.end());
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(names.size() * (names.size() - 1) / 2);
  for (std::size_t a = 0; a + 1 < names.size(); ++a) {
    for (std::size_t b = a + 1; b < names.size(); ++b) {
      pairs.emplace_back(names[a], names[b]);
    }
  }
  return pairs;
}

AttributionTrace pairing_aggregate(
    std::span<const std::pair<std::string, Pmf>> named) {
  if (named.empty()) {
    throw EmptyInputError("pairing: at least one attributor needed");
  }
  require_unique_names(named);
  require_consistent_universe(named);

  AttributionTrace trace;
  trace.module_outputs.assign(named.begin(), named.end());
  if (named.size() == 1) {
    trace.final = named.front().second;
    return trace;
  }

  // Enumeration order is lexicographic by module name.
  std::vector<std::size_t> order(named.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return named[a].first < named[b].first;
  });
  std::vector<Pmf> arranged;
  arranged.reserve(named.size());
  for (std::size_t idx : order) arranged.push_back(named[idx].second);

  PairingCore core = pairing_core(arranged);
  trace.pair_outputs.reserve(core.pair_pmfs.size());
  for (std::size_t p = 0; p < core.pair_pmfs.size(); ++p) {
    const auto& [a, b] = core.pair_indices[p];
    trace.pair_outputs.emplace_back(
        std::make_pair(named[order[a]].first, named[order[b]].first),
        std::move(core.pair_pmfs[p]));
  }
  trace.final = std::move(core.final);
  return trace;
}

Pmf aggregate(PoolStrategy strategy, std::span<const Pmf> inputs) {
  if (inputs.empty()) {
    throw EmptyInputError("aggregate: at least one input needed");
  }
  if (inputs.size() == 1) return inputs.front();
  switch (strategy) {
    case PoolStrategy::linear:
      return linear_pool(inputs);
    case PoolStrategy::logarithmic:
      return log_pool(inputs);
    case PoolStrategy::pairing:
      return pairing_core(inputs).final;
  }
  throw InternalError("unknown pool strategy");
}

AttributionTrace explain(std::span<const AttributorBinding> bindings,
                         const Incident& incident) {
  if (bindings.empty()) {
    throw EmptyInputError("explain: at least one binding needed");
  }
  std::vector<std::pair<std::string, Pmf>> named;
  named.reserve(bindings.size());
  for (const AttributorBinding& binding : bindings) {
    named.emplace_back(binding.name, attribute(binding, incident));
  }
  return pairing_aggregate(named);
}

std::vector<AttributorBinding> make_modular_bindings(
    std::span<const Incident> train, int feature_count, int actor_count,
    double sigma_floor, double pmf_floor) {
  if (feature_count < 1) {
    throw ValidationError("bindings: feature count must be positive");
  }
  std::vector<AttributorBinding> bindings;
  bindings.reserve(feature_count);
  for (int j = 0; j < feature_count; ++j) {
    AttributorBinding binding;
    binding.name = "f" + std::to_string(j);
    binding.feature_indices = {j};
    binding.model = std::make_shared<TrainedAttributor>(
        fit(train, {j}, actor_count, sigma_floor, pmf_floor));
    bindings.push_back(std::move(binding));
  }
  return bindings;
}

std::string AttributionTrace::to_json_string() const {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json modules = nlohmann::ordered_json::object();
  for (const auto& [name, pmf] : module_outputs) {
    modules[name] = std::vector<double>(pmf.probabilities().begin(),
                                        pmf.probabilities().end());
  }
  doc["modules"] = std::move(modules);
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  for (const auto& [names, pmf] : pair_outputs) {
    pairs.push_back({{"a", names.first},
                     {"b", names.second},
                     {"pmf", std::vector<double>(pmf.probabilities().begin(),
                                                 pmf.probabilities().end())}});
  }
  doc["pairs"] = std::move(pairs);
  doc["final"] = std::vector<double>(final.probabilities().begin(),
                                     final.probabilities().end());
  return doc.dump();
}

ModelAttributor::ModelAttributor(AttributorBinding binding)
    : binding_(std::move(binding)) {
  if (!binding_.model || !binding_.model->trained()) {
    throw UntrainedModelError("attributor: model has not been fitted");
  }
}

int ModelAttributor::universe_size() const {
  return binding_.model->universe_size();
}

Pmf ModelAttributor::attribute(const Incident& incident) const {
  return attribkit::attribute(binding_, incident);
}

PoolingAttributor::PoolingAttributor(
    std::string name, PoolStrategy strategy,
    std::vector<std::shared_ptr<const Attributor>> children)
    : name_(std::move(name)),
      strategy_(strategy),
      children_(std::move(children)) {
  if (children_.empty()) {
    throw EmptyInputError("attributor: a pool needs at least one child");
  }
  for (const auto& child : children_) {
    if (!child) throw ValidationError("attributor: null child");
    if (child->universe_size() != children_.front()->universe_size()) {
      throw UniverseMismatchError(
          "attributor: children disagree on the actor universe");
    }
  }
}

int PoolingAttributor::universe_size() const {
  return children_.front()->universe_size();
}

Pmf PoolingAttributor::attribute(const Incident& incident) const {
  std::vector<Pmf> opinions;
  opinions.reserve(children_.size());
  for (const auto& child : children_) {
    opinions.push_back(child->attribute(incident));
  }
  return aggregate(strategy_, opinions);
}

}  // namespace attribkit
