#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attribkit/incident.hpp"
#include "attribkit/models.hpp"
#include "attribkit/pmf.hpp"

namespace attribkit {

// How a set of per-module opinions is fused into one.
enum class PoolStrategy { linear, logarithmic, pairing };

std::string to_string(PoolStrategy strategy);
PoolStrategy parse_pool_strategy(const std::string& name);

// A named attributor: a fitted model plus the feature subset it reads.
// The name identifies the module in traces and pair enumeration.
struct AttributorBinding {
  std::string name;
  std::vector<int> feature_indices;
  std::shared_ptr<const TrainedAttributor> model;
};

// Everything the pipeline produced for one incident: per-module opinions,
// the pairwise geometric intermediates, and the fused result. Re-pooling
// the recorded layers reproduces `final` bit for bit.
struct AttributionTrace {
  std::vector<std::pair<std::string, Pmf>> module_outputs;
  std::vector<std::pair<std::pair<std::string, std::string>, Pmf>>
      pair_outputs;
  Pmf final;

  std::string to_json_string() const;
};

// Runs one bound attributor on an incident.
Pmf attribute(const AttributorBinding& binding, const Incident& incident);

// All unordered name pairs among the inputs, each exactly once, ordered
// lexicographically. Requires at least two distinctly named inputs.
std::vector<std::pair<std::string, std::string>> pair_attributors(
    std::span<const std::pair<std::string, Pmf>> named);

// Two-stage fusion: every unordered pair of opinions is combined with an
// equal-weight log pool, and the pairwise intermediates are then averaged
// with an equal-weight linear pool. A single input passes through untouched.
// Pairs whose members fully contradict each other are dropped; if no pair
// survives, AllZeroMassError propagates.
AttributionTrace pairing_aggregate(
    std::span<const std::pair<std::string, Pmf>> named);

// Single-result fusion under the chosen strategy with equal weights.
// For PoolStrategy::pairing this equals pairing_aggregate(...).final.
Pmf aggregate(PoolStrategy strategy, std::span<const Pmf> inputs);

// Full trace for one incident across a set of bound attributors.
AttributionTrace explain(std::span<const AttributorBinding> bindings,
                         const Incident& incident);

// One binding per feature, named "f<j>", each fit on that single feature.
std::vector<AttributorBinding> make_modular_bindings(
    std::span<const Incident> train, int feature_count, int actor_count,
    double sigma_floor = kDefaultSigmaFloor,
    double pmf_floor = kDefaultPmfFloor);

// Runtime-composable attributor tree (models at the leaves, pools inside).
// Kept deliberately small: the batch pipeline works on bindings directly,
// but any classifier can participate by implementing this interface.
class Attributor {
public:
  virtual ~Attributor() = default;
  virtual const std::string& name() const = 0;
  virtual int universe_size() const = 0;
  virtual Pmf attribute(const Incident& incident) const = 0;
};

class ModelAttributor final : public Attributor {
public:
  explicit ModelAttributor(AttributorBinding binding);
  const std::string& name() const override { return binding_.name; }
  int universe_size() const override;
  Pmf attribute(const Incident& incident) const override;

private:
  AttributorBinding binding_;
};

class PoolingAttributor final : public Attributor {
public:
  PoolingAttributor(std::string name, PoolStrategy strategy,
                    std::vector<std::shared_ptr<const Attributor>> children);
  const std::string& name() const override { return name_; }
  int universe_size() const override;
  Pmf attribute(const Incident& incident) const override;

private:
  std::string name_;
  PoolStrategy strategy_;
  std::vector<std::shared_ptr<const Attributor>> children_;
};

}  // namespace attribkit
