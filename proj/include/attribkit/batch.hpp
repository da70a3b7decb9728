#pragma once

#include <span>
#include <vector>

#include "attribkit/attribution.hpp"
#include "attribkit/incident.hpp"
#include "attribkit/models.hpp"

namespace attribkit {

// Allocation-lean equal-weight pairing kernel for hot loops. On strictly
// positive inputs it computes the same quantity as
// aggregate(PoolStrategy::pairing, ...) with the per-pair normalization
// folded into one scalar, agreeing with the reference within 1e-12 L-inf;
// anything else falls back to the reference implementation. One instance
// per thread; run() is not reentrant.
class PairingScratch {
public:
  Pmf run(std::span<const Pmf> inputs);

private:
  std::vector<double> roots_;  // sqrt of every input entry, input-major
  std::vector<double> raw_;
  std::vector<double> acc_;
};

// Opinions of every bound module for one incident, in binding order.
std::vector<Pmf> module_opinions(std::span<const AttributorBinding> bindings,
                                 const Incident& incident);

// End-to-end modular attribution over a batch of incidents: module
// predictions fused per incident under the strategy. The _serial form is
// the reference; the _omp form distributes incidents across threads
// (threads = 0 lets OpenMP decide) and returns bitwise identical results.
std::vector<Pmf> attribute_incidents_serial(
    std::span<const AttributorBinding> bindings,
    std::span<const Incident> incidents, PoolStrategy strategy);
std::vector<Pmf> attribute_incidents_omp(
    std::span<const AttributorBinding> bindings,
    std::span<const Incident> incidents, PoolStrategy strategy,
    int threads = 0);

// Monolithic counterparts: one model, no pooling.
std::vector<Pmf> predict_incidents_serial(const TrainedAttributor& model,
                                          std::span<const Incident> incidents);
std::vector<Pmf> predict_incidents_omp(const TrainedAttributor& model,
                                       std::span<const Incident> incidents,
                                       int threads = 0);

}  // namespace attribkit
