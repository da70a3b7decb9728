#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "attribkit/pmf.hpp"

namespace attribkit {

// One observed security incident: a feature vector plus, when known, the
// responsible actor and the per-feature false-flag injection mask.
struct Incident {
  std::int64_t id = 0;
  std::int64_t time_step = 0;
  std::vector<double> features;
  std::optional<ActorId> label;
  // mask[j] is true when feature j was replaced with a value planted to
  // look like another actor. Present on simulator output (all-false for
  // training incidents); absent for externally sourced incidents.
  std::optional<std::vector<bool>> false_flag_mask;
};

}  // namespace attribkit
