#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "attribkit/incident.hpp"

namespace attribkit {

// Non-stationary incident stream configuration. Defaults reproduce the
// reference scale (~4e5 incidents); tests shrink s and t.
struct SimConfig {
  std::int64_t s = 100000;  // time steps; first half is the training window
  int t = 128;              // actor universe size
  int m = 8;                // features per incident
  double false_flag_prob = 0.4;   // per-feature injection rate on test data
  double drift_sigma = 0.01;      // stddev of per-step parameter increments
  double activity_low = 0.0001;   // initial per-step incident probability
  double activity_high = 0.1;     // ... upper bound, also the drift clamp
  std::uint64_t seed = 0;
  bool drift_enabled = true;

  void validate() const;  // throws ValidationError
};

// Latent generator state for one actor. start/end bound the activity
// window; means/stddevs parameterize one Gaussian per feature.
struct ThreatActorProfile {
  double activity = 0.0;
  double start = 0.0;
  double end = 0.0;
  std::vector<double> means;
  std::vector<double> stddevs;
};

// A generated corpus: incidents in emission (time) order, first
// train_count of them belong to the training split (time_step < s/2).
struct Dataset {
  SimConfig config;
  std::vector<Incident> incidents;
  std::int64_t train_count = 0;
  std::int64_t test_count = 0;

  std::span<const Incident> train() const {
    return {incidents.data(), static_cast<std::size_t>(train_count)};
  }
  std::span<const Incident> test() const {
    return {incidents.data() + train_count,
            static_cast<std::size_t>(test_count)};
  }
};

// One false-flag injection, recorded when a log is requested.
struct InjectionRecord {
  std::int64_t incident_id = 0;
  int feature = 0;
  double original = 0.0;
  double injected = 0.0;
  ActorId donor_actor = 0;
  std::int64_t donor_incident_id = 0;
};

// Initial actor profiles drawn from the configured ranges. Consumes the
// same leading RNG draws as generate(), so profiles can be re-derived for
// a dataset from its config alone.
std::vector<ThreatActorProfile> generate_profiles(const SimConfig& config);

// One drift step: every mean, stddev and activity moves by an independent
// N(0, drift_sigma) increment; stddevs clamp at 0, activity clamps to
// [0, activity_high].
void step_drift(std::vector<ThreatActorProfile>& profiles,
                const SimConfig& config, std::mt19937_64& rng);

// Full generation pass: emission with drift, time-based split, then
// false-flag injection on the test half (donor values are drawn from other
// actors' training incidents). Deterministic for a fixed config.
Dataset generate(const SimConfig& config,
                 std::vector<InjectionRecord>* injection_log = nullptr);

// Small corpus for walkthroughs: 3 actors, 3 features, 2000 steps. Rerolls
// the seed (seed, seed+1, ...) until every actor has training incidents;
// gives up after 100 attempts.
Dataset interpretability_fixture(std::uint64_t seed);

// Line-oriented JSON: a meta line followed by one incident per line.
// Serialization is byte-stable for a fixed dataset.
void write_jsonl(const Dataset& dataset, std::ostream& out);
void write_jsonl(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_jsonl(std::istream& in);
Dataset read_jsonl(const std::filesystem::path& path);

}  // namespace attribkit
