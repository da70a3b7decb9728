#pragma once

#include <span>
#include <string>
#include <vector>

#include "attribkit/incident.hpp"
#include "attribkit/pmf.hpp"

namespace attribkit {

inline constexpr double kDefaultSigmaFloor = 1e-6;
inline constexpr double kDefaultPmfFloor = 1e-12;

// Class-conditional Gaussian attributor over a subset of features.
// Per actor it keeps a Laplace-smoothed prior and an independent Gaussian
// per bound feature; predictions are posterior probabilities floored away
// from exact zero so downstream geometric pooling stays well defined.
// Immutable once fitted; predict() is safe to call concurrently.
class TrainedAttributor {
public:
  TrainedAttributor() = default;  // untrained; predict() throws

  bool trained() const { return t_ > 0; }
  int universe_size() const { return t_; }
  const std::vector<int>& feature_indices() const { return feature_indices_; }
  std::span<const double> priors() const { return priors_; }
  double sigma_floor() const { return sigma_floor_; }
  double pmf_floor() const { return pmf_floor_; }

  // slot indexes into feature_indices(), not into the raw feature vector.
  double mean(int actor, int slot) const;
  double stddev(int actor, int slot) const;

  // Posterior over actors given the incident's bound features.
  Pmf predict(const Incident& incident) const;

  // Flat JSON persistence; round-trips bit-exactly.
  std::string to_json_string() const;
  static TrainedAttributor from_json_string(const std::string& text);

private:
  friend TrainedAttributor fit(std::span<const Incident>, std::vector<int>,
                               int, double, double);
  void rebuild_derived();

  int t_ = 0;
  std::vector<int> feature_indices_;
  std::vector<double> priors_;    // t entries
  std::vector<double> means_;     // t x slots, actor-major
  std::vector<double> stddevs_;   // t x slots, floored at sigma_floor_
  double sigma_floor_ = kDefaultSigmaFloor;
  double pmf_floor_ = kDefaultPmfFloor;

  // Derived at fit/load time, never persisted.
  std::vector<double> log_base_;   // log prior + sum of Gaussian log norms
  std::vector<double> inv_sigma_;  // t x slots
};

// Fits one attributor on the labeled training incidents, restricted to the
// given feature indices. Priors are Laplace smoothed: (n_i + 1) / (n + t).
// Actors absent from the training set fall back to mean 0 and the global
// stddev of the feature; all stddev estimates are floored at sigma_floor.
TrainedAttributor fit(std::span<const Incident> train,
                      std::vector<int> feature_indices, int actor_count,
                      double sigma_floor = kDefaultSigmaFloor,
                      double pmf_floor = kDefaultPmfFloor);

// Monolithic reference model: one attributor bound to every feature.
TrainedAttributor fit_baseline(std::span<const Incident> train,
                               int actor_count,
                               double sigma_floor = kDefaultSigmaFloor,
                               double pmf_floor = kDefaultPmfFloor);

}  // namespace attribkit
