#include "attribkit/models.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace attribkit {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 * ln(2*pi)

void validate_feature_indices(const std::vector<int>& indices, int m) {
  if (indices.empty()) {
    throw ValidationError("fit: at least one feature index is required");
  }
  std::vector<int> sorted = indices;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0 || sorted.back() >= m) {
    throw ValidationError("fit: feature index out of range");
  }
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("fit: duplicate feature index");
  }
}

void validate_features(const Incident& incident, std::size_t m) {
  if (incident.features.size() != m) {
    throw ValidationError("incident: feature vector length mismatch");
  }
  for (double v : incident.features) {
    if (!std::isfinite(v)) {
      throw ValidationError("incident: features must be finite");
    }
  }
}

}  // namespace

double TrainedAttributor::mean(int actor, int slot) const {
  return means_[static_cast<std::size_t>(actor) * feature_indices_.size() +
                slot];
}

double TrainedAttributor::stddev(int actor, int slot) const {
  return stddevs_[static_cast<std::size_t>(actor) * feature_indices_.size() +
                  slot];
}

void TrainedAttributor::rebuild_derived() {
  const std::size_t slots = feature_indices_.size();
  log_base_.assign(t_, 0.0);
  inv_sigma_.assign(static_cast<std::size_t>(t_) * slots, 0.0);
  for (int i = 0; i < t_; ++i) {
    double base = std::log(priors_[i]);
    for (std::size_t k = 0; k < slots; ++k) {
      const double sigma = stddevs_[i * slots + k];
      inv_sigma_[i * slots + k] = 1.0 / sigma;
      base -= kHalfLog2Pi + std::log(sigma);
    }
    log_base_[i] = base;
  }
}

Pmf TrainedAttributor::predict(const Incident& incident) const {
  if (!trained()) {
    throw UntrainedModelError("predict: model has not been fitted");
  }
  const std::size_t slots = feature_indices_.size();
  int needed = 0;
  for (int idx : feature_indices_) needed = std::max(needed, idx + 1);
  if (incident.features.size() < static_cast<std::size_t>(needed)) {
    throw ValidationError("predict: incident has too few features");
  }
  for (int idx : feature_indices_) {
    if (!std::isfinite(incident.features[idx])) {
      throw ValidationError("predict: features must be finite");
    }
  }

  // Joint log-likelihood per actor, then exp-normalize against the maximum.
  std::vector<double> lm(t_);
  for (int i = 0; i < t_; ++i) {
    const std::size_t off = static_cast<std::size_t>(i) * slots;
    double acc = log_base_[i];
    for (std::size_t k = 0; k < slots; ++k) {
      const double z =
          (incident.features[feature_indices_[k]] - means_[off + k]) *
          inv_sigma_[off + k];
      acc -= 0.5 * z * z;
    }
    lm[i] = acc;
  }
  const double shift = *std::max_element(lm.begin(), lm.end());
  std::vector<double> p(t_);
  double sum = 0.0;
  for (int i = 0; i < t_; ++i) {
    p[i] = std::exp(lm[i] - shift);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  // Floor, then renormalize, so no actor is ever exactly ruled out.
  double floored_sum = 0.0;
  for (double& v : p) {
    v = std::max(v, pmf_floor_);
    floored_sum += v;
  }
  for (double& v : p) v /= floored_sum;
  return Pmf(std::move(p));
}

TrainedAttributor fit(std::span<const Incident> train,
                      std::vector<int> feature_indices, int actor_count,
                      double sigma_floor, double pmf_floor) {
  if (train.empty()) {
    throw EmptyTrainingSetError("fit: training set is empty");
  }
  if (actor_count < 1) {
    throw ValidationError("fit: actor universe must be non-empty");
  }
  if (!(sigma_floor > 0.0) || !(pmf_floor > 0.0)) {
    throw ValidationError("fit: floors must be positive");
  }
  const std::size_t m = train.front().features.size();
  validate_feature_indices(feature_indices, static_cast<int>(m));

  const std::size_t slots = feature_indices.size();
  const std::size_t t = static_cast<std::size_t>(actor_count);
  std::vector<std::int64_t> counts(t, 0);
  std::vector<double> sum(t * slots, 0.0), sumsq(t * slots, 0.0);
  std::vector<double> gsum(slots, 0.0), gsumsq(slots, 0.0);

  for (const Incident& incident : train) {
    validate_features(incident, m);
    if (!incident.label.has_value()) {
      throw ValidationError("fit: training incidents must be labeled");
    }
    const int a = *incident.label;
    if (a < 0 || a >= actor_count) {
      throw ValidationError("fit: label outside the actor universe");
    }
    ++counts[a];
    const std::size_t off = static_cast<std::size_t>(a) * slots;
    for (std::size_t k = 0; k < slots; ++k) {
      const double x = incident.features[feature_indices[k]];
      sum[off + k] += x;
      sumsq[off + k] += x * x;
      gsum[k] += x;
      gsumsq[k] += x * x;
    }
  }

  const double n = static_cast<double>(train.size());
  std::vector<double> global_sigma(slots);
  for (std::size_t k = 0; k < slots; ++k) {
    const double gmean = gsum[k] / n;
    global_sigma[k] = std::sqrt(std::max(0.0, gsumsq[k] / n - gmean * gmean));
  }

  TrainedAttributor model;
  model.t_ = actor_count;
  model.feature_indices_ = std::move(feature_indices);
  model.sigma_floor_ = sigma_floor;
  model.pmf_floor_ = pmf_floor;
  model.priors_.resize(t);
  model.means_.assign(t * slots, 0.0);
  model.stddevs_.assign(t * slots, 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    model.priors_[i] = (counts[i] + 1.0) / (n + actor_count);
    const std::size_t off = i * slots;
    for (std::size_t k = 0; k < slots; ++k) {
      if (counts[i] > 0) {
        const double mean = sum[off + k] / counts[i];
        const double var =
            std::max(0.0, sumsq[off + k] / counts[i] - mean * mean);
        model.means_[off + k] = mean;
        model.stddevs_[off + k] = std::max(std::sqrt(var), sigma_floor);
      } else {
        // Unseen actor: uninformative location, feature-wide spread.
        model.means_[off + k] = 0.0;
        model.stddevs_[off + k] = std::max(global_sigma[k], sigma_floor);
      }
    }
  }
  model.rebuild_derived();
  return model;
}

TrainedAttributor fit_baseline(std::span<const Incident> train,
                               int actor_count, double sigma_floor,
                               double pmf_floor) {
  if (train.empty()) {
    throw EmptyTrainingSetError("fit: training set is empty");
  }
  std::vector<int> all(train.front().features.size());
  for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
  return fit(train, std::move(all), actor_count, sigma_floor, pmf_floor);
}

std::string TrainedAttributor::to_json_string() const {
  if (!trained()) {
    throw UntrainedModelError("serialize: model has not been fitted");
  }
  nlohmann::ordered_json doc;
  doc["format"] = 1;
  doc["t"] = t_;
  doc["feature_indices"] = feature_indices_;
  doc["priors"] = priors_;
  nlohmann::ordered_json features = nlohmann::ordered_json::array();
  const std::size_t slots = feature_indices_.size();
  for (std::size_t k = 0; k < slots; ++k) {
    std::vector<double> means(t_), stddevs(t_);
    for (int i = 0; i < t_; ++i) {
      means[i] = means_[i * slots + k];
      stddevs[i] = stddevs_[i * slots + k];
    }
    features.push_back({{"means", means}, {"stddevs", stddevs}});
  }
  doc["features"] = std::move(features);
  doc["sigma_floor"] = sigma_floor_;
  doc["pmf_floor"] = pmf_floor_;
  return doc.dump();
}

TrainedAttributor TrainedAttributor::from_json_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<int>() != 1) {
      throw IoError("model: unsupported format version");
    }
    TrainedAttributor model;
    model.t_ = doc.at("t").get<int>();
    model.feature_indices_ = doc.at("feature_indices").get<std::vector<int>>();
    model.priors_ = doc.at("priors").get<std::vector<double>>();
    model.sigma_floor_ = doc.at("sigma_floor").get<double>();
    model.pmf_floor_ = doc.at("pmf_floor").get<double>();
    const auto& features = doc.at("features");
    const std::size_t slots = model.feature_indices_.size();
    if (model.t_ < 1 || features.size() != slots ||
        model.priors_.size() != static_cast<std::size_t>(model.t_)) {
      throw IoError("model: inconsistent shapes");
    }
    model.means_.assign(static_cast<std::size_t>(model.t_) * slots, 0.0);
    model.stddevs_.assign(static_cast<std::size_t>(model.t_) * slots, 0.0);
    for (std::size_t k = 0; k < slots; ++k) {
      const auto means = features[k].at("means").get<std::vector<double>>();
      const auto stddevs =
          features[k].at("stddevs").get<std::vector<double>>();
      if (means.size() != static_cast<std::size_t>(model.t_) ||
          stddevs.size() != static_cast<std::size_t>(model.t_)) {
        throw IoError("model: inconsistent shapes");
      }
      for (int i = 0; i < model.t_; ++i) {
        model.means_[i * slots + k] = means[i];
        model.stddevs_[i * slots + k] = stddevs[i];
      }
    }
    for (double s : model.stddevs_) {
      if (!(s >= model.sigma_floor_)) {
        throw IoError("model: stddev below floor");
      }
    }
    model.rebuild_derived();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model: missing or mistyped field: ") +
                  e.what());
  }
}

}  // namespace attribkit
