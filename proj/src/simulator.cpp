#include "attribkit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace attribkit {

namespace {

// Feature sampling needs a positive scale even when drift has pinned a
// stddev to the clamp at zero.
constexpr double kSampleSigmaFloor = 1e-9;

double draw_uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double draw_normal(std::mt19937_64& rng, double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

std::vector<ThreatActorProfile> draw_profiles(std::mt19937_64& rng,
                                              const SimConfig& config) {
  std::vector<ThreatActorProfile> profiles(config.t);
  const double s = static_cast<double>(config.s);
  for (ThreatActorProfile& p : profiles) {
    p.activity = draw_uniform(rng, config.activity_low, config.activity_high);
    p.start = draw_uniform(rng, 0.0, 0.4 * s);
    p.end = draw_uniform(rng, 0.6 * s, s);
    p.means.resize(config.m);
    p.stddevs.resize(config.m);
    for (int j = 0; j < config.m; ++j) {
      p.means[j] = draw_uniform(rng, -1.0, 1.0);
    }
    for (int j = 0; j < config.m; ++j) {
      p.stddevs[j] = draw_uniform(rng, 0.0, 1.0 / config.t);
    }
  }
  return profiles;
}

}  // namespace

void SimConfig::validate() const {
  if (s < 2) throw ValidationError("sim: s must be at least 2");
  if (t < 2) throw ValidationError("sim: at least two actors required");
  if (m < 1) throw ValidationError("sim: at least one feature required");
  if (!(false_flag_prob >= 0.0 && false_flag_prob <= 1.0)) {
    throw ValidationError("sim: false_flag_prob must lie in [0, 1]");
  }
  if (!(drift_sigma >= 0.0) || !std::isfinite(drift_sigma)) {
    throw ValidationError("sim: drift_sigma must be finite and >= 0");
  }
  if (!(activity_low < activity_high) || !(activity_low >= 0.0) ||
      !(activity_high <= 1.0)) {
    throw ValidationError(
        "sim: activity range must satisfy 0 <= low < high <= 1");
  }
}

std::vector<ThreatActorProfile> generate_profiles(const SimConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  return draw_profiles(rng, config);
}

void step_drift(std::vector<ThreatActorProfile>& profiles,
                const SimConfig& config, std::mt19937_64& rng) {
  for (ThreatActorProfile& p : profiles) {
    for (double& mu : p.means) {
      mu += draw_normal(rng, 0.0, config.drift_sigma);
    }
    for (double& sigma : p.stddevs) {
      sigma = std::max(0.0, sigma + draw_normal(rng, 0.0, config.drift_sigma));
    }
    p.activity = std::clamp(
        p.activity + draw_normal(rng, 0.0, config.drift_sigma), 0.0,
        config.activity_high);
  }
}

Dataset generate(const SimConfig& config,
                 std::vector<InjectionRecord>* injection_log) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::vector<ThreatActorProfile> profiles = draw_profiles(rng, config);

  Dataset dataset;
  dataset.config = config;
  std::int64_t next_id = 0;
  for (std::int64_t step = 0; step < config.s; ++step) {
    for (int i = 0; i < config.t; ++i) {
      const ThreatActorProfile& p = profiles[i];
      if (step < p.start || step > p.end) continue;
      if (!std::bernoulli_distribution(p.activity)(rng)) continue;
      Incident incident;
      incident.id = next_id++;
      incident.time_step = step;
      incident.label = i;
      incident.features.resize(config.m);
      for (int j = 0; j < config.m; ++j) {
        incident.features[j] = draw_normal(
            rng, p.means[j], std::max(p.stddevs[j], kSampleSigmaFloor));
      }
      incident.false_flag_mask = std::vector<bool>(config.m, false);
      dataset.incidents.push_back(std::move(incident));
    }
    if (config.drift_enabled) step_drift(profiles, config, rng);
  }

  // Time-based split: the first half of the horizon is training data.
  const auto split = std::partition_point(
      dataset.incidents.begin(), dataset.incidents.end(),
      [&](const Incident& inc) { return 2 * inc.time_step < config.s; });
  dataset.train_count = split - dataset.incidents.begin();
  dataset.test_count =
      static_cast<std::int64_t>(dataset.incidents.size()) - dataset.train_count;
  if (dataset.train_count == 0) {
    throw NoTrainingIncidentsError(
        "sim: no incidents fell inside the training window");
  }

  // False-flag injection over the test half. Donor values come from the
  // training incidents of other actors so every flag is a plausible value
  // for the feature, learned by the models as someone else's behavior.
  std::vector<std::vector<std::size_t>> train_by_actor(config.t);
  for (std::int64_t r = 0; r < dataset.train_count; ++r) {
    train_by_actor[*dataset.incidents[r].label].push_back(r);
  }
  std::vector<ActorId> actors_with_train;
  for (int i = 0; i < config.t; ++i) {
    if (!train_by_actor[i].empty()) actors_with_train.push_back(i);
  }

  std::bernoulli_distribution flag(config.false_flag_prob);
  for (std::int64_t r = dataset.train_count;
       r < static_cast<std::int64_t>(dataset.incidents.size()); ++r) {
    Incident& incident = dataset.incidents[r];
    const ActorId truth = *incident.label;
    auto& mask = *incident.false_flag_mask;
    for (int j = 0; j < config.m; ++j) {
      if (!flag(rng)) continue;
      std::size_t eligible = actors_with_train.size();
      const bool truth_eligible =
          !train_by_actor[truth].empty();
      if (truth_eligible) --eligible;
      if (eligible == 0) continue;  // nobody to impersonate
      std::size_t pick =
          std::uniform_int_distribution<std::size_t>(0, eligible - 1)(rng);
      ActorId donor = -1;
      for (ActorId candidate : actors_with_train) {
        if (candidate == truth) continue;
        if (pick == 0) {
          donor = candidate;
          break;
        }
        --pick;
      }
      const auto& pool = train_by_actor[donor];
      const std::size_t donor_row =
          std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
      const Incident& source = dataset.incidents[pool[donor_row]];
      if (injection_log) {
        injection_log->push_back({incident.id, j, incident.features[j],
                                  source.features[j], donor, source.id});
      }
      incident.features[j] = source.features[j];
      mask[j] = true;
    }
  }
  return dataset;
}

Dataset interpretability_fixture(std::uint64_t seed) {
  SimConfig config;
  config.s = 2000;
  config.t = 3;
  config.m = 3;
  for (int attempt = 0; attempt < 100; ++attempt) {
    config.seed = seed + static_cast<std::uint64_t>(attempt);
    Dataset dataset = generate(config);
    std::vector<bool> seen(config.t, false);
    for (const Incident& incident : dataset.train()) {
      seen[*incident.label] = true;
    }
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
      return dataset;
    }
  }
  throw ValidationError(
      "fixture: no nearby seed puts every actor in the training split");
}

void write_jsonl(const Dataset& dataset, std::ostream& out) {
  nlohmann::ordered_json meta;
  meta["s"] = dataset.config.s;
  meta["t"] = dataset.config.t;
  meta["m"] = dataset.config.m;
  meta["false_flag_prob"] = dataset.config.false_flag_prob;
  meta["drift_sigma"] = dataset.config.drift_sigma;
  meta["activity_low"] = dataset.config.activity_low;
  meta["activity_high"] = dataset.config.activity_high;
  meta["seed"] = dataset.config.seed;
  meta["drift_enabled"] = dataset.config.drift_enabled;
  meta["train_count"] = dataset.train_count;
  meta["test_count"] = dataset.test_count;
  out << nlohmann::ordered_json{{"meta", std::move(meta)}}.dump() << '\n';

  for (std::size_t r = 0; r < dataset.incidents.size(); ++r) {
    const Incident& incident = dataset.incidents[r];
    nlohmann::ordered_json line;
    line["id"] = incident.id;
    line["t"] = incident.time_step;
    line["split"] =
        r < static_cast<std::size_t>(dataset.train_count) ? "train" : "test";
    line["actor"] = incident.label.value();
    line["x"] = incident.features;
    line["ff"] = incident.false_flag_mask.value();
    out << line.dump() << '\n';
  }
  if (!out) throw IoError("dataset: write failed");
}

void write_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("dataset: cannot open " + path.string());
  write_jsonl(dataset, out);
}

Dataset read_jsonl(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("dataset: missing meta line");
  }
  Dataset dataset;
  try {
    const auto meta = nlohmann::json::parse(line).at("meta");
    dataset.config.s = meta.at("s").get<std::int64_t>();
    dataset.config.t = meta.at("t").get<int>();
    dataset.config.m = meta.at("m").get<int>();
    dataset.config.false_flag_prob = meta.at("false_flag_prob").get<double>();
    dataset.config.drift_sigma = meta.at("drift_sigma").get<double>();
    dataset.config.activity_low = meta.at("activity_low").get<double>();
    dataset.config.activity_high = meta.at("activity_high").get<double>();
    dataset.config.seed = meta.at("seed").get<std::uint64_t>();
    dataset.config.drift_enabled = meta.at("drift_enabled").get<bool>();
    dataset.train_count = meta.at("train_count").get<std::int64_t>();
    dataset.test_count = meta.at("test_count").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("dataset: malformed meta line: ") + e.what());
  }
  dataset.config.validate();

  std::int64_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      Incident incident;
      incident.id = doc.at("id").get<std::int64_t>();
      incident.time_step = doc.at("t").get<std::int64_t>();
      incident.label = doc.at("actor").get<ActorId>();
      incident.features = doc.at("x").get<std::vector<double>>();
      incident.false_flag_mask = doc.at("ff").get<std::vector<bool>>();
      const std::string split = doc.at("split").get<std::string>();
      const bool expect_train = row < dataset.train_count;
      if (split != (expect_train ? "train" : "test")) {
        throw IoError("dataset: split tag inconsistent with meta counts");
      }
      if (incident.features.size() != static_cast<std::size_t>(dataset.config.m) ||
          incident.false_flag_mask->size() !=
              static_cast<std::size_t>(dataset.config.m)) {
        throw IoError("dataset: wrong vector length on line");
      }
      if (*incident.label < 0 || *incident.label >= dataset.config.t) {
        throw IoError("dataset: actor outside the universe");
      }
      dataset.incidents.push_back(std::move(incident));
      ++row;
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("dataset: malformed incident line: ") +
                    e.what());
    }
  }
  if (row != dataset.train_count + dataset.test_count) {
    throw IoError("dataset: incident count disagrees with meta counts");
  }
  return dataset;
}

Dataset read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("dataset: cannot open " + path.string());
  return read_jsonl(in);
}

}  // namespace attribkit
