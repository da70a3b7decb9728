#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "attribkit/attribution.hpp"
#include "attribkit/errors.hpp"
#include "helpers.hpp"

using namespace attribkit;
using testutil::linf;
using testutil::random_pmf;
using testutil::random_pmf_set;

namespace {

// Naive pairing oracle, deliberately coded differently from the library:
// pow-based geometric means, per-pair division, running average.
Pmf naive_pairing(const std::vector<Pmf>& inputs) {
  const std::size_t t = inputs.front().universe_size();
  std::vector<double> total(t, 0.0);
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t b = a + 1; b < inputs.size(); ++b) {
      std::vector<double> r(t);
      double sum = 0.0;
      for (std::size_t i = 0; i < t; ++i) {
        r[i] = std::pow(inputs[a][i], 0.5) * std::pow(inputs[b][i], 0.5);
        sum += r[i];
      }
      if (sum == 0.0) continue;
      for (std::size_t i = 0; i < t; ++i) total[i] += r[i] / sum;
      ++pairs;
    }
  }
  double mass = 0.0;
  for (double& v : total) {
    v /= static_cast<double>(pairs);
    mass += v;
  }
  for (double& v : total) v /= mass;
  return Pmf(std::move(total));
}

std::vector<std::pair<std::string, Pmf>> with_names(
    const std::vector<Pmf>& inputs) {
  std::vector<std::pair<std::string, Pmf>> named;
  named.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    named.emplace_back("m" + std::to_string(k), inputs[k]);
  }
  return named;
}

}  // namespace

TEST_CASE("strategy names round-trip and reject unknowns") {
  for (PoolStrategy s : {PoolStrategy::linear, PoolStrategy::logarithmic,
                         PoolStrategy::pairing}) {
    CHECK(parse_pool_strategy(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_pool_strategy("holder"), ValidationError);
  CHECK_THROWS_AS(parse_pool_strategy(""), ValidationError);
}

TEST_CASE("pair enumeration is lexicographic and complete") {
  const Pmf q({0.5, 0.5});
  {
    const std::vector<std::pair<std::string, Pmf>> two = {{"a", q}, {"b", q}};
    const auto pairs = pair_attributors(two);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0] == std::make_pair(std::string("a"), std::string("b")));
  }
  {
    // Input order is irrelevant; names come out sorted.
    const std::vector<std::pair<std::string, Pmf>> three = {
        {"c", q}, {"a", q}, {"b", q}};
    const auto pairs = pair_attributors(three);
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[0] == std::make_pair(std::string("a"), std::string("b")));
    CHECK(pairs[1] == std::make_pair(std::string("a"), std::string("c")));
    CHECK(pairs[2] == std::make_pair(std::string("b"), std::string("c")));
  }
  {
    std::vector<std::pair<std::string, Pmf>> eight;
    for (int k = 0; k < 8; ++k) eight.emplace_back("f" + std::to_string(k), q);
    const auto pairs = pair_attributors(eight);
    CHECK(pairs.size() == 28);
    // Brute-force oracle: every unordered name pair appears exactly once.
    std::size_t found = 0;
    for (int a = 0; a < 8; ++a) {
      for (int b = a + 1; b < 8; ++b) {
        const auto want = std::make_pair("f" + std::to_string(a),
                                         "f" + std::to_string(b));
        for (const auto& pair : pairs) found += pair == want ? 1 : 0;
      }
    }
    CHECK(found == 28);
  }
  const std::vector<std::pair<std::string, Pmf>> one = {{"a", q}};
  CHECK_THROWS_AS(pair_attributors(one), TooFewAttributorsError);
  const std::vector<std::pair<std::string, Pmf>> dup = {{"a", q}, {"a", q}};
  CHECK_THROWS_AS(pair_attributors(dup), ValidationError);
}

TEST_CASE("pairing aggregate reproduces the worked two- and three-input cases") {
  const Pmf q1({0.9, 0.1}), q2({0.6, 0.4}), q3({0.5, 0.5});

  {
    const auto trace = pairing_aggregate(with_names({q1, q2}));
    REQUIRE(trace.pair_outputs.size() == 1);
    // One pair: the linear stage is an identity over one intermediate.
    CHECK(trace.final == trace.pair_outputs[0].second);
    const double g0 = std::sqrt(0.9 * 0.6), g1 = std::sqrt(0.1 * 0.4);
    CHECK(std::abs(trace.final[0] - g0 / (g0 + g1)) < 1e-12);
  }
  {
    const auto trace = pairing_aggregate(with_names({q1, q2, q3}));
    REQUIRE(trace.module_outputs.size() == 3);
    REQUIRE(trace.pair_outputs.size() == 3);

    // Closed-form intermediates.
    const double r12 = std::sqrt(0.9 * 0.6) /
                       (std::sqrt(0.9 * 0.6) + std::sqrt(0.1 * 0.4));
    const double r13 = std::sqrt(0.9 * 0.5) /
                       (std::sqrt(0.9 * 0.5) + std::sqrt(0.1 * 0.5));
    const double r23 = std::sqrt(0.6 * 0.5) /
                       (std::sqrt(0.6 * 0.5) + std::sqrt(0.4 * 0.5));
    CHECK(std::abs(trace.pair_outputs[0].second[0] - r12) < 1e-12);
    CHECK(std::abs(trace.pair_outputs[1].second[0] - r13) < 1e-12);
    CHECK(std::abs(trace.pair_outputs[2].second[0] - r23) < 1e-12);
    CHECK(r13 == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r23 == doctest::Approx(0.550510257217).epsilon(1e-9));

    const double final0 = (r12 + r13 + r23) / 3.0;
    CHECK(std::abs(trace.final[0] - final0) < 1e-12);
    CHECK(trace.final[0] == doctest::Approx(0.695523829361).epsilon(1e-9));
    CHECK(trace.final[1] == doctest::Approx(0.304476170639).epsilon(1e-9));
  }
  {
    const auto trace = pairing_aggregate(with_names({Pmf({0.3, 0.7})}));
    CHECK(trace.pair_outputs.empty());
    CHECK(trace.final == Pmf({0.3, 0.7}));
  }
  CHECK_THROWS_AS(pairing_aggregate({}), EmptyInputError);
  const std::vector<std::pair<std::string, Pmf>> clash = {
      {"a", Pmf({0.5, 0.5})}, {"b", Pmf({0.2, 0.3, 0.5})}};
  CHECK_THROWS_AS(pairing_aggregate(clash), UniverseMismatchError);
}

TEST_CASE("pairing drops fully contradictory pairs and fails only when none survive") {
  const Pmf a({1.0, 0.0}), b({0.0, 1.0}), c({0.5, 0.5});
  const auto trace = pairing_aggregate(with_names({a, b, c}));
  // (a,b) contradicts everywhere and is dropped; the two surviving pairs
  // resolve to the pure assignments and average out to a coin flip.
  REQUIRE(trace.pair_outputs.size() == 2);
  CHECK(trace.final[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS(pairing_aggregate(with_names({a, b})), AllZeroMassError);
  const std::vector<Pmf> disjoint = {Pmf({1.0, 0.0, 0.0}),
                                     Pmf({0.0, 1.0, 0.0}),
                                     Pmf({0.0, 0.0, 1.0})};
  CHECK_THROWS_AS(pairing_aggregate(with_names(disjoint)), AllZeroMassError);
}

TEST_CASE("aggregate dispatches to the right pool") {
  const std::vector<Pmf> skew = {Pmf({0.9, 0.1}), Pmf({0.6, 0.4})};
  const Pmf lin = aggregate(PoolStrategy::linear, skew);
  CHECK(lin[0] == doctest::Approx(0.75).epsilon(1e-12));

  const std::vector<Pmf> same = {Pmf({0.3, 0.7}), Pmf({0.3, 0.7})};
  const Pmf log_same = aggregate(PoolStrategy::logarithmic, same);
  CHECK(linf(log_same, same[0]) <= 1e-12);

  const std::vector<Pmf> fixture = {Pmf({0.9, 0.1}), Pmf({0.6, 0.4}),
                                    Pmf({0.5, 0.5})};
  const Pmf paired = aggregate(PoolStrategy::pairing, fixture);
  CHECK(paired[0] == doctest::Approx(0.695523829361).epsilon(1e-9));
  CHECK(paired ==
        pairing_aggregate(with_names(fixture)).final);

  // A single input passes through under every strategy.
  const std::vector<Pmf> one = {Pmf({0.2, 0.8})};
  for (PoolStrategy s : {PoolStrategy::linear, PoolStrategy::logarithmic,
                         PoolStrategy::pairing}) {
    CHECK(aggregate(s, one) == one[0]);
  }
  CHECK_THROWS_AS(aggregate(PoolStrategy::linear, std::vector<Pmf>{}),
                  EmptyInputError);
}

TEST_CASE("pairing matches an independent naive oracle on random cases") {
  std::mt19937_64 rng(1009);
  std::uniform_int_distribution<std::size_t> pick_k(2, 6), pick_t(2, 8);
  for (int rep = 0; rep < 500; ++rep) {
    const auto inputs = random_pmf_set(rng, pick_k(rng), pick_t(rng), 1e-4);
    const Pmf got = aggregate(PoolStrategy::pairing, inputs);
    const Pmf want = naive_pairing(inputs);
    CHECK(linf(got, want) <= 1e-9);
  }
}

TEST_CASE("unordered pairs equal the ordered-pair enumeration") {
  // Enumerating ordered pairs (a, b) with a != b counts every unordered
  // pair twice with identical intermediates, so the averages agree.
  std::mt19937_64 rng(1013);
  std::uniform_int_distribution<std::size_t> pick_k(2, 6), pick_t(2, 8);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t k = pick_k(rng);
    const auto inputs = random_pmf_set(rng, k, pick_t(rng), 1e-4);
    std::vector<Pmf> ordered;
    ordered.reserve(k * (k - 1));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        if (a == b) continue;
        const Pmf pair_input[2] = {inputs[a], inputs[b]};
        ordered.push_back(log_pool(pair_input));
      }
    }
    CHECK(linf(aggregate(PoolStrategy::pairing, inputs),
               linear_pool(ordered)) <= 1e-12);
  }
}

TEST_CASE("every strategy preserves a unanimous argmax") {
  std::mt19937_64 rng(1031);
  std::uniform_int_distribution<std::size_t> pick_k(2, 6), pick_t(2, 10);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t k = pick_k(rng);
    const std::size_t t = pick_t(rng);
    const std::size_t winner = rng() % t;
    std::vector<Pmf> inputs;
    inputs.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      const Pmf q = random_pmf(rng, t, 1e-4);
      std::vector<double> raw(q.probabilities().begin(),
                              q.probabilities().end());
      raw[winner] = q.max_probability() * 1.5 + 0.1;
      inputs.push_back(normalize(std::move(raw)));
    }
    for (PoolStrategy s : {PoolStrategy::linear, PoolStrategy::logarithmic,
                           PoolStrategy::pairing}) {
      CHECK(aggregate(s, inputs).argmax() == static_cast<ActorId>(winner));
    }
  }
}

TEST_CASE("pair count follows the handshake law") {
  std::mt19937_64 rng(1033);
  for (std::size_t k = 2; k <= 9; ++k) {
    const auto inputs = random_pmf_set(rng, k, 4, 1e-4);
    const auto trace = pairing_aggregate(with_names(inputs));
    CHECK(trace.pair_outputs.size() == k * (k - 1) / 2);
  }
}

TEST_CASE("re-pooling the trace layers reproduces the final bit for bit") {
  std::mt19937_64 rng(1039);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 2 + rep % 5;
    const auto inputs = random_pmf_set(rng, k, 3 + rep % 6, 1e-4);
    const auto trace = pairing_aggregate(with_names(inputs));

    std::vector<Pmf> intermediates;
    for (const auto& [names, pmf] : trace.pair_outputs) {
      const Pmf* qa = nullptr;
      const Pmf* qb = nullptr;
      for (const auto& [name, q] : trace.module_outputs) {
        if (name == names.first) qa = &q;
        if (name == names.second) qb = &q;
      }
      REQUIRE(qa != nullptr);
      REQUIRE(qb != nullptr);
      const Pmf pair_input[2] = {*qa, *qb};
      const Pmf repooled = log_pool(pair_input);
      CHECK(repooled == pmf);
      intermediates.push_back(repooled);
    }
    CHECK(linear_pool(intermediates) == trace.final);
  }
}

namespace {

Incident probe_incident(std::vector<double> x) {
  Incident incident;
  incident.features = std::move(x);
  return incident;
}

// Tiny three-feature training fixture with well-separated actors.
std::vector<Incident> separated_train(int t, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<Incident> train;
  for (int r = 0; r < 40 * t; ++r) {
    const int actor = r % t;
    Incident incident;
    incident.label = actor;
    incident.features.resize(m);
    for (int j = 0; j < m; ++j) {
      incident.features[j] = actor * 3.0 + j * 0.25 + noise(rng);
    }
    train.push_back(std::move(incident));
  }
  return train;
}

}  // namespace

TEST_CASE("attribute runs the bound model and validates the binding") {
  std::mt19937_64 rng(2003);
  const auto train = separated_train(2, 1, rng);
  const auto bindings = make_modular_bindings(train, 1, 2);
  REQUIRE(bindings.size() == 1);

  // A probe at actor 0's feature location is attributed to actor 0.
  const Pmf p = attribute(bindings[0], probe_incident({0.0}));
  CHECK(p.argmax() == 0);

  CHECK_THROWS_AS(attribute(bindings[0], probe_incident({std::nan("")})),
                  ValidationError);

  AttributorBinding untrained;
  untrained.name = "ghost";
  untrained.feature_indices = {0};
  CHECK_THROWS_AS(attribute(untrained, probe_incident({0.0})),
                  UntrainedModelError);

  AttributorBinding mismatched = bindings[0];
  mismatched.feature_indices = {0, 1};
  CHECK_THROWS_AS(attribute(mismatched, probe_incident({0.0, 0.0})),
                  ValidationError);
}

TEST_CASE("explain produces the full three-layer trace") {
  std::mt19937_64 rng(2011);
  const auto train = separated_train(3, 3, rng);
  const auto bindings = make_modular_bindings(train, 3, 3);
  REQUIRE(bindings.size() == 3);
  CHECK(bindings[0].name == "f0");
  CHECK(bindings[2].name == "f2");

  const Incident probe = probe_incident({0.0, 0.25, 0.5});
  const auto trace = explain(bindings, probe);
  CHECK(trace.module_outputs.size() == 3);
  CHECK(trace.pair_outputs.size() == 3);
  CHECK(trace.final.universe_size() == 3);
  CHECK(trace.final.argmax() == 0);

  const auto two = explain(std::span(bindings).subspan(0, 2), probe);
  REQUIRE(two.pair_outputs.size() == 1);
  CHECK(two.pair_outputs[0].second == two.final);

  const auto one = explain(std::span(bindings).subspan(0, 1), probe);
  CHECK(one.pair_outputs.empty());
  CHECK(one.final == one.module_outputs[0].second);

  CHECK_THROWS_AS(explain({}, probe), EmptyInputError);
}

TEST_CASE("trace json carries modules, pairs and final") {
  std::mt19937_64 rng(2017);
  const auto train = separated_train(3, 3, rng);
  const auto bindings = make_modular_bindings(train, 3, 3);
  const auto trace = explain(bindings, probe_incident({0.0, 0.25, 0.5}));

  const auto doc = nlohmann::json::parse(trace.to_json_string());
  REQUIRE(doc.contains("modules"));
  REQUIRE(doc.contains("pairs"));
  REQUIRE(doc.contains("final"));
  CHECK(doc["modules"].size() == 3);
  CHECK(doc["modules"]["f0"].size() == 3);
  CHECK(doc["pairs"].size() == 3);
  CHECK(doc["pairs"][0].contains("a"));
  CHECK(doc["pairs"][0].contains("b"));
  CHECK(doc["pairs"][0]["pmf"].size() == 3);
  CHECK(doc["final"].size() == 3);
  CHECK(doc["final"][0].get<double>() ==
        doctest::Approx(trace.final[0]));
}

TEST_CASE("make_modular_bindings produces one named binding per feature") {
  std::mt19937_64 rng(2027);
  const auto train = separated_train(2, 8, rng);
  const auto bindings = make_modular_bindings(train, 8, 2);
  REQUIRE(bindings.size() == 8);
  for (int j = 0; j < 8; ++j) {
    CHECK(bindings[j].name == "f" + std::to_string(j));
    CHECK(bindings[j].feature_indices == std::vector<int>{j});
    CHECK(bindings[j].model->trained());
  }
  CHECK_THROWS_AS(make_modular_bindings(train, 0, 2), ValidationError);
  CHECK_THROWS_AS(make_modular_bindings({}, 3, 2), EmptyTrainingSetError);
}

TEST_CASE("attributor trees compose models and pools at runtime") {
  std::mt19937_64 rng(2029);
  const auto train = separated_train(3, 2, rng);
  const auto bindings = make_modular_bindings(train, 2, 3);

  auto leaf0 = std::make_shared<ModelAttributor>(bindings[0]);
  auto leaf1 = std::make_shared<ModelAttributor>(bindings[1]);
  CHECK(leaf0->name() == "f0");
  CHECK(leaf0->universe_size() == 3);

  const PoolingAttributor root(
      "root", PoolStrategy::linear,
      {leaf0, leaf1});
  const Incident probe = probe_incident({3.0, 3.25});
  const std::vector<Pmf> opinions = {leaf0->attribute(probe),
                                     leaf1->attribute(probe)};
  CHECK(root.attribute(probe) == aggregate(PoolStrategy::linear, opinions));
  CHECK(root.universe_size() == 3);

  // Pools nest: a pairing pool over a linear pool and a leaf.
  auto inner = std::make_shared<PoolingAttributor>(
      "inner", PoolStrategy::linear,
      std::vector<std::shared_ptr<const Attributor>>{leaf0, leaf1});
  const PoolingAttributor nested(
      "nested", PoolStrategy::pairing,
      {inner, leaf0});
  const Pmf nested_out = nested.attribute(probe);
  CHECK(nested_out.universe_size() == 3);
  CHECK(nested_out.argmax() == 1);

  CHECK_THROWS_AS(
      PoolingAttributor("empty", PoolStrategy::linear, {}),
      EmptyInputError);
  CHECK_THROWS_AS(
      PoolingAttributor("null", PoolStrategy::linear, {nullptr}),
      ValidationError);

  AttributorBinding untrained;
  untrained.name = "ghost";
  CHECK_THROWS_AS(ModelAttributor(std::move(untrained)), UntrainedModelError);
}
