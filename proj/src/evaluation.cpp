#include "attribkit/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "attribkit/batch.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace attribkit {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

struct StrategyPlan {
  std::vector<PoolStrategy> pooled;  // order of appearance
  bool monolithic = false;
};

StrategyPlan plan_strategies(std::span<const std::string> names) {
  if (names.empty()) {
    throw ValidationError("evaluation: at least one strategy required");
  }
  StrategyPlan plan;
  for (const std::string& name : names) {
    if (name == kMonolithicStrategy) {
      plan.monolithic = true;
    } else {
      const PoolStrategy strategy = parse_pool_strategy(name);
      if (std::find(plan.pooled.begin(), plan.pooled.end(), strategy) ==
          plan.pooled.end()) {
        plan.pooled.push_back(strategy);
      }
    }
  }
  return plan;
}

StrategyResult score_strategy(std::span<const int> ranks,
                              std::span<const PredictionSummary> summaries,
                              int t, std::span<const double> thresholds) {
  StrategyResult result;
  result.k_accuracy_cdf = k_accuracy_cdf(ranks, t);
  try {
    result.pr_curve = pr_curve(summaries, thresholds);
    const OptimalF best = optimal_f_measure(result.pr_curve);
    result.optimal_f = best.f;
    result.optimal_f_theta = best.theta;
    for (const PrPoint& point : result.pr_curve) {
      result.max_precision = std::max(result.max_precision, point.precision);
    }
  } catch (const DegenerateRecallBaseError&) {
    result.degenerate_recall_base = true;
  }
  return result;
}

void reduce_prediction(const Pmf& final, ActorId truth, int& rank_out,
                       PredictionSummary& summary_out) {
  rank_out = rank_of_true(final, truth);
  summary_out.max_prob = final.max_probability();
  summary_out.correct = final.argmax() == truth;
}

std::FILE* open_csv(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

}  // namespace

int rank_of_true(const Pmf& prediction, ActorId true_actor) {
  if (true_actor < 0 ||
      static_cast<std::size_t>(true_actor) >= prediction.universe_size()) {
    throw ValidationError("rank: true actor outside the universe");
  }
  const auto p = prediction.probabilities();
  const double pt = p[true_actor];
  int rank = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > pt) {
      ++rank;
    } else if (p[i] == pt && static_cast<ActorId>(i) < true_actor) {
      ++rank;
    }
  }
  return rank;
}

std::vector<double> k_accuracy_cdf(std::span<const int> ranks, int t) {
  if (ranks.empty()) {
    throw EmptyInputError("k-accuracy: no ranks");
  }
  if (t < 1) {
    throw ValidationError("k-accuracy: universe must be non-empty");
  }
  std::vector<std::int64_t> counts(t, 0);
  for (int rank : ranks) {
    if (rank < 1 || rank > t) {
      throw ValidationError("k-accuracy: rank outside [1, t]");
    }
    ++counts[rank - 1];
  }
  std::vector<double> cdf(t);
  std::int64_t running = 0;
  const double n = static_cast<double>(ranks.size());
  for (int k = 0; k < t; ++k) {
    running += counts[k];
    cdf[k] = running / n;
  }
  return cdf;
}

std::vector<PrPoint> pr_curve(std::span<const PredictionSummary> predictions,
                              std::span<const double> thresholds) {
  if (predictions.empty()) {
    throw EmptyInputError("pr: no predictions");
  }
  if (thresholds.empty()) {
    throw ValidationError("pr: empty threshold grid");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0)) {
      throw ValidationError("pr: thresholds must lie in [0, 1]");
    }
    if (i > 0 && thresholds[i] < thresholds[i - 1]) {
      throw ValidationError("pr: thresholds must be non-decreasing");
    }
  }

  std::vector<double> probs(predictions.size());
  std::vector<char> correct(predictions.size());
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].max_prob < predictions[b].max_prob;
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    probs[i] = predictions[order[i]].max_prob;
    correct[i] = predictions[order[i]].correct ? 1 : 0;
  }
  // suffix_correct[i] = correct predictions among probs[i..n)
  std::vector<std::int64_t> suffix_correct(probs.size() + 1, 0);
  for (std::size_t i = probs.size(); i-- > 0;) {
    suffix_correct[i] = suffix_correct[i + 1] + correct[i];
  }
  const std::int64_t base = suffix_correct[0];
  if (base == 0) {
    throw DegenerateRecallBaseError(
        "pr: nothing is attributed correctly even at threshold 0");
  }

  const std::int64_t n = static_cast<std::int64_t>(predictions.size());
  std::vector<PrPoint> curve;
  curve.reserve(thresholds.size());
  for (double theta : thresholds) {
    const std::size_t first =
        std::lower_bound(probs.begin(), probs.end(), theta) - probs.begin();
    const std::int64_t attributed = n - static_cast<std::int64_t>(first);
    if (attributed == 0) continue;  // precision undefined here
    const std::int64_t hits = suffix_correct[first];
    PrPoint point;
    point.theta = theta;
    point.precision = static_cast<double>(hits) / attributed;
    point.recall = static_cast<double>(hits) / base;
    point.recall_all = static_cast<double>(hits) / n;
    point.attributed = attributed;
    point.correct = hits;
    curve.push_back(point);
  }
  return curve;
}

std::vector<PrPoint> pr_curve(std::span<const Pmf> predictions,
                              std::span<const ActorId> true_actors,
                              std::span<const double> thresholds) {
  if (predictions.size() != true_actors.size()) {
    throw ValidationError("pr: prediction/label count mismatch");
  }
  std::vector<PredictionSummary> summaries(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    summaries[i].max_prob = predictions[i].max_probability();
    summaries[i].correct = predictions[i].argmax() == true_actors[i];
  }
  return pr_curve(summaries, thresholds);
}

OptimalF optimal_f_measure(std::span<const PrPoint> curve) {
  if (curve.empty()) {
    throw EmptyInputError("optimal f: empty curve");
  }
  OptimalF best{-1.0, 0.0};
  for (const PrPoint& point : curve) {
    const double denom = point.precision + point.recall;
    const double f =
        denom == 0.0 ? 0.0 : 2.0 * point.precision * point.recall / denom;
    if (f > best.f) {
      best = {f, point.theta};
    }
  }
  return best;
}

std::vector<double> default_thresholds(int count) {
  if (count < 2) {
    throw ValidationError("thresholds: grid needs at least two points");
  }
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) {
    grid[i] = static_cast<double>(i) / (count - 1);
  }
  return grid;
}

RunReport run_evaluation(const Dataset& dataset,
                         std::span<const std::string> strategies,
                         int threshold_count, int threads) {
  const StrategyPlan plan = plan_strategies(strategies);
  const auto test = dataset.test();
  if (test.empty()) {
    throw EmptyInputError("evaluation: dataset has no test incidents");
  }
  const std::vector<double> thresholds = default_thresholds(threshold_count);
  const int t = dataset.config.t;
  const std::int64_t n = static_cast<std::int64_t>(test.size());
  for (const Incident& incident : test) {
    if (!incident.label) {
      throw ValidationError("evaluation: unlabeled test incident");
    }
  }

  RunReport report;
  report.config = dataset.config;
  report.threshold_count = threshold_count;

  std::vector<AttributorBinding> bindings;
  if (!plan.pooled.empty()) {
    const auto start = Clock::now();
    bindings = make_modular_bindings(dataset.train(), dataset.config.m, t);
    report.timings.fit_modular_s = seconds_since(start);
  }
  TrainedAttributor baseline;
  if (plan.monolithic) {
    const auto start = Clock::now();
    baseline = fit_baseline(dataset.train(), t);
    report.timings.fit_monolithic_s = seconds_since(start);
  }

  const std::size_t pooled_count = plan.pooled.size();
  std::vector<std::vector<int>> ranks(pooled_count, std::vector<int>(n));
  std::vector<std::vector<PredictionSummary>> summaries(
      pooled_count, std::vector<PredictionSummary>(n));
  std::vector<double> aggregate_cpu(pooled_count, 0.0);

  if (!plan.pooled.empty()) {
    const auto start = Clock::now();
#ifdef _OPENMP
#pragma omp parallel num_threads(threads > 0 ? threads \
                                             : omp_get_max_threads())
#endif
    {
      PairingScratch scratch;
      std::vector<double> local_cpu(pooled_count, 0.0);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
      for (std::int64_t r = 0; r < n; ++r) {
        const std::vector<Pmf> opinions = module_opinions(bindings, test[r]);
        for (std::size_t sx = 0; sx < pooled_count; ++sx) {
          const auto agg_start = Clock::now();
          Pmf final;
          switch (plan.pooled[sx]) {
            case PoolStrategy::linear:
              final = linear_pool(opinions);
              break;
            case PoolStrategy::logarithmic:
              final = log_pool(opinions);
              break;
            case PoolStrategy::pairing:
              final = scratch.run(opinions);
              break;
          }
          local_cpu[sx] += seconds_since(agg_start);
          reduce_prediction(final, *test[r].label, ranks[sx][r],
                            summaries[sx][r]);
        }
      }
#ifdef _OPENMP
#pragma omp critical(aggregate_cpu_merge)
#endif
      for (std::size_t sx = 0; sx < pooled_count; ++sx) {
        aggregate_cpu[sx] += local_cpu[sx];
      }
    }
    report.timings.modular_predict_s = seconds_since(start);
  }

  std::vector<int> mono_ranks(plan.monolithic ? n : 0);
  std::vector<PredictionSummary> mono_summaries(plan.monolithic ? n : 0);
  if (plan.monolithic) {
    const auto start = Clock::now();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) \
    num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
    for (std::int64_t r = 0; r < n; ++r) {
      const Pmf final = baseline.predict(test[r]);
      reduce_prediction(final, *test[r].label, mono_ranks[r],
                        mono_summaries[r]);
    }
    report.timings.monolithic_predict_s = seconds_since(start);
  }

  for (std::size_t sx = 0; sx < pooled_count; ++sx) {
    const std::string name = to_string(plan.pooled[sx]);
    report.strategies[name] =
        score_strategy(ranks[sx], summaries[sx], t, thresholds);
    report.timings.aggregate_cpu_s[name] = aggregate_cpu[sx];
  }
  if (plan.monolithic) {
    report.strategies[kMonolithicStrategy] =
        score_strategy(mono_ranks, mono_summaries, t, thresholds);
  }
  return report;
}

namespace {

nlohmann::ordered_json config_to_json(const SimConfig& config) {
  nlohmann::ordered_json doc;
  doc["s"] = config.s;
  doc["t"] = config.t;
  doc["m"] = config.m;
  doc["false_flag_prob"] = config.false_flag_prob;
  doc["drift_sigma"] = config.drift_sigma;
  doc["activity_low"] = config.activity_low;
  doc["activity_high"] = config.activity_high;
  doc["seed"] = config.seed;
  doc["drift_enabled"] = config.drift_enabled;
  return doc;
}

nlohmann::ordered_json strategy_to_json(const StrategyResult& result) {
  nlohmann::ordered_json doc;
  doc["k_accuracy_cdf"] = result.k_accuracy_cdf;
  doc["optimal_f"] = result.optimal_f;
  doc["optimal_f_theta"] = result.optimal_f_theta;
  doc["max_precision"] = result.max_precision;
  doc["degenerate_recall_base"] = result.degenerate_recall_base;
  nlohmann::ordered_json curve = nlohmann::ordered_json::array();
  for (const PrPoint& point : result.pr_curve) {
    curve.push_back({{"theta", point.theta},
                     {"precision", point.precision},
                     {"recall", point.recall},
                     {"recall_all", point.recall_all},
                     {"attributed", point.attributed},
                     {"correct", point.correct}});
  }
  doc["pr_curve"] = std::move(curve);
  return doc;
}

}  // namespace

std::string report_to_json_string(const RunReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = 1;
  doc["config"] = config_to_json(report.config);
  doc["threshold_count"] = report.threshold_count;
  nlohmann::ordered_json strategies = nlohmann::ordered_json::object();
  for (const auto& [name, result] : report.strategies) {
    strategies[name] = strategy_to_json(result);
  }
  doc["strategies"] = std::move(strategies);
  nlohmann::ordered_json timings;
  timings["fit_modular_s"] = report.timings.fit_modular_s;
  timings["fit_monolithic_s"] = report.timings.fit_monolithic_s;
  timings["modular_predict_s"] = report.timings.modular_predict_s;
  timings["monolithic_predict_s"] = report.timings.monolithic_predict_s;
  timings["aggregate_cpu_s"] = report.timings.aggregate_cpu_s;
  doc["timings"] = std::move(timings);
  return doc.dump(2);
}

void write_report_files(const RunReport& report,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw IoError("cannot open report.json for writing");
    out << report_to_json_string(report) << '\n';
  }
  {
    std::FILE* f = open_csv(dir / "k_accuracy.csv");
    std::fprintf(f, "k,proportion,strategy\n");
    for (const auto& [name, result] : report.strategies) {
      for (std::size_t k = 0; k < result.k_accuracy_cdf.size(); ++k) {
        std::fprintf(f, "%zu,%.12g,%s\n", k + 1, result.k_accuracy_cdf[k],
                     name.c_str());
      }
    }
    std::fclose(f);
  }
  {
    std::FILE* f = open_csv(dir / "pr_curve.csv");
    std::fprintf(f, "theta,precision,recall,strategy,recall_all\n");
    for (const auto& [name, result] : report.strategies) {
      for (const PrPoint& point : result.pr_curve) {
        std::fprintf(f, "%.12g,%.12g,%.12g,%s,%.12g\n", point.theta,
                     point.precision, point.recall, name.c_str(),
                     point.recall_all);
      }
    }
    std::fclose(f);
  }
  {
    std::FILE* f = open_csv(dir / "timings.csv");
    std::fprintf(f, "stage,strategy,seconds\n");
    std::fprintf(f, "fit,modular,%.9f\n", report.timings.fit_modular_s);
    std::fprintf(f, "fit,monolithic,%.9f\n", report.timings.fit_monolithic_s);
    std::fprintf(f, "predict,modular,%.9f\n",
                 report.timings.modular_predict_s);
    std::fprintf(f, "predict,monolithic,%.9f\n",
                 report.timings.monolithic_predict_s);
    for (const auto& [name, seconds] : report.timings.aggregate_cpu_s) {
      std::fprintf(f, "aggregate_cpu,%s,%.9f\n", name.c_str(), seconds);
    }
    std::fclose(f);
  }
}

MedianSummary summarize_medians(std::span<const RunReport> runs) {
  if (runs.empty()) {
    throw EmptyInputError("medians: no runs");
  }
  MedianSummary summary;
  for (const RunReport& run : runs) {
    summary.seeds.push_back(run.config.seed);
  }
  for (const auto& [name, first] : runs.front().strategies) {
    std::vector<double> f_values, precision_values;
    std::vector<std::vector<double>> cdfs;
    for (const RunReport& run : runs) {
      const auto it = run.strategies.find(name);
      if (it == run.strategies.end() ||
          it->second.k_accuracy_cdf.size() != first.k_accuracy_cdf.size()) {
        throw ValidationError("medians: runs disagree on strategies");
      }
      f_values.push_back(it->second.optimal_f);
      precision_values.push_back(it->second.max_precision);
      cdfs.push_back(it->second.k_accuracy_cdf);
    }
    std::vector<double> cdf_median(first.k_accuracy_cdf.size());
    std::vector<double> column(runs.size());
    for (std::size_t k = 0; k < cdf_median.size(); ++k) {
      for (std::size_t r = 0; r < runs.size(); ++r) column[r] = cdfs[r][k];
      cdf_median[k] = median_of(column);
    }
    summary.k_accuracy_cdf_median[name] = std::move(cdf_median);
    summary.optimal_f_median[name] = median_of(std::move(f_values));
    summary.max_precision_median[name] = median_of(std::move(precision_values));
  }
  return summary;
}

std::string medians_to_json_string(const MedianSummary& summary) {
  nlohmann::ordered_json doc;
  doc["seeds"] = summary.seeds;
  nlohmann::ordered_json strategies = nlohmann::ordered_json::object();
  for (const auto& [name, cdf] : summary.k_accuracy_cdf_median) {
    strategies[name] = {
        {"k_accuracy_cdf_median", cdf},
        {"optimal_f_median", summary.optimal_f_median.at(name)},
        {"max_precision_median", summary.max_precision_median.at(name)}};
  }
  doc["strategies"] = std::move(strategies);
  return doc.dump(2);
}

void write_median_files(const MedianSummary& summary,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "medians.json");
    if (!out) throw IoError("cannot open medians.json for writing");
    out << medians_to_json_string(summary) << '\n';
  }
  std::FILE* f = open_csv(dir / "k_accuracy_median.csv");
  std::fprintf(f, "k,proportion,strategy\n");
  for (const auto& [name, cdf] : summary.k_accuracy_cdf_median) {
    for (std::size_t k = 0; k < cdf.size(); ++k) {
      std::fprintf(f, "%zu,%.12g,%s\n", k + 1, cdf[k], name.c_str());
    }
  }
  std::fclose(f);
}

BenchReport bench(const Dataset& dataset,
                  std::span<const std::string> strategies, int repetitions) {
  if (repetitions < 1) {
    throw ValidationError("bench: repetitions must be positive");
  }
  const StrategyPlan plan = plan_strategies(strategies);
  const auto test = dataset.test();
  if (test.empty()) {
    throw EmptyInputError("bench: dataset has no test incidents");
  }

  BenchReport report;
  report.test_count = static_cast<std::int64_t>(test.size());
  report.repetitions = repetitions;

  // Everything below is deliberately single-threaded: the timings model a
  // plain sequential deployment, and the comparison between pooling and
  // module prediction only makes sense on one stream of work.
  std::vector<AttributorBinding> bindings;
  report.fit_modular_s = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto start = Clock::now();
    bindings =
        make_modular_bindings(dataset.train(), dataset.config.m,
                              dataset.config.t);
    report.fit_modular_s = std::min(report.fit_modular_s,
                                    seconds_since(start));
  }
  TrainedAttributor baseline;
  report.fit_monolithic_s = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto start = Clock::now();
    baseline = fit_baseline(dataset.train(), dataset.config.t);
    report.fit_monolithic_s = std::min(report.fit_monolithic_s,
                                       seconds_since(start));
  }

  for (const PoolStrategy strategy : plan.pooled) {
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto start = Clock::now();
      const std::vector<Pmf> finals =
          attribute_incidents_serial(bindings, test, strategy);
      best = std::min(best, seconds_since(start));
      for (const Pmf& final : finals) report.checksum += final[0];
    }
    report.predict_end_to_end_s[to_string(strategy)] = best;
  }
  if (plan.monolithic) {
    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto start = Clock::now();
      const std::vector<Pmf> finals = predict_incidents_serial(baseline, test);
      best = std::min(best, seconds_since(start));
      for (const Pmf& final : finals) report.checksum += final[0];
    }
    report.predict_end_to_end_s[kMonolithicStrategy] = best;
  }

  // Aggregation alone, over module opinions computed outside the timer.
  // Chunked so the precomputed opinions stay bounded in memory.
  if (!plan.pooled.empty()) {
    constexpr std::size_t kChunk = 8192;
    std::vector<double> totals(plan.pooled.size() * repetitions, 0.0);
    PairingScratch scratch;
    std::vector<std::vector<Pmf>> opinions(std::min(kChunk, test.size()));
    for (std::size_t begin = 0; begin < test.size(); begin += kChunk) {
      const std::size_t end = std::min(begin + kChunk, test.size());
      for (std::size_t r = begin; r < end; ++r) {
        opinions[r - begin] = module_opinions(bindings, test[r]);
      }
      for (std::size_t sx = 0; sx < plan.pooled.size(); ++sx) {
        for (int rep = 0; rep < repetitions; ++rep) {
          const auto start = Clock::now();
          for (std::size_t r = 0; r < end - begin; ++r) {
            Pmf final;
            switch (plan.pooled[sx]) {
              case PoolStrategy::linear:
                final = linear_pool(opinions[r]);
                break;
              case PoolStrategy::logarithmic:
                final = log_pool(opinions[r]);
                break;
              case PoolStrategy::pairing:
                final = scratch.run(opinions[r]);
                break;
            }
            report.checksum += final[0];
          }
          totals[sx * repetitions + rep] += seconds_since(start);
        }
      }
    }
    for (std::size_t sx = 0; sx < plan.pooled.size(); ++sx) {
      double best = std::numeric_limits<double>::infinity();
      for (int rep = 0; rep < repetitions; ++rep) {
        best = std::min(best, totals[sx * repetitions + rep]);
      }
      report.aggregate_only_s[to_string(plan.pooled[sx])] = best;
    }
  }
  return report;
}

void write_bench_csv(const BenchReport& report,
                     const std::filesystem::path& path) {
  std::FILE* f = open_csv(path);
  std::fprintf(f, "stage,strategy,seconds\n");
  std::fprintf(f, "fit,modular,%.9f\n", report.fit_modular_s);
  std::fprintf(f, "fit,monolithic,%.9f\n", report.fit_monolithic_s);
  for (const auto& [name, seconds] : report.predict_end_to_end_s) {
    std::fprintf(f, "predict,%s,%.9f\n", name.c_str(), seconds);
  }
  for (const auto& [name, seconds] : report.aggregate_only_s) {
    std::fprintf(f, "aggregate_only,%s,%.9f\n", name.c_str(), seconds);
  }
  std::fclose(f);
}

}  // namespace attribkit
