#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "attribkit/pmf.hpp"
#include "attribkit/simulator.hpp"

namespace attribkit {

// Names accepted in strategy lists: the three pool strategies plus
// "monolithic", the single all-feature model run without any pooling.
inline constexpr const char* kMonolithicStrategy = "monolithic";

// 1-based position of the true actor when actors are ordered by
// descending probability, ties broken toward lower actor ids.
int rank_of_true(const Pmf& prediction, ActorId true_actor);

// cdf[k] = fraction of ranks <= k+1, for k in 0..t-1. Non-decreasing and
// ends at exactly 1.
std::vector<double> k_accuracy_cdf(std::span<const int> ranks, int t);

// What the precision/recall sweep needs to know about one prediction.
struct PredictionSummary {
  double max_prob = 0.0;
  bool correct = false;
};

struct PrPoint {
  double theta = 0.0;
  double precision = 0.0;
  // Recall against predictions that are correct when everything is
  // attributed (threshold 0); the denominator the sweep is designed around.
  double recall = 0.0;
  // Secondary recall against all incidents, emitted alongside for
  // comparison with conventional tooling.
  double recall_all = 0.0;
  std::int64_t attributed = 0;
  std::int64_t correct = 0;
};

// Micro-averaged sweep: an incident is attributed at theta when its top
// probability reaches theta. Thresholds where nothing is attributed yield
// no point. Throws DegenerateRecallBaseError when nothing is correct even
// at threshold 0.
std::vector<PrPoint> pr_curve(std::span<const PredictionSummary> predictions,
                              std::span<const double> thresholds);
std::vector<PrPoint> pr_curve(std::span<const Pmf> predictions,
                              std::span<const ActorId> true_actors,
                              std::span<const double> thresholds);

// Highest F-measure on the curve and the smallest threshold achieving it.
// 0/0 counts as 0.
struct OptimalF {
  double f = 0.0;
  double theta = 0.0;
};
OptimalF optimal_f_measure(std::span<const PrPoint> curve);

// Evenly spaced grid over [0, 1], endpoints included.
std::vector<double> default_thresholds(int count = 1001);

struct StrategyResult {
  std::vector<double> k_accuracy_cdf;
  std::vector<PrPoint> pr_curve;
  double optimal_f = 0.0;
  double optimal_f_theta = 0.0;
  double max_precision = 0.0;
  bool degenerate_recall_base = false;
};

struct RunTimings {
  double fit_modular_s = 0.0;
  double fit_monolithic_s = 0.0;
  double modular_predict_s = 0.0;    // modules + pooling over the test split
  double monolithic_predict_s = 0.0;
  // Pooling time per strategy, accumulated across threads (CPU seconds;
  // equals wall time in a single-threaded run).
  std::map<std::string, double> aggregate_cpu_s;
};

struct RunReport {
  SimConfig config;
  int threshold_count = 0;
  std::map<std::string, StrategyResult> strategies;
  RunTimings timings;
};

// Fits on the training split and scores every requested strategy on the
// test split. threads > 0 pins the prediction loops; 0 lets OpenMP decide.
// Results are independent of the thread count.
RunReport run_evaluation(const Dataset& dataset,
                         std::span<const std::string> strategies,
                         int threshold_count = 1001, int threads = 0);

std::string report_to_json_string(const RunReport& report);

// report.json, k_accuracy.csv, pr_curve.csv, timings.csv under dir.
void write_report_files(const RunReport& report,
                        const std::filesystem::path& dir);

// Seed-wise medians over several runs of the same configuration.
struct MedianSummary {
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::vector<double>> k_accuracy_cdf_median;
  std::map<std::string, double> optimal_f_median;
  std::map<std::string, double> max_precision_median;
};

MedianSummary summarize_medians(std::span<const RunReport> runs);
std::string medians_to_json_string(const MedianSummary& summary);

// medians.json and k_accuracy_median.csv under dir.
void write_median_files(const MedianSummary& summary,
                        const std::filesystem::path& dir);

// Single-process, single-threaded stage timings over the test split.
// predict_end_to_end_s covers the full pipeline for the strategy (module
// predictions plus pooling); aggregate_only_s covers pooling alone, fed by
// module opinions computed outside the timer. Each section keeps the best
// of `repetitions` passes.
struct BenchReport {
  std::int64_t test_count = 0;
  int repetitions = 0;
  double fit_modular_s = 0.0;
  double fit_monolithic_s = 0.0;
  std::map<std::string, double> predict_end_to_end_s;
  std::map<std::string, double> aggregate_only_s;
  double checksum = 0.0;  // keeps the timed work observable; not a metric
};

BenchReport bench(const Dataset& dataset,
                  std::span<const std::string> strategies,
                  int repetitions = 3);

void write_bench_csv(const BenchReport& report,
                     const std::filesystem::path& path);

}  // namespace attribkit
