// Command-line front end: simulate incident corpora, evaluate attribution
// strategies, explain single attributions, and benchmark the pipeline.
// Exit codes: 0 success, 1 validation error, 2 IO error, 3 internal error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attribkit/attribution.hpp"
#include "attribkit/errors.hpp"
#include "attribkit/evaluation.hpp"
#include "attribkit/simulator.hpp"

namespace {

using namespace attribkit;

const std::vector<std::string> kAllStrategies = {"linear", "logarithmic",
                                                 "pairing", "monolithic"};

// Flags shared by every subcommand that can synthesize a dataset.
struct SimFlags {
  SimConfig config;

  void attach(CLI::App* cmd) {
    cmd->add_option("--s", config.s, "Simulated time steps");
    cmd->add_option("--t", config.t, "Threat actor universe size");
    cmd->add_option("--m", config.m, "Features per incident");
    cmd->add_option("--false-flag-prob", config.false_flag_prob,
                    "Per-feature injection probability on the test split");
    cmd->add_option("--drift-sigma", config.drift_sigma,
                    "Stddev of per-step parameter drift");
    cmd->add_option("--activity-low", config.activity_low,
                    "Lower bound of the initial activity draw");
    cmd->add_option("--activity-high", config.activity_high,
                    "Upper bound of the activity draw and the drift clamp");
    cmd->add_flag("--drift,!--no-drift", config.drift_enabled,
                  "Enable parameter drift");
    cmd->add_option("--seed", config.seed, "Simulation seed");
  }
};

// Applies key=value lines to options the command line left untouched, so
// flags always win over the file. Values run through the regular option
// pipeline (delimiters, conversions, validators). Keys must name an option
// of the selected subcommand; anything else is rejected rather than
// silently ignored.
void apply_config(CLI::App& cmd, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  const auto trim = [](std::string s) {
    const auto from = s.find_first_not_of(" \t\r");
    const auto to = s.find_last_not_of(" \t\r");
    return from == std::string::npos ? std::string()
                                     : s.substr(from, to - from + 1);
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string entry = trim(line);
    if (entry.empty() || entry.front() == '#' || entry.front() == ';') {
      continue;
    }
    const auto where = path + ":" + std::to_string(lineno);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(where + ": expected key=value");
    }
    const std::string key = trim(entry.substr(0, eq));
    const std::string value = trim(entry.substr(eq + 1));
    CLI::Option* option = cmd.get_option_no_throw("--" + key);
    if (option == nullptr || key == "config") {
      throw ValidationError(where + ": unknown config key '" + key + "'");
    }
    if (option->count() > 0) continue;
    try {
      option->add_result(value);
      option->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
}

void validate_strategies(const std::vector<std::string>& strategies) {
  if (strategies.empty()) {
    throw ValidationError("at least one strategy is required");
  }
  for (const std::string& name : strategies) {
    if (name != kMonolithicStrategy) parse_pool_strategy(name);
  }
}

Dataset load_or_generate(const std::string& data_path, SimFlags& sim) {
  if (!data_path.empty()) return read_jsonl(data_path);
  sim.config.validate();
  return generate(sim.config);
}

int run_simulate(SimFlags& sim, const std::string& out,
                 const std::string& out_dir,
                 const std::string& injection_log_path) {
  sim.config.validate();
  std::vector<InjectionRecord> log;
  Dataset dataset =
      generate(sim.config, injection_log_path.empty() ? nullptr : &log);
  const std::filesystem::path target =
      out.empty() ? std::filesystem::path(out_dir) / "dataset.jsonl"
                  : std::filesystem::path(out);
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  write_jsonl(dataset, target);
  if (!injection_log_path.empty()) {
    std::FILE* f = std::fopen(injection_log_path.c_str(), "w");
    if (!f) throw IoError("cannot open " + injection_log_path);
    std::fprintf(f,
                 "incident_id,feature,original,injected,donor_actor,"
                 "donor_incident_id\n");
    for (const InjectionRecord& r : log) {
      std::fprintf(f, "%lld,%d,%.17g,%.17g,%d,%lld\n",
                   static_cast<long long>(r.incident_id), r.feature,
                   r.original, r.injected, r.donor_actor,
                   static_cast<long long>(r.donor_incident_id));
    }
    std::fclose(f);
  }
  std::printf("wrote %s (%lld train, %lld test incidents)\n",
              target.string().c_str(),
              static_cast<long long>(dataset.train_count),
              static_cast<long long>(dataset.test_count));
  return 0;
}

int run_evaluate(SimFlags& sim, const std::string& data_path,
                 std::vector<std::uint64_t> seeds,
                 const std::vector<std::string>& strategies,
                 int threshold_count, int threads,
                 const std::string& out_dir) {
  validate_strategies(strategies);
  const std::filesystem::path base(out_dir);

  if (!data_path.empty()) {
    const Dataset dataset = read_jsonl(data_path);
    const RunReport report =
        run_evaluation(dataset, strategies, threshold_count, threads);
    write_report_files(report, base);
    std::printf("wrote report for %s under %s\n", data_path.c_str(),
                base.string().c_str());
    return 0;
  }

  if (seeds.empty()) seeds.push_back(sim.config.seed);
  std::vector<RunReport> reports;
  reports.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    SimConfig config = sim.config;
    config.seed = seed;
    config.validate();
    const Dataset dataset = generate(config);
    RunReport report =
        run_evaluation(dataset, strategies, threshold_count, threads);
    const std::filesystem::path dir =
        seeds.size() == 1 ? base : base / ("seed_" + std::to_string(seed));
    write_report_files(report, dir);
    std::printf("seed %llu: report under %s\n",
                static_cast<unsigned long long>(seed), dir.string().c_str());
    reports.push_back(std::move(report));
  }
  if (reports.size() > 1) {
    write_median_files(summarize_medians(reports), base);
    std::printf("medians over %zu seeds under %s\n", reports.size(),
                base.string().c_str());
  }
  return 0;
}

int run_explain(SimFlags& sim, const std::string& data_path, bool fixture,
                std::optional<std::int64_t> incident_id,
                const std::string& out, const std::string& out_dir) {
  Dataset dataset = fixture ? interpretability_fixture(sim.config.seed)
                            : load_or_generate(data_path, sim);
  const auto test = dataset.test();
  if (test.empty()) {
    throw ValidationError("explain: dataset has no test incidents");
  }
  const Incident* chosen = &test.front();
  if (incident_id) {
    chosen = nullptr;
    for (const Incident& incident : test) {
      if (incident.id == *incident_id) {
        chosen = &incident;
        break;
      }
    }
    if (!chosen) {
      throw UnknownIncidentError("explain: no test incident with id " +
                                 std::to_string(*incident_id));
    }
  }
  const std::vector<AttributorBinding> bindings =
      make_modular_bindings(dataset.train(), dataset.config.m,
                            dataset.config.t);
  const AttributionTrace trace = explain(bindings, *chosen);
  const std::filesystem::path target =
      out.empty() ? std::filesystem::path(out_dir) / "trace.json"
                  : std::filesystem::path(out);
  if (target.has_parent_path()) {
    std::filesystem::create_directories(target.parent_path());
  }
  std::FILE* f = std::fopen(target.string().c_str(), "w");
  if (!f) throw IoError("cannot open " + target.string());
  const std::string text = trace.to_json_string();
  std::fwrite(text.data(), 1, text.size(), f);
  std::fputc('\n', f);
  std::fclose(f);
  std::printf("wrote trace for incident %lld (%zu modules, %zu pairs) to %s\n",
              static_cast<long long>(chosen->id),
              trace.module_outputs.size(), trace.pair_outputs.size(),
              target.string().c_str());
  return 0;
}

int run_bench(SimFlags& sim, const std::string& data_path,
              const std::vector<std::string>& strategies, int repetitions,
              const std::string& out_dir) {
  validate_strategies(strategies);
  const Dataset dataset = load_or_generate(data_path, sim);
  const BenchReport report = bench(dataset, strategies, repetitions);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path target =
      std::filesystem::path(out_dir) / "timings.csv";
  write_bench_csv(report, target);
  std::printf("benchmarked %lld test incidents (best of %d) -> %s\n",
              static_cast<long long>(report.test_count), report.repetitions,
              target.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular threat actor attribution toolkit"};
  app.require_subcommand(1);

  SimFlags sim_sim, sim_eval, sim_explain, sim_bench;
  std::string config_path;
  std::string out, out_dir = ".", data_path, injection_log_path;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> strategies = kAllStrategies;
  int threshold_count = 1001;
  int threads = 0;
  int repetitions = 3;
  bool fixture = false;
  std::optional<std::int64_t> incident_id;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate an incident corpus and write it as JSONL");
  sim_sim.attach(simulate);
  simulate->add_option("--out", out, "Dataset path (default out-dir/dataset.jsonl)");
  simulate->add_option("--out-dir", out_dir, "Output directory");
  simulate->add_option("--injection-log", injection_log_path,
                       "Also write a CSV log of false-flag injections");
  simulate->add_option("--config", config_path,
                    "INI config file (key=value); command-line flags take precedence");

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Train on the first half, score strategies on the second");
  sim_eval.attach(evaluate);
  evaluate->add_option("--data", data_path,
                       "Existing JSONL dataset (otherwise simulates)");
  evaluate->add_option("--seeds", seeds,
                       "Simulation seeds; several produce a medians summary")
      ->delimiter(',');
  evaluate->add_option("--strategies", strategies,
                       "Subset of linear,logarithmic,pairing,monolithic")
      ->delimiter(',');
  evaluate->add_option("--thresholds", threshold_count,
                       "Points on the precision/recall threshold grid");
  evaluate->add_option("--threads", threads,
                       "Prediction threads (0 = all available)");
  evaluate->add_option("--out-dir", out_dir, "Output directory");
  evaluate->add_option("--config", config_path,
                    "INI config file (key=value); command-line flags take precedence");

  CLI::App* explain_cmd = app.add_subcommand(
      "explain", "Write the full attribution trace for one test incident");
  sim_explain.attach(explain_cmd);
  explain_cmd->add_option("--data", data_path,
                          "Existing JSONL dataset (otherwise simulates)");
  explain_cmd->add_flag("--fixture", fixture,
                        "Use the 3-actor, 3-feature walkthrough corpus");
  explain_cmd->add_option("--incident", incident_id,
                          "Test incident id (default: first test incident)");
  explain_cmd->add_option("--out", out, "Trace path (default out-dir/trace.json)");
  explain_cmd->add_option("--out-dir", out_dir, "Output directory");
  explain_cmd->add_option("--config", config_path,
                       "INI config file (key=value); command-line flags take precedence");

  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Single-threaded stage timings over the test split");
  sim_bench.attach(bench_cmd);
  bench_cmd->add_option("--data", data_path,
                        "Existing JSONL dataset (otherwise simulates)");
  bench_cmd->add_option("--strategies", strategies,
                        "Subset of linear,logarithmic,pairing,monolithic")
      ->delimiter(',');
  bench_cmd->add_option("--reps", repetitions, "Timing repetitions");
  bench_cmd->add_option("--out-dir", out_dir, "Output directory");
  bench_cmd->add_option("--config", config_path,
                     "INI config file (key=value); command-line flags take precedence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    app.exit(e);
    return 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (simulate->parsed()) {
      apply_config(*simulate, config_path);
      return run_simulate(sim_sim, out, out_dir, injection_log_path);
    }
    if (evaluate->parsed()) {
      apply_config(*evaluate, config_path);
      return run_evaluate(sim_eval, data_path, seeds, strategies,
                          threshold_count, threads, out_dir);
    }
    if (explain_cmd->parsed()) {
      apply_config(*explain_cmd, config_path);
      return run_explain(sim_explain, data_path, fixture, incident_id, out,
                         out_dir);
    }
    if (bench_cmd->parsed()) {
      apply_config(*bench_cmd, config_path);
      return run_bench(sim_bench, data_path, strategies, repetitions, out_dir);
    }
    std::fprintf(stderr, "no subcommand selected\n");
    return 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
}
