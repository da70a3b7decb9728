// Compares the serial reference batch kernels against the OpenMP ones on a
// synthetic corpus and checks that both produce bitwise identical output.
// Prints one CSV row per (kernel, threads) combination to stdout.

#include <chrono>
#include <cstdio>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attribkit/batch.hpp"
#include "attribkit/errors.hpp"
#include "attribkit/simulator.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace attribkit;
using Clock = std::chrono::steady_clock;

template <typename F>
double best_of(int reps, F&& work) {
  double best = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < reps; ++rep) {
    const auto start = Clock::now();
    work();
    const double s = std::chrono::duration<double>(Clock::now() - start).count();
    best = std::min(best, s);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP batch attribution benchmark"};
  SimConfig config;
  config.s = 20000;
  config.t = 32;
  std::string strategy_name = "pairing";
  int reps = 3;
  std::vector<int> thread_counts;
  app.add_option("--s", config.s, "Simulated time steps");
  app.add_option("--t", config.t, "Actor universe size");
  app.add_option("--m", config.m, "Features per incident");
  app.add_option("--seed", config.seed, "Simulation seed");
  app.add_option("--strategy", strategy_name,
                 "linear, logarithmic or pairing");
  app.add_option("--reps", reps, "Repetitions; best time wins");
  app.add_option("--threads", thread_counts,
                 "Thread counts to test (default: 2, 4, max)")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  try {
    const PoolStrategy strategy = parse_pool_strategy(strategy_name);
    config.validate();
    const Dataset dataset = generate(config);
    const auto test = dataset.test();
    const std::vector<AttributorBinding> bindings =
        make_modular_bindings(dataset.train(), dataset.config.m,
                              dataset.config.t);

    if (thread_counts.empty()) {
      int max_threads = 1;
#ifdef _OPENMP
      max_threads = omp_get_max_threads();
#endif
      for (int n : {2, 4, max_threads}) {
        if (n <= max_threads &&
            (thread_counts.empty() || thread_counts.back() != n)) {
          thread_counts.push_back(n);
        }
      }
      if (thread_counts.empty()) thread_counts.push_back(1);
    }

    std::vector<Pmf> reference;
    const double serial_s = best_of(reps, [&] {
      reference = attribute_incidents_serial(bindings, test, strategy);
    });
    std::printf("kernel,threads,incidents,strategy,seconds,speedup,bitwise\n");
    std::printf("serial,1,%zu,%s,%.6f,1.00,yes\n", test.size(),
                strategy_name.c_str(), serial_s);

    for (int threads : thread_counts) {
      std::vector<Pmf> parallel;
      const double omp_s = best_of(reps, [&] {
        parallel = attribute_incidents_omp(bindings, test, strategy, threads);
      });
      const bool identical = parallel == reference;
      std::printf("omp,%d,%zu,%s,%.6f,%.2f,%s\n", threads, test.size(),
                  strategy_name.c_str(), omp_s, serial_s / omp_s,
                  identical ? "yes" : "NO");
      if (!identical) {
        std::fprintf(stderr,
                     "omp kernel diverged from the serial reference\n");
        return 3;
      }
    }
    return 0;
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
