// Timing comparison of the OpenMP kernels against their serial references:
// pairwise similarity construction and the submodularity-ratio experiment.

#include "mixopt/discovery.hpp"
#include "mixopt/prediction.hpp"
#include "mixopt/rng.hpp"
#include "mixopt/similarity.hpp"
#include "mixopt/threads.hpp"

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

using namespace mixopt;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Synthetic store: every model scored on every dataset, with both logprobs
// and full distributions so either metric works.
PredictionStore synthetic_store(int tasks, int examples, int support,
                                std::uint64_t seed) {
  std::vector<PredictionRecord> records;
  records.reserve(static_cast<size_t>(tasks) * tasks * examples);
  Rng rng(seed);
  for (int model = 0; model < tasks; ++model) {
    for (int eval = 0; eval < tasks; ++eval) {
      for (int ex = 0; ex < examples; ++ex) {
        std::vector<double> dist(static_cast<size_t>(support));
        double sum = 0.0;
        for (double& v : dist) {
          v = 0.05 + rng.canonical();
          sum += v;
        }
        for (double& v : dist) v /= sum;
        records.push_back(PredictionRecord{
            TaskId("task" + std::to_string(model)),
            TaskId("task" + std::to_string(eval)),
            "ex" + std::to_string(ex),
            std::log(0.1 + 0.9 * rng.canonical()),
            std::move(dist),
        });
      }
    }
  }
  return ingest(records);
}

}  // namespace

int main() {
  const int threads = resolve_threads(0);
  std::printf("threads available: %d\n\n", threads);

  {
    const int tasks = 48;
    const int examples = 64;
    const int support = 128;
    const PredictionStore store = synthetic_store(tasks, examples, support, 7);
    SimilarityOptions options;
    options.metric = Metric::JSD;

    auto t0 = std::chrono::steady_clock::now();
    const SimilarityMatrix serial = build_similarity_serial(store, options);
    const double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const SimilarityMatrix parallel = build_similarity(store, options);
    const double parallel_s = seconds_since(t0);

    const bool identical = serial.values == parallel.values;
    std::printf("similarity (JSD, %d tasks, %d examples, support %d)\n", tasks,
                examples, support);
    std::printf("  serial   %.3fs\n", serial_s);
    std::printf("  openmp   %.3fs  (speedup %.2fx, identical: %s)\n\n",
                parallel_s, serial_s / parallel_s, identical ? "yes" : "NO");
  }

  {
    const int n = 12;
    const int trials = 400;
    const PotentialParams params{20.0, 10.0};

    auto t0 = std::chrono::steady_clock::now();
    const GammaReport serial = gamma_experiment_serial(n, params, trials, 11);
    const double serial_s = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const GammaReport parallel = gamma_experiment(n, params, trials, 11);
    const double parallel_s = seconds_since(t0);

    const bool identical = serial.gammas == parallel.gammas &&
                           serial.min_gamma == parallel.min_gamma;
    std::printf("gamma experiment (n = %d, %d trials)\n", n, trials);
    std::printf("  serial   %.3fs\n", serial_s);
    std::printf("  openmp   %.3fs  (speedup %.2fx, identical: %s)\n",
                parallel_s, serial_s / parallel_s, identical ? "yes" : "NO");
  }
  return 0;
}
