#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// The OpenMP kernels must reproduce their serial references bit for bit at
// every thread count.

#include "mixopt/discovery.hpp"
#include "mixopt/prediction.hpp"
#include "mixopt/rng.hpp"
#include "mixopt/similarity.hpp"

#include "support.hpp"

#include <cmath>
#include <vector>

using namespace mixopt;

namespace {

PredictionStore dense_store(int tasks, int examples, std::uint64_t seed) {
  std::vector<PredictionRecord> records;
  Rng rng(seed);
  for (int model = 0; model < tasks; ++model) {
    for (int eval = 0; eval < tasks; ++eval) {
      for (int ex = 0; ex < examples; ++ex) {
        std::vector<double> dist(6);
        double sum = 0.0;
        for (double& v : dist) {
          v = 0.01 + rng.canonical();
          sum += v;
        }
        for (double& v : dist) v /= sum;
        records.push_back(PredictionRecord{
            TaskId("task" + std::to_string(model)),
            TaskId("task" + std::to_string(eval)), "e" + std::to_string(ex),
            std::log(0.05 + 0.9 * rng.canonical()), std::move(dist)});
      }
    }
  }
  return ingest(records);
}

}  // namespace

TEST_CASE("similarity kernel matches the serial reference at any width") {
  const PredictionStore store = dense_store(7, 5, 404);
  for (Metric metric : {Metric::PMI, Metric::JSD}) {
    SimilarityOptions options;
    options.metric = metric;
    options.threads = 1;
    const SimilarityMatrix reference = build_similarity_serial(store, options);
    for (int threads : {1, 2, 3, 8}) {
      options.threads = threads;
      const SimilarityMatrix parallel = build_similarity(store, options);
      CHECK(parallel.values == reference.values);
    }
  }
}

TEST_CASE("similarity kernel collects the same warnings") {
  // drop one direction record to force a coverage warning
  std::vector<PredictionRecord> records;
  Rng rng(9);
  for (int model = 0; model < 3; ++model) {
    for (int eval = 0; eval < 3; ++eval) {
      for (int ex = 0; ex < 3; ++ex) {
        if (model == 0 && eval == 1 && ex == 2) continue;
        records.push_back(PredictionRecord{
            TaskId("task" + std::to_string(model)),
            TaskId("task" + std::to_string(eval)), "e" + std::to_string(ex),
            std::log(0.05 + 0.9 * rng.canonical()), std::nullopt});
      }
    }
  }
  const PredictionStore store = ingest(records);
  SimilarityOptions options;
  options.metric = Metric::PMI;

  std::vector<std::string> serial_warnings;
  options.threads = 1;
  build_similarity_serial(store, options, &serial_warnings);
  REQUIRE(!serial_warnings.empty());

  for (int threads : {2, 8}) {
    std::vector<std::string> warnings;
    options.threads = threads;
    build_similarity(store, options, &warnings);
    CHECK(warnings == serial_warnings);
  }
}

TEST_CASE("gamma experiment matches the serial reference at any width") {
  const PotentialParams params{20.0, 10.0};
  const GammaReport reference = gamma_experiment_serial(8, params, 40, 606);
  for (int threads : {1, 2, 5, 8}) {
    const GammaReport parallel =
        gamma_experiment(8, params, 40, 606, kDefaultEpsilonRel, threads);
    CHECK(parallel.gammas == reference.gammas);
    CHECK(parallel.eigen_bounds == reference.eigen_bounds);
    CHECK(parallel.min_gamma == reference.min_gamma);
    CHECK(parallel.theory_bound == reference.theory_bound);
    CHECK(parallel.degenerate_trials == reference.degenerate_trials);
  }
}

TEST_CASE("monotonicity check is schedule independent") {
  Rng rng(33);
  const Potentials pot = testsupport::potentials_from(
      testsupport::random_psd_instance(6, rng));
  const MonotonicityReport reference = monotonicity_check(pot, 64, 12, 1);
  for (int threads : {2, 4, 8}) {
    const MonotonicityReport parallel =
        monotonicity_check(pot, 64, 12, threads);
    CHECK(parallel.worst_margin == reference.worst_margin);
    CHECK(parallel.violations == reference.violations);
  }
}
