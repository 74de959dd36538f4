#pragma once

#include "mixopt/core.hpp"
#include "mixopt/prediction.hpp"

#include <span>
#include <string>
#include <vector>

namespace mixopt {

/// Symmetrized mean log-ratio of true-label probabilities: the two models are
/// scored on each other's datasets and the per-direction means are averaged.
/// Evaluation runs over the intersection of example ids available for both
/// models on each dataset, in ascending example_id order; gaps are reported
/// through `warnings`.
double pmi_pair(const PredictionStore& store, const TaskId& ti,
                const TaskId& tj, std::vector<std::string>* warnings = nullptr);

/// Jensen-Shannon divergence between two aligned distributions, natural log.
/// Zero-probability entries follow the 0 log 0 = 0 convention.
double jsd_sample(std::span<const double> p, std::span<const double> q);

/// Mean per-example JSD in both directions, averaged (the distribution analog
/// of pmi_pair).
double jsd_pair(const PredictionStore& store, const TaskId& ti,
                const TaskId& tj, std::vector<std::string>* warnings = nullptr);

struct SimilarityOptions {
  Metric metric = Metric::JSD;
  /// Report ln 2 - JSD for off-diagonal entries instead of raw JSD.
  bool jsd_complement = false;
  /// 0 = all available cores.
  int threads = 0;
};

/// Builds the full task-similarity matrix (zero diagonal) from the store.
/// Fails with IncompletePair listing every missing pair before computing
/// anything. The returned matrix passes validate_similarity.
SimilarityMatrix build_similarity(const PredictionStore& store,
                                  const SimilarityOptions& options,
                                  std::vector<std::string>* warnings = nullptr);

/// Single-threaded reference for build_similarity; the parallel path must
/// match it bit for bit.
SimilarityMatrix build_similarity_serial(
    const PredictionStore& store, const SimilarityOptions& options,
    std::vector<std::string>* warnings = nullptr);

}  // namespace mixopt
