#pragma once

#include "mixopt/core.hpp"

#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mixopt {

// Floor applied to probabilities at ingestion; log-ratio similarities diverge
// on exact zeros.
constexpr double kLogProbFloor = -27.631021115928547;  // ln(1e-12)

/// One fine-tuned model's predictive output on one evaluation example.
/// `logprob` is the natural-log probability of the true label under the model
/// fine-tuned on `model_task`; `dist` is the full predictive distribution over
/// a support shared with the counterpart model.
struct PredictionRecord {
  TaskId model_task;
  TaskId eval_task;
  std::string example_id;
  std::optional<double> logprob;
  std::optional<std::vector<double>> dist;
};

/// Immutable collection of prediction records indexed by
/// (model_task, eval_task, example_id). Built once by ingest(); all pairwise
/// similarity computations read it concurrently.
class PredictionStore {
 public:
  struct Payload {
    std::optional<double> logprob;
    std::optional<std::vector<double>> dist;
  };
  // example_id -> payload, ordered so per-pair sums are canonical.
  using Cell = std::map<std::string, Payload>;

  const std::vector<TaskId>& tasks() const { return tasks_; }
  int task_count() const { return static_cast<int>(tasks_.size()); }

  /// Records produced by the `model` model on the `eval` dataset; null when
  /// none exist.
  const Cell* cell(const TaskId& model, const TaskId& eval) const;

  /// Distinct example ids seen for an eval task across all models.
  int example_count(const TaskId& eval) const;

  bool empty() const { return tasks_.empty(); }

 private:
  friend PredictionStore ingest(std::istream& in);
  friend PredictionStore ingest(const std::vector<PredictionRecord>& records);

  void add(PredictionRecord rec, int line);

  std::vector<TaskId> tasks_;  // first-appearance order
  std::set<std::string> task_index_;
  std::map<std::pair<std::string, std::string>, Cell> cells_;
  std::map<std::string, std::set<std::string>> eval_examples_;
};

/// Parses JSON Lines prediction records (fields model_task, eval_task,
/// example_id, logprob, dist) and builds the store. Duplicate keys and
/// malformed lines are rejected with the offending line number.
PredictionStore ingest(std::istream& in);

/// Same, from already-parsed records (line numbers count from 1).
PredictionStore ingest(const std::vector<PredictionRecord>& records);

}  // namespace mixopt
