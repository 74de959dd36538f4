#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

// Shared domain types. Everything here is immutable after construction and
// safe to share across threads.

namespace mixopt {

enum class ErrorCode {
  DimensionMismatch,
  AsymmetryTooLarge,
  NonFiniteEntry,
  BoundViolation,
  DuplicateKey,
  MalformedRecord,
  DistributionNotNormalized,
  MissingCounterpart,
  EmptyEvaluationSet,
  LengthMismatch,
  IncompletePair,
  NotPsd,
  SingularPairwise,
  SolverDiverged,
  EmptySupport,
  BudgetOutOfRange,
  DegenerateDenominator,
  NonDisjointSets,
  BudgetExceedsCapacity,
  InvalidMixture,
  CountBudgetMismatch,
  CountExceedsCapacity,
  IoError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

const char* error_code_name(ErrorCode code);

/// Task identifier. Non-empty, free of newlines and commas so it can be used
/// verbatim in CSV headers.
class TaskId {
 public:
  explicit TaskId(std::string id);
  const std::string& str() const { return id_; }

  friend bool operator==(const TaskId& a, const TaskId& b) {
    return a.id_ == b.id_;
  }
  friend bool operator!=(const TaskId& a, const TaskId& b) {
    return a.id_ != b.id_;
  }
  friend bool operator<(const TaskId& a, const TaskId& b) {
    return a.id_ < b.id_;
  }

 private:
  std::string id_;
};

enum class Metric { PMI, JSD, EXTERNAL };

const char* metric_name(Metric m);
Metric metric_from_name(const std::string& name);

/// Symmetric behavioral task-similarity scores. The diagonal is zero for the
/// behavioral metrics (a model compared with itself), and JSD entries live in
/// [0, ln 2]. Construct through validate_similarity.
struct SimilarityMatrix {
  std::vector<TaskId> tasks;
  Eigen::MatrixXd values;
  Metric metric = Metric::EXTERNAL;

  int size() const { return static_cast<int>(tasks.size()); }
};

constexpr double kSymmetryTolerance = 1e-9;

/// Checks dimensions, finiteness, symmetry (repairing asymmetry up to 1e-9 by
/// averaging) and metric-specific bounds, and returns the validated matrix.
SimilarityMatrix validate_similarity(std::vector<TaskId> tasks,
                                     Eigen::MatrixXd values, Metric metric);

struct PotentialParams {
  double beta = 20.0;
  double lambda = 10.0;
};

void check_params(const PotentialParams& params);

/// Unary/pairwise potentials derived from a similarity matrix:
/// unary = beta * S * 1, pairwise = lambda * S + shift * I.
struct Potentials {
  std::vector<TaskId> tasks;
  Eigen::VectorXd unary;
  Eigen::MatrixXd pairwise;
  double shift = 0.0;
  PotentialParams params;

  int size() const { return static_cast<int>(tasks.size()); }
};

enum class SolverPath { INTERIOR, ACTIVE_SET, PROJECTED_GRADIENT };

const char* solver_path_name(SolverPath p);

/// Optimal mixture over the probability simplex together with its KKT
/// certificate data. active_set holds the coordinates pinned to zero.
struct MixtureSolution {
  std::vector<TaskId> tasks;
  Eigen::VectorXd p;
  double nu = 0.0;
  std::vector<int> active_set;
  double energy = 0.0;
  SolverPath solver_path = SolverPath::INTERIOR;
};

}  // namespace mixopt
