#include "mixopt/core.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace mixopt {

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(error_code_name(code)) + ": " + what);
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AsymmetryTooLarge: return "AsymmetryTooLarge";
    case ErrorCode::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::BoundViolation: return "BoundViolation";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DistributionNotNormalized: return "DistributionNotNormalized";
    case ErrorCode::MissingCounterpart: return "MissingCounterpart";
    case ErrorCode::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IncompletePair: return "IncompletePair";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::SingularPairwise: return "SingularPairwise";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::BudgetOutOfRange: return "BudgetOutOfRange";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::NonDisjointSets: return "NonDisjointSets";
    case ErrorCode::BudgetExceedsCapacity: return "BudgetExceedsCapacity";
    case ErrorCode::InvalidMixture: return "InvalidMixture";
    case ErrorCode::CountBudgetMismatch: return "CountBudgetMismatch";
    case ErrorCode::CountExceedsCapacity: return "CountExceedsCapacity";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

TaskId::TaskId(std::string id) : id_(std::move(id)) {
  if (id_.empty()) {
    fail(ErrorCode::MalformedRecord, "task id must be non-empty");
  }
  if (id_.find_first_of("\n\r,") != std::string::npos) {
    fail(ErrorCode::MalformedRecord,
         "task id '" + id_ + "' contains a newline or comma");
  }
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::PMI: return "PMI";
    case Metric::JSD: return "JSD";
    case Metric::EXTERNAL: return "EXTERNAL";
  }
  return "EXTERNAL";
}

Metric metric_from_name(const std::string& name) {
  if (name == "PMI" || name == "pmi") return Metric::PMI;
  if (name == "JSD" || name == "jsd") return Metric::JSD;
  if (name == "EXTERNAL" || name == "external") return Metric::EXTERNAL;
  fail(ErrorCode::MalformedRecord, "unknown metric '" + name + "'");
}

const char* solver_path_name(SolverPath p) {
  switch (p) {
    case SolverPath::INTERIOR: return "INTERIOR";
    case SolverPath::ACTIVE_SET: return "ACTIVE_SET";
    case SolverPath::PROJECTED_GRADIENT: return "PROJECTED_GRADIENT";
  }
  return "INTERIOR";
}

void check_params(const PotentialParams& params) {
  if (!(params.beta > 0.0) || !std::isfinite(params.beta)) {
    fail(ErrorCode::BoundViolation, "beta must be positive and finite");
  }
  if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) {
    fail(ErrorCode::BoundViolation, "lambda must be positive and finite");
  }
}

SimilarityMatrix validate_similarity(std::vector<TaskId> tasks,
                                     Eigen::MatrixXd values, Metric metric) {
  const auto n = static_cast<Eigen::Index>(tasks.size());
  if (n < 1) {
    fail(ErrorCode::DimensionMismatch, "task list is empty");
  }
  if (values.rows() != values.cols()) {
    std::ostringstream os;
    os << "matrix is " << values.rows() << "x" << values.cols()
       << ", expected square";
    fail(ErrorCode::DimensionMismatch, os.str());
  }
  if (values.rows() != n) {
    std::ostringstream os;
    os << "matrix dimension " << values.rows() << " does not match "
       << n << " tasks";
    fail(ErrorCode::DimensionMismatch, os.str());
  }
  {
    std::set<std::string> seen;
    for (const auto& t : tasks) {
      if (!seen.insert(t.str()).second) {
        fail(ErrorCode::DuplicateKey, "duplicate task id '" + t.str() + "'");
      }
    }
  }
  if (!values.allFinite()) {
    fail(ErrorCode::NonFiniteEntry, "matrix contains NaN or infinity");
  }

  double max_asym = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      max_asym = std::max(max_asym, std::abs(values(i, j) - values(j, i)));
    }
  }
  // The hair of headroom keeps decimal inputs that are nominally at the
  // tolerance (e.g. 0.300000001 vs 0.3) on the accepted side.
  if (max_asym > kSymmetryTolerance * (1.0 + 1e-6)) {
    std::ostringstream os;
    os << "max |S_ij - S_ji| = " << max_asym << " exceeds "
       << kSymmetryTolerance;
    fail(ErrorCode::AsymmetryTooLarge, os.str());
  }
  if (max_asym > 0.0) {
    // Repair by averaging; PMI is symmetric analytically but floating-point
    // evaluation order may differ per direction.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = 0.5 * (values(i, j) + values(j, i));
        values(i, j) = v;
        values(j, i) = v;
      }
    }
  }

  if (metric != Metric::EXTERNAL) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (values(i, i) != 0.0) {
        fail(ErrorCode::BoundViolation,
             "diagonal entry for task '" + tasks[static_cast<size_t>(i)].str() +
                 "' must be 0 for behavioral metrics");
      }
    }
  }
  if (metric == Metric::JSD) {
    const double upper = std::log(2.0) + 1e-12;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double v = values(i, j);
        if (v < -1e-12 || v > upper) {
          std::ostringstream os;
          os << "JSD entry (" << i << "," << j << ") = " << v
             << " outside [0, ln 2]";
          fail(ErrorCode::BoundViolation, os.str());
        }
        if (v < 0.0) {
          values(i, j) = 0.0;  // round-off within tolerance
        }
      }
    }
  }

  return SimilarityMatrix{std::move(tasks), std::move(values), metric};
}

}  // namespace mixopt
