#pragma once

#include "mixopt/core.hpp"
#include "mixopt/qp_solver.hpp"
#include "mixopt/rng.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mixopt {

// Discrete lifting of the mixture problem: F(A) is the best achievable
// negated energy over mixtures supported inside A. Greedy selection, task
// affinity trajectories and the submodularity-ratio diagnostics all evaluate
// this one set function.

/// F(support) together with the witnessing mixture embedded into the full
/// task space (zeros off support).
std::pair<double, MixtureSolution> set_value(std::span<const int> support,
                                             const Potentials& pot);

/// Greedy step log: prefix values of F, per-step gains, and the total
/// variation between consecutive restricted optima. affinities[t] compares
/// the mixtures after steps t and t+1, so it has one entry less than steps.
struct DiscoveryTrace {
  std::vector<TaskId> tasks;  // full roster
  std::vector<int> selected;  // selection order
  std::vector<double> f_values;
  std::vector<double> marginal_gains;
  std::vector<double> affinities;
  std::vector<MixtureSolution> mixtures;
};

/// Standard greedy under a cardinality budget; ties go to the lowest task
/// index.
DiscoveryTrace greedy_select(const Potentials& pot, int k);

/// Half the l1 distance between a k-task mixture and the first k coordinates
/// of a (k+1)-task mixture sharing that prefix order. The appended
/// coordinate of the larger mixture does not enter.
double tv_affinity(const Eigen::VectorXd& p_k, const Eigen::VectorXd& p_k1);

enum class UnaryOrder { ASC_UNARY, DESC_UNARY };

/// Adds all tasks one at a time in ascending or descending unary-potential
/// order, recording the restricted optimum and TV affinity at each step.
DiscoveryTrace affinity_trajectory(const Potentials& pot, UnaryOrder order);

enum class RatioConvention {
  PAPER,     // denominator F(X u Y) - F(Y), as printed
  STANDARD,  // denominator F(X u Y) - F(X)
};

/// Empirical submodularity ratio for disjoint sets X, Y. F(empty) counts as
/// zero. Denominators smaller than 1e-10 in magnitude are rejected.
double submodularity_ratio(const Potentials& pot, std::span<const int> x,
                           std::span<const int> y, RatioConvention convention);

struct GammaReport {
  std::vector<double> gammas;        // one per non-degenerate trial
  std::vector<double> eigen_bounds;  // matching lambda_min/lambda_max bounds
  double min_gamma = 0.0;
  double theory_bound = 0.0;  // smallest per-trial eigenvalue bound
  int degenerate_trials = 0;
  int n = 0;
  PotentialParams params;
  int trials = 0;
  std::uint64_t seed = 0;
};

/// Samples random hollow similarity matrices and random disjoint (X, Y) per
/// trial and measures the STANDARD-convention ratio. Per-trial streams are
/// derived from seed + trial index, so results do not depend on scheduling.
GammaReport gamma_experiment(int n, const PotentialParams& params, int trials,
                             std::uint64_t seed,
                             double epsilon_rel = kDefaultEpsilonRel,
                             int threads = 0);

/// Single-threaded reference for gamma_experiment; must match bit for bit.
GammaReport gamma_experiment_serial(int n, const PotentialParams& params,
                                    int trials, std::uint64_t seed,
                                    double epsilon_rel = kDefaultEpsilonRel);

struct MonotonicityReport {
  int trials = 0;
  int violations = 0;
  double worst_margin = 0.0;  // min of F(B) - F(A); negative means violation
};

/// Samples random nested supports A within B and checks F(A) <= F(B) + 1e-9.
MonotonicityReport monotonicity_check(const Potentials& pot, int trials,
                                      std::uint64_t seed, int threads = 0);

/// Symmetric matrix with zero diagonal and off-diagonal entries uniform in
/// [0, 1); the instance generator behind gamma_experiment, exposed for tests.
Eigen::MatrixXd random_hollow_similarity(int n, Rng& rng);

/// Synthetic roster t0..t{n-1} for generated instances.
std::vector<TaskId> synthetic_tasks(int n);

}  // namespace mixopt
