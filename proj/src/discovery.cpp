#include "mixopt/discovery.hpp"

#include "mixopt/threads.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

namespace mixopt {

namespace {

double f_value(const Potentials& pot, std::span<const int> support) {
  return -solve_on_support(pot, support).energy;
}

MixtureSolution embed(const Potentials& pot, std::span<const int> support,
                      const RestrictedSolution& res) {
  const int n = pot.size();
  MixtureSolution sol;
  sol.tasks = pot.tasks;
  sol.p = Eigen::VectorXd::Zero(n);
  std::vector<bool> on_support(static_cast<size_t>(n), false);
  for (size_t r = 0; r < support.size(); ++r) {
    sol.p(support[r]) = res.p(static_cast<Eigen::Index>(r));
    on_support[static_cast<size_t>(support[r])] = true;
  }
  for (int i = 0; i < n; ++i) {
    if (!on_support[static_cast<size_t>(i)]) sol.active_set.push_back(i);
  }
  for (int pos : res.active) {
    sol.active_set.push_back(support[static_cast<size_t>(pos)]);
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.nu = res.nu;
  sol.energy = res.energy;
  sol.solver_path = res.path;
  return sol;
}

// Solves each prefix of `sequence` and records values, gains and affinities.
DiscoveryTrace trace_prefixes(const Potentials& pot,
                              const std::vector<int>& sequence) {
  DiscoveryTrace trace;
  trace.tasks = pot.tasks;
  Eigen::VectorXd prev_p;
  for (size_t t = 0; t < sequence.size(); ++t) {
    const std::span<const int> support(sequence.data(), t + 1);
    const RestrictedSolution res = solve_on_support(pot, support);
    const double value = -res.energy;
    trace.selected.push_back(sequence[t]);
    trace.marginal_gains.push_back(
        trace.f_values.empty() ? value : value - trace.f_values.back());
    trace.f_values.push_back(value);
    if (t > 0) {
      trace.affinities.push_back(tv_affinity(prev_p, res.p));
    }
    prev_p = res.p;
    trace.mixtures.push_back(embed(pot, support, res));
  }
  return trace;
}

}  // namespace

std::pair<double, MixtureSolution> set_value(std::span<const int> support,
                                             const Potentials& pot) {
  const RestrictedSolution res = solve_on_support(pot, support);
  return {-res.energy, embed(pot, support, res)};
}

DiscoveryTrace greedy_select(const Potentials& pot, int k) {
  const int n = pot.size();
  if (k < 1 || k > n) {
    std::ostringstream os;
    os << "budget k = " << k << " outside [1, " << n << "]";
    fail(ErrorCode::BudgetOutOfRange, os.str());
  }

  std::vector<int> sequence;
  std::vector<bool> taken(static_cast<size_t>(n), false);
  std::vector<int> candidate;
  for (int step = 0; step < k; ++step) {
    int best = -1;
    double best_value = -std::numeric_limits<double>::infinity();
    candidate.assign(sequence.begin(), sequence.end());
    candidate.push_back(-1);
    for (int j = 0; j < n; ++j) {
      if (taken[static_cast<size_t>(j)]) continue;
      candidate.back() = j;
      const double value = f_value(pot, candidate);
      if (value > best_value) {  // ties keep the lowest index
        best_value = value;
        best = j;
      }
    }
    taken[static_cast<size_t>(best)] = true;
    sequence.push_back(best);
  }
  return trace_prefixes(pot, sequence);
}

double tv_affinity(const Eigen::VectorXd& p_k, const Eigen::VectorXd& p_k1) {
  if (p_k1.size() != p_k.size() + 1) {
    std::ostringstream os;
    os << "expected lengths k and k+1, got " << p_k.size() << " and "
       << p_k1.size();
    fail(ErrorCode::DimensionMismatch, os.str());
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p_k.size(); ++i) {
    sum += std::abs(p_k(i) - p_k1(i));
  }
  return 0.5 * sum;
}

DiscoveryTrace affinity_trajectory(const Potentials& pot, UnaryOrder order) {
  const int n = pot.size();
  std::vector<int> sequence(static_cast<size_t>(n));
  std::iota(sequence.begin(), sequence.end(), 0);
  std::stable_sort(sequence.begin(), sequence.end(), [&](int a, int b) {
    return order == UnaryOrder::ASC_UNARY ? pot.unary(a) < pot.unary(b)
                                          : pot.unary(a) > pot.unary(b);
  });
  return trace_prefixes(pot, sequence);
}

double submodularity_ratio(const Potentials& pot, std::span<const int> x,
                           std::span<const int> y,
                           RatioConvention convention) {
  if (y.empty()) {
    fail(ErrorCode::EmptySupport, "Y must be non-empty");
  }
  {
    std::set<int> seen(x.begin(), x.end());
    for (int i : y) {
      if (seen.contains(i)) {
        fail(ErrorCode::NonDisjointSets,
             "index " + std::to_string(i) + " appears in both X and Y");
      }
    }
  }

  const double f_x = x.empty() ? 0.0 : f_value(pot, x);  // F(empty) = 0

  std::vector<int> join(x.begin(), x.end());
  join.push_back(-1);
  double numerator = 0.0;
  for (int i : y) {
    join.back() = i;
    numerator += f_value(pot, join) - f_x;
  }

  join.assign(x.begin(), x.end());
  join.insert(join.end(), y.begin(), y.end());
  const double f_xy = f_value(pot, join);
  const double denominator = convention == RatioConvention::PAPER
                                 ? f_xy - f_value(pot, y)
                                 : f_xy - f_x;
  if (std::abs(denominator) <= 1e-10) {
    fail(ErrorCode::DegenerateDenominator,
         "|denominator| = " + std::to_string(std::abs(denominator)));
  }
  return numerator / denominator;
}

Eigen::MatrixXd random_hollow_similarity(int n, Rng& rng) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = rng.canonical();
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

std::vector<TaskId> synthetic_tasks(int n) {
  std::vector<TaskId> tasks;
  tasks.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    tasks.emplace_back("t" + std::to_string(i));
  }
  return tasks;
}

namespace {

struct GammaTrial {
  std::optional<double> gamma;
  double eigen_bound = 0.0;
};

GammaTrial run_gamma_trial(int n, const PotentialParams& params,
                           double epsilon_rel, std::uint64_t trial_seed) {
  Rng rng(mix_seed(trial_seed, 0));
  const SimilarityMatrix s = validate_similarity(
      synthetic_tasks(n), random_hollow_similarity(n, rng), Metric::EXTERNAL);
  const Potentials pot =
      build_potentials(s, params, ShiftMode::AUTO, epsilon_rel);

  // Disjoint non-empty X, Y drawn from a shuffled index list.
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::swap(order[static_cast<size_t>(i)],
              order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
  }
  const int x_size = 1 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(n - 1)));
  const int y_size = 1 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(n - x_size)));
  const std::span<const int> x(order.data(), static_cast<size_t>(x_size));
  const std::span<const int> y(order.data() + x_size,
                               static_cast<size_t>(y_size));

  GammaTrial out;
  const SpectrumReport spectrum = eigen_spectrum(pot.pairwise);
  out.eigen_bound = spectrum.gamma_lower_bound;
  try {
    out.gamma = submodularity_ratio(pot, x, y, RatioConvention::STANDARD);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateDenominator) throw;
  }
  return out;
}

GammaReport assemble_gamma_report(std::vector<GammaTrial> results, int n,
                                  const PotentialParams& params, int trials,
                                  std::uint64_t seed) {
  GammaReport report;
  report.n = n;
  report.params = params;
  report.trials = trials;
  report.seed = seed;
  double min_gamma = std::numeric_limits<double>::infinity();
  double min_bound = std::numeric_limits<double>::infinity();
  for (const auto& trial : results) {
    if (!trial.gamma) {
      ++report.degenerate_trials;
      continue;
    }
    report.gammas.push_back(*trial.gamma);
    report.eigen_bounds.push_back(trial.eigen_bound);
    min_gamma = std::min(min_gamma, *trial.gamma);
    min_bound = std::min(min_bound, trial.eigen_bound);
  }
  report.min_gamma = report.gammas.empty() ? 0.0 : min_gamma;
  report.theory_bound = report.eigen_bounds.empty() ? 0.0 : min_bound;
  return report;
}

void check_experiment_args(int n, int trials) {
  if (n < 2) {
    throw std::invalid_argument("gamma experiment needs at least two tasks");
  }
  if (trials < 1) {
    throw std::invalid_argument("trials must be at least 1");
  }
}

}  // namespace

GammaReport gamma_experiment_serial(int n, const PotentialParams& params,
                                    int trials, std::uint64_t seed,
                                    double epsilon_rel) {
  check_experiment_args(n, trials);
  std::vector<GammaTrial> results(static_cast<size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    results[static_cast<size_t>(t)] = run_gamma_trial(
        n, params, epsilon_rel, seed + static_cast<std::uint64_t>(t));
  }
  return assemble_gamma_report(std::move(results), n, params, trials, seed);
}

GammaReport gamma_experiment(int n, const PotentialParams& params, int trials,
                             std::uint64_t seed, double epsilon_rel,
                             int threads) {
  check_experiment_args(n, trials);
  std::vector<GammaTrial> results(static_cast<size_t>(trials));
  std::vector<std::exception_ptr> errors(static_cast<size_t>(trials));
  const int num_threads = resolve_threads(threads);

#pragma omp parallel for schedule(dynamic) num_threads(num_threads)
  for (int t = 0; t < trials; ++t) {
    try {
      results[static_cast<size_t>(t)] = run_gamma_trial(
          n, params, epsilon_rel, seed + static_cast<std::uint64_t>(t));
    } catch (...) {
      errors[static_cast<size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return assemble_gamma_report(std::move(results), n, params, trials, seed);
}

MonotonicityReport monotonicity_check(const Potentials& pot, int trials,
                                      std::uint64_t seed, int threads) {
  if (trials < 1) {
    throw std::invalid_argument("trials must be at least 1");
  }
  const int n = pot.size();
  std::vector<double> margins(static_cast<size_t>(trials), 0.0);
  std::vector<std::exception_ptr> errors(static_cast<size_t>(trials));
  const int num_threads = resolve_threads(threads);

#pragma omp parallel for schedule(dynamic) num_threads(num_threads)
  for (int t = 0; t < trials; ++t) {
    try {
      Rng rng(mix_seed(seed + static_cast<std::uint64_t>(t), 1));
      std::vector<int> order(static_cast<size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      for (int i = n - 1; i > 0; --i) {
        std::swap(order[static_cast<size_t>(i)],
                  order[rng.below(static_cast<std::uint64_t>(i) + 1)]);
      }
      const int b_size =
          1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      const int a_size =
          1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(b_size)));
      const std::span<const int> b(order.data(), static_cast<size_t>(b_size));
      const std::span<const int> a(order.data(), static_cast<size_t>(a_size));
      margins[static_cast<size_t>(t)] = f_value(pot, b) - f_value(pot, a);
    } catch (...) {
      errors[static_cast<size_t>(t)] = std::current_exception();
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  MonotonicityReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (double m : margins) {
    report.worst_margin = std::min(report.worst_margin, m);
    if (m < -1e-9) ++report.violations;
  }
  return report;
}

}  // namespace mixopt
