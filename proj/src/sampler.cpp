#include "mixopt/sampler.hpp"

#include "mixopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace mixopt {

namespace {

// Substream tags so allocation and per-task instance draws never share a
// stream.
constexpr std::uint64_t kAllocationStream = 0;
constexpr std::uint64_t kInstanceStreamBase = 1;

std::vector<double> checked_mixture(const std::vector<TaskId>& tasks,
                                    const Eigen::VectorXd& p) {
  if (p.size() != static_cast<Eigen::Index>(tasks.size())) {
    fail(ErrorCode::DimensionMismatch, "mixture length does not match tasks");
  }
  double sum = 0.0;
  std::vector<double> probs(static_cast<size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double v = p(i);
    if (!std::isfinite(v) || v < -1e-12) {
      fail(ErrorCode::InvalidMixture,
           "mixture entry " + std::to_string(i) + " is negative");
    }
    probs[static_cast<size_t>(i)] = std::max(v, 0.0);
    sum += probs[static_cast<size_t>(i)];
  }
  if (std::abs(sum - 1.0) > 1e-8) {
    std::ostringstream os;
    os << "mixture sums to " << sum;
    fail(ErrorCode::InvalidMixture, os.str());
  }
  return probs;
}

std::uint64_t binomial_count(Rng& rng, std::uint64_t trials, double q) {
  if (q <= 0.0) return 0;
  if (q >= 1.0) return trials;
  std::uint64_t count = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    count += rng.bernoulli(q) ? 1 : 0;
  }
  return count;
}

// One multinomial draw of `total` over the active tasks, as sequential
// conditional binomials in task order.
void draw_round_multinomial(Rng& rng, std::uint64_t total,
                            const std::vector<double>& probs,
                            const std::vector<int>& active,
                            std::vector<std::uint64_t>& add) {
  double rest = 0.0;
  for (int i : active) rest += probs[static_cast<size_t>(i)];
  std::uint64_t remaining = total;
  for (size_t r = 0; r < active.size(); ++r) {
    const int i = active[r];
    if (remaining == 0) break;
    std::uint64_t k;
    if (r + 1 == active.size()) {
      k = remaining;
    } else {
      const double q = std::min(1.0, probs[static_cast<size_t>(i)] / rest);
      k = binomial_count(rng, remaining, q);
    }
    add[static_cast<size_t>(i)] += k;
    remaining -= k;
    rest -= probs[static_cast<size_t>(i)];
  }
}

// Largest-remainder rounding of total * p over the active tasks; ties go to
// the lowest task index.
void draw_round_expected(std::uint64_t total, const std::vector<double>& probs,
                         const std::vector<int>& active,
                         std::vector<std::uint64_t>& add) {
  double rest = 0.0;
  for (int i : active) rest += probs[static_cast<size_t>(i)];
  std::uint64_t assigned = 0;
  std::vector<std::pair<double, int>> remainders;
  remainders.reserve(active.size());
  for (int i : active) {
    const double target =
        static_cast<double>(total) * probs[static_cast<size_t>(i)] / rest;
    const double floored = std::floor(target);
    add[static_cast<size_t>(i)] += static_cast<std::uint64_t>(floored);
    assigned += static_cast<std::uint64_t>(floored);
    remainders.emplace_back(target - floored, i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a,
                                                     const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::uint64_t leftover = total - assigned;
  for (size_t r = 0; r < remainders.size() && leftover > 0; ++r, --leftover) {
    add[static_cast<size_t>(remainders[r].second)] += 1;
  }
}

}  // namespace

SamplingPlan allocate(const std::vector<TaskId>& tasks,
                      const Eigen::VectorXd& p, std::uint64_t budget,
                      std::uint64_t seed,
                      const std::optional<std::vector<std::uint64_t>>&
                          capacities,
                      AllocationMode mode) {
  const std::vector<double> probs = checked_mixture(tasks, p);
  const size_t n = tasks.size();
  if (capacities) {
    if (capacities->size() != n) {
      fail(ErrorCode::DimensionMismatch,
           "capacities length does not match tasks");
    }
    std::uint64_t reachable = 0;
    for (size_t i = 0; i < n; ++i) {
      if (probs[i] > 0.0) reachable += (*capacities)[i];
    }
    if (reachable < budget) {
      std::ostringstream os;
      os << "budget " << budget << " exceeds the " << reachable
         << " instances reachable under the mixture";
      fail(ErrorCode::BudgetExceedsCapacity, os.str());
    }
  }

  SamplingPlan plan;
  plan.tasks = tasks;
  plan.counts.assign(n, 0);
  plan.budget = budget;
  plan.seed = seed;
  plan.mode = mode;
  plan.capacities = capacities;

  Rng rng(mix_seed(seed, kAllocationStream));
  std::uint64_t placed = 0;
  while (placed < budget) {
    std::vector<int> active;
    for (size_t i = 0; i < n; ++i) {
      const bool open =
          !capacities || plan.counts[i] < (*capacities)[i];
      if (probs[i] > 0.0 && open) active.push_back(static_cast<int>(i));
    }
    if (active.empty()) {
      fail(ErrorCode::BudgetExceedsCapacity,
           "all tasks with positive probability are saturated");
    }

    std::vector<std::uint64_t> add(n, 0);
    if (mode == AllocationMode::MULTINOMIAL) {
      draw_round_multinomial(rng, budget - placed, probs, active, add);
    } else {
      draw_round_expected(budget - placed, probs, active, add);
    }
    for (size_t i = 0; i < n; ++i) {
      std::uint64_t take = add[i];
      if (capacities) {
        take = std::min(take, (*capacities)[i] - plan.counts[i]);
      }
      plan.counts[i] += take;
      placed += take;
    }
  }
  return plan;
}

double multinomial_pmf(const std::vector<std::uint64_t>& counts,
                       std::uint64_t budget, const Eigen::VectorXd& p) {
  if (static_cast<Eigen::Index>(counts.size()) != p.size()) {
    fail(ErrorCode::DimensionMismatch, "counts length does not match mixture");
  }
  const std::uint64_t total =
      std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total != budget) {
    std::ostringstream os;
    os << "counts sum to " << total << ", budget is " << budget;
    fail(ErrorCode::CountBudgetMismatch, os.str());
  }
  double log_pmf = std::lgamma(static_cast<double>(budget) + 1.0);
  for (size_t i = 0; i < counts.size(); ++i) {
    const auto k = static_cast<double>(counts[i]);
    const double pi = p(static_cast<Eigen::Index>(i));
    if (counts[i] == 0) {
      continue;  // lgamma(1) = 0 and k log p = 0
    }
    if (pi <= 0.0) return 0.0;
    log_pmf += k * std::log(pi) - std::lgamma(k + 1.0);
  }
  return std::exp(log_pmf);
}

std::vector<std::vector<std::uint64_t>> draw_instances(
    const std::vector<std::uint64_t>& counts,
    const std::vector<std::uint64_t>& capacities, std::uint64_t seed) {
  if (counts.size() != capacities.size()) {
    fail(ErrorCode::DimensionMismatch,
         "counts and capacities lengths differ");
  }
  std::vector<std::vector<std::uint64_t>> manifest(counts.size());
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > capacities[i]) {
      std::ostringstream os;
      os << "task " << i << ": count " << counts[i] << " exceeds capacity "
         << capacities[i];
      fail(ErrorCode::CountExceedsCapacity, os.str());
    }
    if (counts[i] == 0) continue;

    // Partial Fisher-Yates over a sparse permutation; O(count) memory no
    // matter the capacity.
    Rng rng(mix_seed(seed, kInstanceStreamBase + i));
    std::unordered_map<std::uint64_t, std::uint64_t> perm;
    auto value_at = [&perm](std::uint64_t idx) {
      auto it = perm.find(idx);
      return it == perm.end() ? idx : it->second;
    };
    auto& out = manifest[i];
    out.reserve(counts[i]);
    for (std::uint64_t j = 0; j < counts[i]; ++j) {
      const std::uint64_t r = rng.in_range(j, capacities[i] - 1);
      const std::uint64_t vj = value_at(j);
      const std::uint64_t vr = value_at(r);
      perm[j] = vr;
      perm[r] = vj;
      out.push_back(vr);
    }
    std::sort(out.begin(), out.end());
  }
  return manifest;
}

}  // namespace mixopt
