#pragma once

#include "mixopt/core.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mixopt {

enum class AllocationMode {
  MULTINOMIAL,  // counts ~ Multinomial(B, p), the default
  EXPECTED,     // largest-remainder rounding of B * p
};

/// Budgeted per-task instance counts realized from a mixture, plus the
/// optional per-task instance manifest.
struct SamplingPlan {
  std::vector<TaskId> tasks;
  std::vector<std::uint64_t> counts;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
  AllocationMode mode = AllocationMode::MULTINOMIAL;
  std::optional<std::vector<std::uint64_t>> capacities;
  /// manifest[i] holds counts[i] distinct instance indices for task i,
  /// ascending.
  std::optional<std::vector<std::vector<std::uint64_t>>> manifest;
};

/// Draws task counts summing exactly to `budget`. Multinomial draws are
/// realized as sequential conditional binomials in task order; when a
/// capacity saturates, the overflow is redistributed by re-drawing over the
/// unsaturated tasks with renormalized probabilities.
SamplingPlan allocate(const std::vector<TaskId>& tasks,
                      const Eigen::VectorXd& p, std::uint64_t budget,
                      std::uint64_t seed,
                      const std::optional<std::vector<std::uint64_t>>&
                          capacities = std::nullopt,
                      AllocationMode mode = AllocationMode::MULTINOMIAL);

/// Exact multinomial probability of a count vector, computed in log space.
double multinomial_pmf(const std::vector<std::uint64_t>& counts,
                       std::uint64_t budget, const Eigen::VectorXd& p);

/// Per task, counts[i] distinct indices uniform without replacement from
/// [0, capacities[i]), each task on its own substream of (seed, task index).
std::vector<std::vector<std::uint64_t>> draw_instances(
    const std::vector<std::uint64_t>& counts,
    const std::vector<std::uint64_t>& capacities, std::uint64_t seed);

}  // namespace mixopt
