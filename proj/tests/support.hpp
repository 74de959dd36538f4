#pragma once

// Test-only helpers: brute-force oracles kept independent of the library's
// solve path, random instance generators, and temp-file plumbing.

#include "mixopt/core.hpp"
#include "mixopt/rng.hpp"

#include <Eigen/Dense>

#include <unistd.h>

#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace testsupport {

inline std::vector<mixopt::TaskId> tasks(int n) {
  std::vector<mixopt::TaskId> out;
  for (int i = 0; i < n; ++i) out.emplace_back("t" + std::to_string(i));
  return out;
}

/// Energy evaluated directly from the raw pieces; does not touch the solver.
inline double raw_energy(const Eigen::VectorXd& p, const Eigen::VectorXd& un,
                         const Eigen::MatrixXd& pair) {
  return -un.dot(p) + 0.5 * p.dot(pair * p);
}

/// Visits every simplex point whose coordinates are multiples of 1/steps.
inline void for_each_grid_point(
    int n, int steps, const std::function<void(const Eigen::VectorXd&)>& f) {
  std::vector<int> counts(static_cast<size_t>(n), 0);
  Eigen::VectorXd p(n);
  std::function<void(int, int)> rec = [&](int index, int remaining) {
    if (index == n - 1) {
      counts[static_cast<size_t>(index)] = remaining;
      for (int i = 0; i < n; ++i) {
        p(i) = static_cast<double>(counts[static_cast<size_t>(i)]) / steps;
      }
      f(p);
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      counts[static_cast<size_t>(index)] = c;
      rec(index + 1, remaining - c);
    }
  };
  rec(0, steps);
}

/// Minimum energy over the resolution-1/steps simplex grid.
inline double grid_min_energy(const Eigen::VectorXd& un,
                              const Eigen::MatrixXd& pair, int steps) {
  double best = std::numeric_limits<double>::infinity();
  for_each_grid_point(static_cast<int>(un.size()), steps,
                      [&](const Eigen::VectorXd& p) {
                        best = std::min(best, raw_energy(p, un, pair));
                      });
  return best;
}

/// Minimum energy over feasible two-coordinate perturbations of p_star.
inline double local_grid_min_energy(const Eigen::VectorXd& p_star,
                                    const Eigen::VectorXd& un,
                                    const Eigen::MatrixXd& pair) {
  const int n = static_cast<int>(p_star.size());
  double best = raw_energy(p_star, un, pair);
  for (double delta : {1e-4, 1e-3, 5e-3}) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        Eigen::VectorXd p = p_star;
        p(i) += delta;
        p(j) -= delta;
        if (p(j) < 0.0) continue;
        best = std::min(best, raw_energy(p, un, pair));
      }
    }
  }
  return best;
}

/// Visits all size-k index subsets of [0, n).
inline void for_each_subset(
    int n, int k, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> subset(static_cast<size_t>(k));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == k) {
      f(subset);
      return;
    }
    for (int i = start; i <= n - (k - depth); ++i) {
      subset[static_cast<size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}

struct RandomInstance {
  Eigen::VectorXd unary;
  Eigen::MatrixXd pairwise;
};

/// Positive-definite pairwise matrix (Gram + ridge) with nonnegative unary.
inline RandomInstance random_psd_instance(int n, mixopt::Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      g(i, j) = 2.0 * rng.canonical() - 1.0;
    }
  }
  RandomInstance inst;
  inst.pairwise = g * g.transpose();
  inst.pairwise.diagonal().array() += 0.05;
  inst.unary = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) inst.unary(i) = 5.0 * rng.canonical();
  return inst;
}

inline mixopt::Potentials potentials_from(const RandomInstance& inst) {
  mixopt::Potentials pot;
  pot.tasks = tasks(static_cast<int>(inst.unary.size()));
  pot.unary = inst.unary;
  pot.pairwise = inst.pairwise;
  pot.shift = 0.0;
  pot.params = mixopt::PotentialParams{1.0, 1.0};
  return pot;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("mixopt_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  std::filesystem::path path(const std::string& name) const {
    return dir_ / name;
  }

 private:
  std::filesystem::path dir_;
};

}  // namespace testsupport
