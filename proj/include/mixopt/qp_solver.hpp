#pragma once

#include "mixopt/core.hpp"
#include "mixopt/spectral.hpp"

#include <span>
#include <vector>

namespace mixopt {

enum class ShiftMode { AUTO, OFF };

/// Derives unary and pairwise potentials from a validated similarity matrix:
/// unary = beta * S * 1 (always from the raw S), pairwise = lambda * S plus a
/// diagonal shift from psd_shift when mode is AUTO. With OFF the scaled matrix
/// must already be PSD.
Potentials build_potentials(const SimilarityMatrix& s,
                            const PotentialParams& params, ShiftMode mode,
                            double epsilon_rel = kDefaultEpsilonRel);

/// E(p) = -unary.p + 1/2 p.pairwise.p
double energy(const Eigen::VectorXd& p, const Potentials& pot);

struct InteriorCandidate {
  Eigen::VectorXd p;  // satisfies sum = 1, may contain negative entries
  double nu = 0.0;
};

/// Closed-form stationary point of the equality-constrained problem:
/// p = pairwise^-1 (unary - nu 1) with nu chosen so the entries sum to one.
/// One pass of iterative refinement keeps the stationarity and sum residuals
/// near machine precision even for barely-invertible shifted matrices.
InteriorCandidate solve_interior(const Potentials& pot);

/// Full simplex-constrained minimizer. Interior solution when it is already
/// nonnegative; otherwise active-set refinement (repeatedly pinning the most
/// negative coordinate to zero), with projected gradient descent as the
/// fallback when dual feasibility cannot be certified.
MixtureSolution solve(const Potentials& pot);

/// Restricted minimizer over mixtures supported on `support` (indices into
/// pot, in caller order). p is reported in support order.
struct RestrictedSolution {
  Eigen::VectorXd p;
  double nu = 0.0;
  double energy = 0.0;
  SolverPath path = SolverPath::INTERIOR;
  std::vector<int> active;  // positions within support pinned to zero
};
RestrictedSolution solve_on_support(const Potentials& pot,
                                    std::span<const int> support);

/// Stationarity residual over free coordinates plus the dual-feasibility
/// violation over active ones; the optimality certificate for a solution.
double kkt_residual(const MixtureSolution& sol, const Potentials& pot);

struct SweepEntry {
  double ratio = 0.0;  // beta / lambda
  PotentialParams params;
  MixtureSolution solution;
  double entropy = 0.0;
};

/// Solves once per beta/lambda ratio (beta = ratio * lambda_fixed) and reports
/// the Shannon entropy of each optimal mixture.
std::vector<SweepEntry> sweep_beta_lambda(
    const SimilarityMatrix& s, const std::vector<double>& ratios,
    double lambda_fixed, ShiftMode mode = ShiftMode::AUTO,
    double epsilon_rel = kDefaultEpsilonRel);

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

double shannon_entropy(const Eigen::VectorXd& p);

}  // namespace mixopt
