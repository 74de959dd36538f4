#pragma once

#include "mixopt/core.hpp"

#include <utility>

namespace mixopt {

/// Full real spectrum of a symmetric matrix, sorted descending, with the
/// eigenvalue-ratio lower bound used by the weak-submodularity diagnostics.
struct SpectrumReport {
  Eigen::VectorXd eigenvalues;  // descending
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double gamma_lower_bound = 0.0;  // max(lambda_min, 0) / lambda_max
};

constexpr double kDefaultEpsilonRel = 1e-8;

SpectrumReport eigen_spectrum(const Eigen::MatrixXd& m);

/// PSD correction by diagonal shifting. When the smallest eigenvalue is
/// negative the diagonal is raised by |lambda_min| plus a relative jitter
/// epsilon_rel * max(lambda_max, 1) so the result stays invertible; a PSD
/// input is passed through unless it is too close to singular. Off-diagonal
/// entries are never touched.
std::pair<Eigen::MatrixXd, double> psd_shift(
    const Eigen::MatrixXd& pairwise, double epsilon_rel = kDefaultEpsilonRel);

bool is_psd(const Eigen::MatrixXd& m, double tol);

}  // namespace mixopt
