#include "mixopt/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace mixopt {

namespace {

void check_finite(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) {
    fail(ErrorCode::NonFiniteEntry, "matrix contains NaN or infinity");
  }
}

}  // namespace

SpectrumReport eigen_spectrum(const Eigen::MatrixXd& m) {
  check_finite(m);
  // Callers guarantee symmetry within 1e-9; decompose the symmetric part.
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym,
                                                        Eigen::EigenvaluesOnly);
  SpectrumReport report;
  report.eigenvalues = solver.eigenvalues().reverse();
  report.lambda_max = report.eigenvalues(0);
  report.lambda_min = report.eigenvalues(report.eigenvalues.size() - 1);
  report.gamma_lower_bound =
      report.lambda_max > 0.0
          ? std::max(report.lambda_min, 0.0) / report.lambda_max
          : 0.0;
  return report;
}

std::pair<Eigen::MatrixXd, double> psd_shift(const Eigen::MatrixXd& pairwise,
                                             double epsilon_rel) {
  check_finite(pairwise);
  const SpectrumReport spectrum = eigen_spectrum(pairwise);

  double shift = 0.0;
  if (spectrum.lambda_min < 0.0) {
    shift = -spectrum.lambda_min +
            epsilon_rel * std::max(spectrum.lambda_max, 1.0);
  } else if (spectrum.lambda_min < epsilon_rel * spectrum.lambda_max) {
    shift = epsilon_rel * spectrum.lambda_max;
  }

  if (shift == 0.0) {
    return {pairwise, 0.0};
  }
  Eigen::MatrixXd shifted = pairwise;
  shifted.diagonal().array() += shift;
  return {std::move(shifted), shift};
}

bool is_psd(const Eigen::MatrixXd& m, double tol) {
  return eigen_spectrum(m).lambda_min >= -tol;
}

}  // namespace mixopt
