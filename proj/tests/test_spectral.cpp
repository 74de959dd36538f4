#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mixopt/discovery.hpp"
#include "mixopt/qp_solver.hpp"
#include "mixopt/rng.hpp"
#include "mixopt/spectral.hpp"

#include "support.hpp"

#include <cmath>

using namespace mixopt;

namespace {

Eigen::MatrixXd exchange2() {
  Eigen::MatrixXd m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Eigen::MatrixXd hollow_ones(int n) {
  return Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("spectrum fixtures") {
  const SpectrumReport id3 = eigen_spectrum(Eigen::MatrixXd::Identity(3, 3));
  CHECK(id3.lambda_min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(id3.lambda_max == doctest::Approx(1.0).epsilon(1e-12));

  const SpectrumReport ex = eigen_spectrum(exchange2());
  CHECK(ex.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ex.eigenvalues(1) == doctest::Approx(-1.0).epsilon(1e-12));

  const SpectrumReport hollow = eigen_spectrum(hollow_ones(3));
  CHECK(hollow.eigenvalues(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(hollow.eigenvalues(1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(hollow.eigenvalues(2) == doctest::Approx(-1.0).epsilon(1e-12));

  Eigen::MatrixXd bad = exchange2();
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(eigen_spectrum(bad), Error);
}

TEST_CASE("psd_shift fixtures") {
  auto [id_shifted, id_shift] = psd_shift(Eigen::MatrixXd::Identity(2, 2), 0.0);
  CHECK(id_shift == 0.0);
  CHECK(id_shifted == Eigen::MatrixXd::Identity(2, 2));

  auto [ex_shifted, ex_shift] = psd_shift(exchange2(), 0.0);
  CHECK(ex_shift == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ex_shifted(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ex_shifted(0, 1) == 1.0);

  auto [h_shifted, h_shift] = psd_shift(hollow_ones(3), 1e-8);
  CHECK(h_shift == doctest::Approx(1.0 + 2e-8).epsilon(1e-10));
  const SpectrumReport before = eigen_spectrum(hollow_ones(3));
  const SpectrumReport after = eigen_spectrum(h_shifted);
  CHECK(after.lambda_min >= 1e-8 * std::max(before.lambda_max, 1.0) - 1e-9);
  CHECK(after.lambda_min == doctest::Approx(2e-8).epsilon(0.5));
}

TEST_CASE("is_psd fixtures") {
  CHECK(is_psd(Eigen::MatrixXd::Identity(3, 3), 0.0));
  CHECK_FALSE(is_psd(exchange2(), 0.0));
  auto [shifted, shift] = psd_shift(exchange2(), 0.0);
  CHECK(is_psd(shifted, 1e-12));
}

TEST_CASE("property: shift preserves off-diagonals and translates spectrum") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const Eigen::MatrixXd s = random_hollow_similarity(n, rng);
    const SpectrumReport before = eigen_spectrum(s);
    auto [shifted, shift] = psd_shift(s, 1e-8);

    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) {
          CHECK(shifted(i, i) == s(i, i) + shift);
        } else {
          CHECK(shifted(i, j) == s(i, j));
        }
      }
    }

    const SpectrumReport after = eigen_spectrum(shifted);
    CHECK(after.lambda_min >=
          1e-8 * std::max(before.lambda_max, 1.0) - 1e-9);
    for (Eigen::Index k = 0; k < before.eigenvalues.size(); ++k) {
      CHECK(after.eigenvalues(k) ==
            doctest::Approx(before.eigenvalues(k) + shift).epsilon(1e-8));
    }

    // a second shift only ever adds the jitter-scale correction
    auto [again, second_shift] = psd_shift(shifted, 1e-8);
    CHECK(second_shift <= 1e-8 * std::max(after.lambda_max, 1.0) + 1e-9);
  }
}

TEST_CASE("property: eigenvalues sum to the trace") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(8));
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = 4.0 * rng.canonical() - 2.0;
      for (int j = i + 1; j < n; ++j) {
        const double v = 4.0 * rng.canonical() - 2.0;
        m(i, j) = v;
        m(j, i) = v;
      }
    }
    const SpectrumReport report = eigen_spectrum(m);
    const double trace = m.trace();
    CHECK(std::abs(report.eigenvalues.sum() - trace) <=
          1e-8 * (1.0 + std::abs(trace)));
    for (Eigen::Index k = 1; k < report.eigenvalues.size(); ++k) {
      CHECK(report.eigenvalues(k - 1) >= report.eigenvalues(k));
    }
  }
}

TEST_CASE("heavier shifting pulls the optimal mixture toward uniform") {
  Rng rng(31);
  const int n = 5;
  const Eigen::MatrixXd s = random_hollow_similarity(n, rng);
  const PotentialParams params{20.0, 10.0};
  REQUIRE(eigen_spectrum(params.lambda * s).lambda_min < 0.0);

  const SimilarityMatrix sim =
      validate_similarity(testsupport::tasks(n), s, Metric::EXTERNAL);
  const Potentials base = build_potentials(sim, params, ShiftMode::AUTO);
  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);

  double prev = std::numeric_limits<double>::infinity();
  for (double extra : {0.0, 2.0, 5.0, 10.0, 25.0, 100.0}) {
    Potentials pot = base;
    pot.pairwise.diagonal().array() += extra;
    pot.shift += extra;
    const MixtureSolution sol = solve(pot);
    const double dist = (sol.p - uniform).norm();
    CHECK(dist <= prev + 1e-9);
    prev = dist;
  }
}
