#include "mixopt/qp_solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mixopt {

namespace {

constexpr double kNegativityTolerance = 1e-12;
constexpr double kDualTolerance = 1e-8;
constexpr double kPgEnergyTolerance = 1e-12;
constexpr int kPgMaxIterations = 100000;

void check_potentials(const Potentials& pot) {
  const auto n = static_cast<Eigen::Index>(pot.tasks.size());
  if (n < 1 || pot.unary.size() != n || pot.pairwise.rows() != n ||
      pot.pairwise.cols() != n) {
    fail(ErrorCode::DimensionMismatch,
         "potentials have inconsistent dimensions");
  }
}

struct CoreSolution {
  Eigen::VectorXd p;  // nonnegative up to the clamp tolerance, sums to 1
  double nu = 0.0;
  SolverPath path = SolverPath::INTERIOR;
  std::vector<int> active;  // positions pinned to zero
};

// Equality-constrained stationary point computed in the simplex tangent
// basis z_i = e_i - e_{m-1}: p = 1/m + Z w with (Z^T A Z) w = Z^T (un - A/m).
// This is the same point as the textbook inverse formula but it cancels
// exactly when rows of A and entries of un are constant, and iterative
// refinement holds the residual down when the shift leaves the matrix barely
// invertible. The multiplier is recovered as the mean of (un - A p).
InteriorCandidate interior_on(const Eigen::MatrixXd& a,
                              const Eigen::VectorXd& un) {
  const Eigen::Index m = a.rows();
  if (m == 1) {
    Eigen::VectorXd p(1);
    p(0) = 1.0;
    return {p, un(0) - a(0, 0)};
  }
  const Eigen::Index r = m - 1;
  // Row-difference operator Z^T A, formed once from the stored entries; the
  // tangential residual then cancels exactly (not just to rounding) when the
  // rows of A are permutations of each other, which is what pins the uniform
  // solution on constant-row-sum instances.
  Eigen::MatrixXd row_diff(r, m);
  Eigen::VectorXd un_diff(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    un_diff(i) = un(i) - un(r);
    for (Eigen::Index j = 0; j < m; ++j) {
      row_diff(i, j) = a(i, j) - a(r, j);
    }
  }
  Eigen::MatrixXd reduced(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < r; ++j) {
      reduced(i, j) = row_diff(i, j) - row_diff(i, r);
    }
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(0.5 * (reduced + reduced.transpose()));
  if (ldlt.info() != Eigen::Success) {
    fail(ErrorCode::SingularPairwise, "LDLT factorization failed");
  }

  Eigen::VectorXd p = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  Eigen::VectorXd w = Eigen::VectorXd::Zero(r);
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd tangential = un_diff - row_diff * p;
    const Eigen::VectorXd dw = ldlt.solve(tangential);
    if (!dw.allFinite()) {
      fail(ErrorCode::SingularPairwise, "pairwise matrix is singular");
    }
    w += dw;
    for (Eigen::Index i = 0; i < r; ++i) {
      p(i) = 1.0 / static_cast<double>(m) + w(i);
    }
    p(r) = 1.0 / static_cast<double>(m) - w.sum();
  }
  const double nu = (un - a * p).mean();

  const double scale = 1.0 + un.cwiseAbs().maxCoeff() +
                       row_diff.cwiseAbs().maxCoeff() * p.cwiseAbs().maxCoeff();
  const double stationarity =
      (un_diff - row_diff * p).cwiseAbs().maxCoeff();
  if (!p.allFinite() || stationarity > 1e-7 * scale ||
      std::abs(p.sum() - 1.0) > 1e-10 * (1.0 + p.cwiseAbs().maxCoeff())) {
    fail(ErrorCode::SingularPairwise,
         "interior solve failed to reach stationarity");
  }
  return {std::move(p), nu};
}

// Most negative entry; ties resolved toward the lowest original index.
int most_negative(const Eigen::VectorXd& p, const std::vector<int>& orig) {
  int pick = 0;
  for (int i = 1; i < static_cast<int>(p.size()); ++i) {
    const bool lower = p(i) < p(pick) ||
                       (p(i) == p(pick) && orig[static_cast<size_t>(i)] <
                                               orig[static_cast<size_t>(pick)]);
    if (lower) pick = i;
  }
  return pick;
}

CoreSolution projected_gradient(const Eigen::MatrixXd& a,
                                const Eigen::VectorXd& un) {
  const Eigen::Index m = a.rows();
  const SpectrumReport spectrum = eigen_spectrum(a);
  const double step =
      spectrum.lambda_max > 0.0 ? 1.0 / spectrum.lambda_max : 1.0;

  Eigen::VectorXd p =
      Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  double prev = -un.dot(p) + 0.5 * p.dot(a * p);
  for (int it = 0; it < kPgMaxIterations; ++it) {
    p = project_to_simplex(p - step * (a * p - un));
    const double e = -un.dot(p) + 0.5 * p.dot(a * p);
    if (std::abs(e - prev) < kPgEnergyTolerance) break;
    prev = e;
  }
  if (std::abs(p.sum() - 1.0) > 1e-8) {
    fail(ErrorCode::SolverDiverged,
         "projected gradient fallback left the simplex");
  }

  CoreSolution out;
  out.path = SolverPath::PROJECTED_GRADIENT;
  // The projection produces exact zeros on the inactive face.
  double nu_acc = 0.0;
  int free_count = 0;
  const Eigen::VectorXd grad = a * p - un;
  for (int i = 0; i < m; ++i) {
    if (p(i) == 0.0) {
      out.active.push_back(i);
    } else {
      nu_acc += -grad(i);
      ++free_count;
    }
  }
  out.nu = free_count > 0 ? nu_acc / free_count : 0.0;
  out.p = std::move(p);
  return out;
}

// Active-set driver shared by the full and the support-restricted solves.
// `orig` maps positions to original indices (tie-breaking only).
CoreSolution solve_core(const Eigen::MatrixXd& a, const Eigen::VectorXd& un,
                        const std::vector<int>& orig) {
  const int m = static_cast<int>(a.rows());
  std::vector<int> free_pos(static_cast<size_t>(m));
  std::iota(free_pos.begin(), free_pos.end(), 0);
  std::vector<int> dropped;

  try {
    Eigen::VectorXd cand;
    double nu = 0.0;
    while (true) {
      const auto fm = static_cast<Eigen::Index>(free_pos.size());
      Eigen::MatrixXd a_sub(fm, fm);
      Eigen::VectorXd un_sub(fm);
      for (Eigen::Index r = 0; r < fm; ++r) {
        un_sub(r) = un(free_pos[static_cast<size_t>(r)]);
        for (Eigen::Index c = 0; c < fm; ++c) {
          a_sub(r, c) = a(free_pos[static_cast<size_t>(r)],
                          free_pos[static_cast<size_t>(c)]);
        }
      }
      InteriorCandidate interior = interior_on(a_sub, un_sub);
      cand = std::move(interior.p);
      nu = interior.nu;
      if (cand.minCoeff() >= -kNegativityTolerance || free_pos.size() == 1) {
        break;
      }
      std::vector<int> orig_sub(free_pos.size());
      for (size_t r = 0; r < free_pos.size(); ++r) {
        orig_sub[r] = orig[static_cast<size_t>(free_pos[r])];
      }
      const int worst = most_negative(cand, orig_sub);
      dropped.push_back(free_pos[static_cast<size_t>(worst)]);
      free_pos.erase(free_pos.begin() + worst);
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(m);
    for (size_t r = 0; r < free_pos.size(); ++r) {
      p(free_pos[r]) = std::max(cand(static_cast<Eigen::Index>(r)), 0.0);
    }
    p /= p.sum();

    if (dropped.empty()) {
      return {std::move(p), nu, SolverPath::INTERIOR, {}};
    }
    // Dual feasibility on the pinned coordinates certifies the face.
    const Eigen::VectorXd mu = a * p - un + nu * Eigen::VectorXd::Ones(m);
    bool dual_ok = true;
    for (int i : dropped) {
      if (mu(i) < -kDualTolerance) {
        dual_ok = false;
        break;
      }
    }
    if (dual_ok) {
      std::sort(dropped.begin(), dropped.end());
      return {std::move(p), nu, SolverPath::ACTIVE_SET, std::move(dropped)};
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularPairwise) throw;
  }
  return projected_gradient(a, un);
}

}  // namespace

Potentials build_potentials(const SimilarityMatrix& s,
                            const PotentialParams& params, ShiftMode mode,
                            double epsilon_rel) {
  check_params(params);
  Potentials pot;
  pot.tasks = s.tasks;
  pot.params = params;
  pot.unary = params.beta * (s.values * Eigen::VectorXd::Ones(s.values.rows()));

  Eigen::MatrixXd scaled = params.lambda * s.values;
  if (mode == ShiftMode::OFF) {
    const double lambda_min = eigen_spectrum(scaled).lambda_min;
    if (lambda_min < -1e-9) {
      std::ostringstream os;
      os << "lambda * S has smallest eigenvalue " << lambda_min
         << "; rerun with the automatic shift";
      fail(ErrorCode::NotPsd, os.str());
    }
    pot.pairwise = std::move(scaled);
    pot.shift = 0.0;
  } else {
    auto [shifted, shift] = psd_shift(scaled, epsilon_rel);
    pot.pairwise = std::move(shifted);
    pot.shift = shift;
  }
  return pot;
}

double energy(const Eigen::VectorXd& p, const Potentials& pot) {
  check_potentials(pot);
  if (p.size() != pot.unary.size()) {
    fail(ErrorCode::DimensionMismatch, "mixture length does not match tasks");
  }
  return -pot.unary.dot(p) + 0.5 * p.dot(pot.pairwise * p);
}

InteriorCandidate solve_interior(const Potentials& pot) {
  check_potentials(pot);
  return interior_on(pot.pairwise, pot.unary);
}

MixtureSolution solve(const Potentials& pot) {
  check_potentials(pot);
  const int n = pot.size();
  std::vector<int> orig(static_cast<size_t>(n));
  std::iota(orig.begin(), orig.end(), 0);

  CoreSolution core = solve_core(pot.pairwise, pot.unary, orig);
  MixtureSolution sol;
  sol.tasks = pot.tasks;
  sol.p = std::move(core.p);
  sol.nu = core.nu;
  sol.active_set = std::move(core.active);
  sol.solver_path = core.path;
  sol.energy = energy(sol.p, pot);
  return sol;
}

RestrictedSolution solve_on_support(const Potentials& pot,
                                    std::span<const int> support) {
  check_potentials(pot);
  if (support.empty()) {
    fail(ErrorCode::EmptySupport, "support set is empty");
  }
  const int n = pot.size();
  const auto m = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd a_sub(m, m);
  Eigen::VectorXd un_sub(m);
  std::vector<int> orig(support.begin(), support.end());
  for (int i : orig) {
    if (i < 0 || i >= n) {
      fail(ErrorCode::DimensionMismatch, "support index out of range");
    }
  }
  for (Eigen::Index r = 0; r < m; ++r) {
    un_sub(r) = pot.unary(support[static_cast<size_t>(r)]);
    for (Eigen::Index c = 0; c < m; ++c) {
      a_sub(r, c) = pot.pairwise(support[static_cast<size_t>(r)],
                                 support[static_cast<size_t>(c)]);
    }
  }

  CoreSolution core = solve_core(a_sub, un_sub, orig);
  RestrictedSolution out;
  out.p = std::move(core.p);
  out.nu = core.nu;
  out.path = core.path;
  out.active = std::move(core.active);
  out.energy = -un_sub.dot(out.p) + 0.5 * out.p.dot(a_sub * out.p);
  return out;
}

double kkt_residual(const MixtureSolution& sol, const Potentials& pot) {
  check_potentials(pot);
  const auto n = static_cast<Eigen::Index>(pot.tasks.size());
  if (sol.p.size() != n) {
    fail(ErrorCode::DimensionMismatch,
         "solution length does not match potentials");
  }
  const Eigen::VectorXd mu =
      pot.pairwise * sol.p - pot.unary + sol.nu * Eigen::VectorXd::Ones(n);
  std::vector<bool> active(static_cast<size_t>(n), false);
  for (int i : sol.active_set) active[static_cast<size_t>(i)] = true;

  double stationarity = 0.0;
  double worst_dual = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (active[static_cast<size_t>(i)]) {
      worst_dual = std::min(worst_dual, mu(i));
    } else {
      stationarity = std::max(stationarity, std::abs(mu(i)));
    }
  }
  return stationarity + std::max(0.0, -worst_dual);
}

std::vector<SweepEntry> sweep_beta_lambda(const SimilarityMatrix& s,
                                          const std::vector<double>& ratios,
                                          double lambda_fixed, ShiftMode mode,
                                          double epsilon_rel) {
  std::vector<SweepEntry> out;
  out.reserve(ratios.size());
  for (double ratio : ratios) {
    SweepEntry entry;
    entry.ratio = ratio;
    entry.params = PotentialParams{ratio * lambda_fixed, lambda_fixed};
    const Potentials pot = build_potentials(s, entry.params, mode, epsilon_rel);
    entry.solution = solve(pot);
    entry.entropy = shannon_entropy(entry.solution.p);
    out.push_back(std::move(entry));
  }
  return out;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());

  double cumulative = 0.0;
  double tau = 0.0;
  int rho = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<size_t>(j)];
    const double candidate =
        (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<size_t>(j)] - candidate > 0.0) {
      tau = candidate;
      rho = static_cast<int>(j + 1);
    }
  }
  (void)rho;
  return (v.array() - tau).cwiseMax(0.0);
}

double shannon_entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return h;
}

}  // namespace mixopt
