#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "lssmor/errors.hpp"
#include "lssmor/lyapunov.hpp"
#include "lssmor/model.hpp"

namespace lssmor {

/// Infinite controllability/observability Gramians of a switched system,
/// one pair (P_q, Q_q) per mode, with convergence metadata.
struct GramianSet {
  std::vector<Matrix> P;  // controllability, per mode
  std::vector<Matrix> Q;  // observability, per mode
  int levels_used = 0;    // truncation level H; -1 for the direct solve
  int iterations = 0;     // fixed-point sweeps (direct method)
  std::vector<double> residuals;  // coupled-equation relative residuals (P then Q, per mode)
  bool converged = false;

  double max_residual() const {
    double r = 0.0;
    for (double v : residuals) r = std::max(r, v);
    return r;
  }
};

/// Sufficient-condition report for existence of the infinite Gramians:
/// couplings must satisfy ||K|| <= sqrt(2 alpha) / beta where
/// ||e^{A_D t}|| <= beta e^{-alpha t}.
struct ExistenceReport {
  double alpha = 0.0;   // decay rate, -max Re(lambda(A_D))
  double beta = 1.0;    // transient growth, kappa of the eigenvector matrix
  double k_norm = 0.0;  // max spectral norm over all couplings
  double bound = 0.0;   // sqrt(2 alpha) / beta
  bool beta_reliable = true;  // false when A_D is (near-)defective
  bool satisfied = false;
};

namespace detail {

inline void require_stable_modes(const LssModel& model) {
  auto abscissas = check_stability(model);
  for (size_t q = 0; q < abscissas.size(); ++q) {
    if (!(abscissas[q] < 0.0))
      throw IllPosedError("mode " + std::to_string(q + 1) +
                          " is not stable (spectral abscissa " +
                          std::to_string(abscissas[q]) +
                          "), Gramians are undefined");
  }
}

// Per-mode Schur caches for A_q (controllability) and A_q^T (observability).
struct ModeSolvers {
  std::vector<SylvesterSolver> ctrl;  // A_q X + X A_q^T + W = 0
  std::vector<SylvesterSolver> obs;   // A_q^T X + X A_q + W = 0

  explicit ModeSolvers(const LssModel& model) {
    for (const auto& md : model.modes) {
      ctrl.emplace_back(md.A, md.A.transpose());
      obs.emplace_back(md.A.transpose(), md.A);
    }
  }
};

// Coupled forcing terms sum_{s != q} K_{s,q} P_s K_{s,q}^T (controllability)
// and sum_{s != q} K_{q,s}^T Q_s K_{q,s} (observability).
inline Matrix coupling_forcing_ctrl(const LssModel& model, int q,
                                    const std::vector<Matrix>& P) {
  Matrix W = Matrix::Zero(model.mode(q).n(), model.mode(q).n());
  for (int s = 1; s <= model.mode_count(); ++s) {
    if (s == q) continue;
    const Matrix K = model.coupling(s, q);
    W.noalias() += K * P[static_cast<size_t>(s - 1)] * K.transpose();
  }
  return W;
}

inline Matrix coupling_forcing_obs(const LssModel& model, int q,
                                   const std::vector<Matrix>& Q) {
  Matrix W = Matrix::Zero(model.mode(q).n(), model.mode(q).n());
  for (int s = 1; s <= model.mode_count(); ++s) {
    if (s == q) continue;
    const Matrix K = model.coupling(q, s);
    W.noalias() += K.transpose() * Q[static_cast<size_t>(s - 1)] * K;
  }
  return W;
}

inline double coupled_residual_ctrl(const LssModel& model, int q,
                                    const std::vector<Matrix>& P) {
  const Mode& md = model.mode(q);
  const Matrix W = coupling_forcing_ctrl(model, q, P) + md.B * md.B.transpose();
  const Matrix res = md.A * P[static_cast<size_t>(q - 1)] +
                     P[static_cast<size_t>(q - 1)] * md.A.transpose() + W;
  return relative_residual(res, W);
}

inline double coupled_residual_obs(const LssModel& model, int q,
                                   const std::vector<Matrix>& Q) {
  const Mode& md = model.mode(q);
  const Matrix W = coupling_forcing_obs(model, q, Q) + md.C.transpose() * md.C;
  const Matrix res = md.A.transpose() * Q[static_cast<size_t>(q - 1)] +
                     Q[static_cast<size_t>(q - 1)] * md.A + W;
  return relative_residual(res, W);
}

}  // namespace detail

/// Gramians of the isolated mode q (no switching):
/// A P + P A^T + B B^T = 0 and A^T Q + Q A + C^T C = 0.
inline std::pair<Matrix, Matrix> linear_gramians(const LssModel& model, int q) {
  require_valid(model);
  const Mode& md = model.mode(q);
  const double abscissa = spectral_abscissa(md.A);
  if (!(abscissa < 0.0))
    throw IllPosedError("mode " + std::to_string(q) +
                        " is not stable (spectral abscissa " +
                        std::to_string(abscissa) + ")");
  auto [P, repP] = solve_lyapunov(md.A, md.B * md.B.transpose());
  auto [Q, repQ] = solve_lyapunov(md.A.transpose(), md.C.transpose() * md.C);
  (void)repP;
  (void)repQ;
  return {P, Q};
}

/// Per-level Gramian contributions P_q^(k), Q_q^(k) for one level k.
struct LevelGramians {
  std::vector<Matrix> P, Q;
};

/// Contributions of switching sequences of length exactly k, for k = 1..k_max.
/// Level 1 equals linear_gramians; higher levels recurse through the
/// couplings: A_q P_q^(k) + P_q^(k) A_q^T + sum_{s!=q} K_{s,q} P_s^(k-1) K_{s,q}^T = 0
/// (dually for Q).
inline std::vector<LevelGramians> level_k_gramians(const LssModel& model,
                                                   int k_max) {
  require_valid(model);
  detail::require_stable_modes(model);
  if (k_max < 1) throw ValidationError("level count must be >= 1");
  const int M = model.mode_count();
  detail::ModeSolvers solvers(model);

  std::vector<LevelGramians> levels;
  LevelGramians first;
  for (int q = 1; q <= M; ++q) {
    const Mode& md = model.mode(q);
    first.P.push_back(solve_lyapunov(solvers.ctrl[static_cast<size_t>(q - 1)],
                                     md.B * md.B.transpose()));
    first.Q.push_back(solve_lyapunov(solvers.obs[static_cast<size_t>(q - 1)],
                                     md.C.transpose() * md.C));
  }
  levels.push_back(std::move(first));
  for (int k = 2; k <= k_max; ++k) {
    const LevelGramians& prev = levels.back();
    LevelGramians cur;
    for (int q = 1; q <= M; ++q) {
      cur.P.push_back(solve_lyapunov(
          solvers.ctrl[static_cast<size_t>(q - 1)],
          detail::coupling_forcing_ctrl(model, q, prev.P)));
      cur.Q.push_back(solve_lyapunov(
          solvers.obs[static_cast<size_t>(q - 1)],
          detail::coupling_forcing_obs(model, q, prev.Q)));
    }
    levels.push_back(std::move(cur));
  }
  return levels;
}

/// Truncated-sum approximation P_q ~ sum_{k<=H} P_q^(k) with adaptive H:
/// stop once the newest level contributes below tol relative trace for every
/// mode (P and Q alike).  Three consecutive trace increases across levels
/// signal a divergent series.
inline GramianSet infinite_gramians_series(const LssModel& model,
                                           double tol = 1e-10,
                                           int H_max = 200) {
  require_valid(model);
  detail::require_stable_modes(model);
  const int M = model.mode_count();
  detail::ModeSolvers solvers(model);

  GramianSet set;
  LevelGramians level;
  for (int q = 1; q <= M; ++q) {
    const Mode& md = model.mode(q);
    level.P.push_back(solve_lyapunov(solvers.ctrl[static_cast<size_t>(q - 1)],
                                     md.B * md.B.transpose()));
    level.Q.push_back(solve_lyapunov(solvers.obs[static_cast<size_t>(q - 1)],
                                     md.C.transpose() * md.C));
  }
  set.P = level.P;
  set.Q = level.Q;
  set.levels_used = 1;

  auto level_trace = [M](const LevelGramians& lv) {
    double t = 0.0;
    for (int q = 0; q < M; ++q) t += lv.P[static_cast<size_t>(q)].trace() +
                                     lv.Q[static_cast<size_t>(q)].trace();
    return t;
  };

  bool couplings_zero = true;
  for (int q = 1; q <= M && couplings_zero; ++q)
    for (int s = 1; s <= M && couplings_zero; ++s)
      if (q != s && model.coupling(q, s).norm() > 0.0) couplings_zero = false;
  if (couplings_zero) {
    // Series truncates after level 1.
    set.converged = true;
    for (int q = 1; q <= M; ++q)
      set.residuals.push_back(detail::coupled_residual_ctrl(model, q, set.P));
    for (int q = 1; q <= M; ++q)
      set.residuals.push_back(detail::coupled_residual_obs(model, q, set.Q));
    return set;
  }

  double prev_trace = level_trace(level);
  int growth_streak = 0;
  for (int k = 2; k <= H_max; ++k) {
    LevelGramians next;
    for (int q = 1; q <= M; ++q) {
      next.P.push_back(solve_lyapunov(
          solvers.ctrl[static_cast<size_t>(q - 1)],
          detail::coupling_forcing_ctrl(model, q, level.P)));
      next.Q.push_back(solve_lyapunov(
          solvers.obs[static_cast<size_t>(q - 1)],
          detail::coupling_forcing_obs(model, q, level.Q)));
    }
    const double tr = level_trace(next);
    growth_streak = tr > prev_trace ? growth_streak + 1 : 0;
    if (growth_streak >= 3)
      throw DivergenceError(
          "Gramian series diverges: level traces grew for 3 consecutive "
          "levels; the coupling-norm existence bound is likely violated");
    prev_trace = tr;

    for (int q = 0; q < M; ++q) {
      set.P[static_cast<size_t>(q)] += next.P[static_cast<size_t>(q)];
      set.Q[static_cast<size_t>(q)] += next.Q[static_cast<size_t>(q)];
    }
    set.levels_used = k;
    level = std::move(next);

    bool small = true;
    for (int q = 0; q < M && small; ++q) {
      small = level.P[static_cast<size_t>(q)].trace() <=
                  tol * set.P[static_cast<size_t>(q)].trace() &&
              level.Q[static_cast<size_t>(q)].trace() <=
                  tol * set.Q[static_cast<size_t>(q)].trace();
    }
    if (small) {
      set.converged = true;
      break;
    }
  }
  for (int q = 1; q <= M; ++q)
    set.residuals.push_back(detail::coupled_residual_ctrl(model, q, set.P));
  for (int q = 1; q <= M; ++q)
    set.residuals.push_back(detail::coupled_residual_obs(model, q, set.Q));
  return set;
}

/// Direct solution of the coupled generalized Lyapunov system
///   A_q P_q + P_q A_q^T + sum_{s!=q} K_{s,q} P_s K_{s,q}^T + B_q B_q^T = 0
/// (dually for Q) by per-mode fixed-point iteration, warm-started from the
/// linear Gramians.
inline GramianSet infinite_gramians_direct(const LssModel& model,
                                           double tol = 1e-10,
                                           int iter_max = 500) {
  require_valid(model);
  detail::require_stable_modes(model);
  const int M = model.mode_count();
  detail::ModeSolvers solvers(model);

  GramianSet set;
  for (int q = 1; q <= M; ++q) {
    const Mode& md = model.mode(q);
    set.P.push_back(solve_lyapunov(solvers.ctrl[static_cast<size_t>(q - 1)],
                                   md.B * md.B.transpose()));
    set.Q.push_back(solve_lyapunov(solvers.obs[static_cast<size_t>(q - 1)],
                                   md.C.transpose() * md.C));
  }
  set.levels_used = -1;

  double init_trace = 0.0;
  for (const auto& P : set.P) init_trace += P.trace();
  init_trace = std::max(init_trace, std::numeric_limits<double>::min());

  double prev_change = std::numeric_limits<double>::infinity();
  int growth_streak = 0;
  for (int it = 1; it <= iter_max; ++it) {
    double change = 0.0;
    std::vector<Matrix> newP(set.P.size()), newQ(set.Q.size());
    for (int q = 1; q <= M; ++q) {
      const Mode& md = model.mode(q);
      newP[static_cast<size_t>(q - 1)] = solve_lyapunov(
          solvers.ctrl[static_cast<size_t>(q - 1)],
          detail::coupling_forcing_ctrl(model, q, set.P) +
              md.B * md.B.transpose());
      newQ[static_cast<size_t>(q - 1)] = solve_lyapunov(
          solvers.obs[static_cast<size_t>(q - 1)],
          detail::coupling_forcing_obs(model, q, set.Q) +
              md.C.transpose() * md.C);
    }
    for (int q = 0; q < M; ++q) {
      const auto qi = static_cast<size_t>(q);
      const double np = newP[qi].norm(), nq = newQ[qi].norm();
      change = std::max(change, np > 0 ? (newP[qi] - set.P[qi]).norm() / np : 0.0);
      change = std::max(change, nq > 0 ? (newQ[qi] - set.Q[qi]).norm() / nq : 0.0);
    }
    set.P = std::move(newP);
    set.Q = std::move(newQ);
    set.iterations = it;

    double cur_trace = 0.0;
    for (const auto& P : set.P) cur_trace += P.trace();
    if (cur_trace > 1e14 * init_trace)
      throw DivergenceError(
          "coupled Gramian fixed point diverges (unbounded trace growth); "
          "the coupling-norm existence bound is likely violated");
    growth_streak = (change > prev_change && change > 1.0) ? growth_streak + 1 : 0;
    if (growth_streak >= 3)
      throw DivergenceError(
          "coupled Gramian fixed point diverges (growing update norms)");
    prev_change = change;

    if (change <= tol) {
      set.converged = true;
      break;
    }
  }
  for (int q = 1; q <= M; ++q)
    set.residuals.push_back(detail::coupled_residual_ctrl(model, q, set.P));
  for (int q = 1; q <= M; ++q)
    set.residuals.push_back(detail::coupled_residual_obs(model, q, set.Q));
  return set;
}

/// Evaluate the sufficient existence condition for the infinite Gramians.
inline ExistenceReport existence_check(const LssModel& model) {
  BlockAssembly asmb = assemble_blocks(model);
  ExistenceReport rep;
  Eigen::EigenSolver<Matrix> es(asmb.A_D, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw IllPosedError("eigenvalue computation failed for A_D");
  rep.alpha = -es.eigenvalues().real().maxCoeff();

  // ||e^{A_D t}|| <= kappa(V) e^{-alpha t} for diagonalizable A_D.
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  rep.beta = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
  rep.beta = std::max(rep.beta, 1.0);
  rep.beta_reliable = rep.beta <= 1e12;

  for (int q = 1; q <= model.mode_count(); ++q) {
    for (int s = 1; s <= model.mode_count(); ++s) {
      if (q == s) continue;
      const Matrix K = model.coupling(q, s);
      if (K.size() == 0) continue;
      Eigen::JacobiSVD<Matrix> ksvd(K);
      rep.k_norm = std::max(rep.k_norm, ksvd.singularValues().maxCoeff());
    }
  }
  if (rep.alpha > 0.0) rep.bound = std::sqrt(2.0 * rep.alpha) / rep.beta;
  rep.satisfied =
      rep.alpha > 0.0 && rep.beta_reliable && rep.k_norm <= rep.bound;
  return rep;
}

}  // namespace lssmor
