#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "lssmor/errors.hpp"
#include "lssmor/gramians.hpp"
#include "lssmor/h2.hpp"
#include "lssmor/lyapunov.hpp"
#include "lssmor/model.hpp"
#include "lssmor/rng.hpp"

namespace lssmor {

struct ReductionResult {
  LssModel reduced;
  std::vector<Matrix> X, Y;  // per-mode projection / test bases, Y_q^T X_q = I
  std::vector<double> offset_history;     // eigenvalue offset per iteration
  std::vector<double> offdiag_x_history;  // rel. off-diagonal mass of X_D
  std::vector<double> offdiag_y_history;
  std::vector<Vector> singular_values;  // per-mode balancing values (BT only)
  int iterations = 0;
  int restarts_used = 0;
  bool converged = false;
  bool reduced_stable = false;
  bool order_clipped = false;  // BT only: requested order beyond Gramian rank
  uint64_t seed = 0;
};

struct SwirkaOptions {
  uint64_t seed = 0;
  double eps = 1e-8;          // eigenvalue-offset stopping tolerance
  int iter_max = 200;
  int restarts = 5;
  double inner_tol = 1e-10;   // generalized-Sylvester fixed point
  int inner_max = 300;
};

namespace detail {

inline void check_orders(const LssModel& model, const std::vector<int>& orders) {
  if (static_cast<int>(orders.size()) != model.mode_count())
    throw ValidationError("need one reduced order per mode");
  for (int q = 1; q <= model.mode_count(); ++q) {
    const int r = orders[static_cast<size_t>(q - 1)];
    if (r < 1 || r > model.mode(q).n())
      throw ValidationError("reduced order for mode " + std::to_string(q) +
                            " must lie in 1..n_q");
  }
}

inline std::vector<std::complex<double>> sorted_eigenvalues(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, false);
  std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                       es.eigenvalues().data() +
                                           es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

inline double eigen_offset(const std::vector<std::complex<double>>& a,
                           const std::vector<std::complex<double>>& b) {
  double off = 0.0;
  for (size_t i = 0; i < a.size(); ++i) off = std::max(off, std::abs(a[i] - b[i]));
  return off;
}

// Relative mass of the off-diagonal blocks of a block-partitioned matrix.
inline double offdiag_ratio(const Matrix& full,
                            const std::vector<Eigen::Index>& row_off,
                            const std::vector<Eigen::Index>& col_off) {
  const size_t M = row_off.size() - 1;
  double diag_sq = 0.0;
  for (size_t q = 0; q < M; ++q)
    diag_sq += full.block(row_off[q], col_off[q], row_off[q + 1] - row_off[q],
                          col_off[q + 1] - col_off[q]).squaredNorm();
  const double total_sq = full.squaredNorm();
  const double off_sq = std::max(0.0, total_sq - diag_sq);
  return total_sq > 0.0 ? std::sqrt(off_sq / total_sq) : 0.0;
}

// Fixed-point solve of A X + X S + K X T + F = 0, where `solver` factors
// (A, S).  Warm-startable; throws DivergenceError when the sweeps stall.
inline Matrix generalized_sylvester_fixed_point(
    const SylvesterSolver& solver, const Matrix& K, const Matrix& T,
    const Matrix& F, Matrix X, double tol, int max_sweeps) {
  if (X.size() == 0) X = Matrix::Zero(F.rows(), F.cols());
  const double fscale = F.norm() + 1.0;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Matrix Xn = solver.solve(K * X * T + F);
    const double nn = Xn.norm();
    const double change = nn > 0.0 ? (Xn - X).norm() / nn : 0.0;
    X = std::move(Xn);
    if (X.norm() > 1e12 * fscale)
      throw DivergenceError("generalized Sylvester fixed point diverges");
    if (change <= tol) return X;
  }
  throw DivergenceError(
      "generalized Sylvester fixed point did not converge within " +
      std::to_string(max_sweeps) + " sweeps");
}

inline LssModel random_reduced_model(const LssModel& model,
                                     const std::vector<int>& orders, Rng& rng) {
  LssModel red;
  red.name = "reduced-init";
  const int M = model.mode_count();
  auto random_matrix = [&rng](Eigen::Index rows, Eigen::Index cols,
                              double scale) {
    Matrix G(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) G(i, j) = scale * rng.normal();
    return G;
  };
  for (int q = 1; q <= M; ++q) {
    const int r = orders[static_cast<size_t>(q - 1)];
    Mode md;
    md.label = q;
    // Stable symmetric start: Q diag(uniform[-2,-0.2]) Q^T.
    Matrix G = random_matrix(r, r, 1.0);
    Matrix Qm = Eigen::HouseholderQR<Matrix>(G).householderQ() *
                Matrix::Identity(r, r);
    Vector d(r);
    for (int i = 0; i < r; ++i) d(i) = rng.uniform(-2.0, -0.2);
    md.A = Qm * d.asDiagonal() * Qm.transpose();
    const double s = 1.0 / std::sqrt(static_cast<double>(r));
    md.B = random_matrix(r, model.mode(q).m(), s);
    md.C = random_matrix(model.mode(q).p(), r, s);
    red.modes.push_back(std::move(md));
  }
  for (int q = 1; q <= M; ++q)
    for (int s = 1; s <= M; ++s)
      if (q != s)
        red.couplings[{q, s}] = random_matrix(
            orders[static_cast<size_t>(s - 1)], orders[static_cast<size_t>(q - 1)],
            1.0 / std::sqrt(static_cast<double>(orders[static_cast<size_t>(q - 1)])));
  return red;
}

/// Rank-revealing Cholesky of a PSD matrix with diagonal pivoting;
/// returns an n x r factor L with S ~ L L^T.
inline Matrix pivoted_cholesky(const Matrix& S, double rel_tol = 1e-13) {
  const Eigen::Index n = S.rows();
  Matrix L = Matrix::Zero(n, n);
  Vector d = S.diagonal();
  std::vector<Eigen::Index> piv(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) piv[static_cast<size_t>(i)] = i;
  const double cutoff = rel_tol * std::max(d.maxCoeff(), 0.0);
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index best = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (d(piv[static_cast<size_t>(i)]) > d(piv[static_cast<size_t>(best)]))
        best = i;
    std::swap(piv[static_cast<size_t>(k)], piv[static_cast<size_t>(best)]);
    const Eigen::Index pk = piv[static_cast<size_t>(k)];
    if (d(pk) <= cutoff) break;
    const double lkk = std::sqrt(d(pk));
    L(pk, k) = lkk;
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const Eigen::Index pi = piv[static_cast<size_t>(i)];
      double v = S(pi, pk);
      for (Eigen::Index j = 0; j < k; ++j) v -= L(pi, j) * L(pk, j);
      L(pi, k) = v / lkk;
      d(pi) -= L(pi, k) * L(pi, k);
    }
    ++r;
  }
  return L.leftCols(r);
}

}  // namespace detail

/// Sw-IRKA: iteratively solve the two generalized Sylvester equations in the
/// assembled block space, orthonormalize and bi-orthogonalize the per-mode
/// bases, and re-project until the reduced spectrum stops moving.
inline ReductionResult swirka(const LssModel& model,
                              const std::vector<int>& orders,
                              const SwirkaOptions& opts = {}) {
  require_valid(model);
  detail::require_stable_modes(model);
  detail::check_orders(model, orders);
  const int M = model.mode_count();
  const BlockAssembly full = assemble_blocks(model);

  std::vector<Eigen::Index> r_off(1, 0);
  for (int r : orders) r_off.push_back(r_off.back() + r);
  const Eigen::Index r_total = r_off.back();

  // A_D is fixed: factor it once for both equation families.
  Eigen::ComplexSchur<detail::ComplexMatrix> schur_a(
      full.A_D.cast<std::complex<double>>());
  Eigen::ComplexSchur<detail::ComplexMatrix> schur_at(
      full.A_D.transpose().cast<std::complex<double>>());

  auto assemble_reduced = [&](const LssModel& red) {
    return assemble_blocks(red);
  };

  Rng rng(opts.seed);
  ReductionResult best;
  best.seed = opts.seed;
  double best_offset = std::numeric_limits<double>::infinity();

  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    LssModel red = detail::random_reduced_model(model, orders, rng);
    ReductionResult res;
    res.seed = opts.seed;
    res.restarts_used = attempt;
    Matrix X, Y;  // warm starts across outer iterations
    std::vector<std::complex<double>> prev_eigs =
        detail::sorted_eigenvalues(assemble_reduced(red).A_D);

    bool aborted = false;
    for (int it = 1; it <= opts.iter_max; ++it) {
      const BlockAssembly ra = assemble_reduced(red);
      try {
        SylvesterSolver solveX(
            schur_a,
            Eigen::ComplexSchur<detail::ComplexMatrix>(
                ra.A_D.transpose().cast<std::complex<double>>()),
            full.A_D.norm() + ra.A_D.norm());
        SylvesterSolver solveY(
            schur_at,
            Eigen::ComplexSchur<detail::ComplexMatrix>(
                ra.A_D.cast<std::complex<double>>()),
            full.A_D.norm() + ra.A_D.norm());
        X = detail::generalized_sylvester_fixed_point(
            solveX, full.K_offdiag, ra.K_offdiag.transpose(),
            full.B_D * ra.B_D.transpose(), X, opts.inner_tol, opts.inner_max);
        Y = detail::generalized_sylvester_fixed_point(
            solveY, full.K_offdiag.transpose(), ra.K_offdiag,
            full.C_D.transpose() * ra.C_D, Y, opts.inner_tol, opts.inner_max);
      } catch (const LssError&) {
        aborted = true;  // ill-posed or diverging inner solve: restart
        break;
      }

      res.offdiag_x_history.push_back(
          detail::offdiag_ratio(X, full.state_offset, r_off));
      res.offdiag_y_history.push_back(
          detail::offdiag_ratio(Y, full.state_offset, r_off));

      // Per-mode bases from the diagonal blocks; orth + bi-orthogonalize.
      std::vector<Matrix> Xq(static_cast<size_t>(M)), Yq(static_cast<size_t>(M));
      bool rank_ok = true;
      for (int q = 1; q <= M; ++q) {
        const Eigen::Index n_q = model.mode(q).n();
        const int r_q = orders[static_cast<size_t>(q - 1)];
        Matrix Xb = X.block(full.state_begin(q), r_off[static_cast<size_t>(q - 1)],
                            n_q, r_q);
        Matrix Yb = Y.block(full.state_begin(q), r_off[static_cast<size_t>(q - 1)],
                            n_q, r_q);
        Eigen::ColPivHouseholderQR<Matrix> qrx(Xb), qry(Yb);
        if (qrx.rank() < r_q || qry.rank() < r_q) {
          rank_ok = false;
          break;
        }
        Xq[static_cast<size_t>(q - 1)] =
            Eigen::HouseholderQR<Matrix>(Xb).householderQ() *
            Matrix::Identity(n_q, r_q);
        Yq[static_cast<size_t>(q - 1)] =
            Eigen::HouseholderQR<Matrix>(Yb).householderQ() *
            Matrix::Identity(n_q, r_q);
        const Matrix W = Xq[static_cast<size_t>(q - 1)].transpose() *
                         Yq[static_cast<size_t>(q - 1)];
        Eigen::JacobiSVD<Matrix> wsvd(W);
        const double smin = wsvd.singularValues().minCoeff();
        if (smin <= 0.0 ||
            wsvd.singularValues().maxCoeff() / smin > 1e12) {
          rank_ok = false;
          break;
        }
        Yq[static_cast<size_t>(q - 1)] =
            Yq[static_cast<size_t>(q - 1)] * W.inverse();
      }
      if (!rank_ok) {
        aborted = true;
        break;
      }

      // Petrov-Galerkin projection of every system matrix.
      LssModel next;
      next.name = model.name.empty() ? "reduced" : model.name + "-swirka";
      for (int q = 1; q <= M; ++q) {
        const Mode& md = model.mode(q);
        Mode rm;
        rm.label = q;
        rm.A = Yq[static_cast<size_t>(q - 1)].transpose() * md.A *
               Xq[static_cast<size_t>(q - 1)];
        rm.B = Yq[static_cast<size_t>(q - 1)].transpose() * md.B;
        rm.C = md.C * Xq[static_cast<size_t>(q - 1)];
        next.modes.push_back(std::move(rm));
      }
      for (int q = 1; q <= M; ++q)
        for (int s = 1; s <= M; ++s)
          if (q != s)
            next.couplings[{q, s}] = Yq[static_cast<size_t>(s - 1)].transpose() *
                                     model.coupling(q, s) *
                                     Xq[static_cast<size_t>(q - 1)];

      red = std::move(next);
      res.X = Xq;
      res.Y = Yq;
      res.iterations = it;

      const auto eigs = detail::sorted_eigenvalues(assemble_reduced(red).A_D);
      const double offset = detail::eigen_offset(eigs, prev_eigs);
      res.offset_history.push_back(offset);
      prev_eigs = eigs;
      if (offset <= opts.eps) {
        res.converged = true;
        break;
      }
    }

    if (!aborted) {
      res.reduced = red;
      res.reduced_stable =
          spectral_abscissa(assemble_reduced(red).A_D) < 0.0;
      if (res.converged) return res;
      const double last = res.offset_history.empty()
                              ? std::numeric_limits<double>::infinity()
                              : res.offset_history.back();
      if (last < best_offset) {
        best_offset = last;
        best = res;
      }
    }
  }
  if (best.reduced.modes.empty())
    throw DivergenceError(
        "Sw-IRKA failed on every restart (inner solves diverged)");
  return best;  // best non-converged iterate, converged == false
}

struct BtOptions {
  double gramian_tol = 1e-10;
  int gramian_iter_max = 500;
};

/// Gramian-based balanced truncation using the coupled switched Gramians:
/// per mode, balance P_q against Q_q and keep the r_q dominant directions.
inline ReductionResult balanced_truncation(const LssModel& model,
                                           const std::vector<int>& orders,
                                           const BtOptions& opts = {}) {
  require_valid(model);
  detail::require_stable_modes(model);
  detail::check_orders(model, orders);
  const int M = model.mode_count();

  GramianSet set =
      infinite_gramians_direct(model, opts.gramian_tol, opts.gramian_iter_max);
  if (!set.converged)
    throw DivergenceError("balanced truncation: coupled Gramians did not converge");

  ReductionResult res;
  res.converged = true;
  res.iterations = set.iterations;
  std::vector<Matrix> Xq(static_cast<size_t>(M)), Yq(static_cast<size_t>(M));
  for (int q = 1; q <= M; ++q) {
    const Matrix Lp = detail::pivoted_cholesky(set.P[static_cast<size_t>(q - 1)]);
    const Matrix Lq = detail::pivoted_cholesky(set.Q[static_cast<size_t>(q - 1)]);
    Eigen::JacobiSVD<Matrix> svd(Lq.transpose() * Lp,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector sv = svd.singularValues();
    res.singular_values.push_back(sv);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > sv(0) * 1e-13) ++rank;
    Eigen::Index r = orders[static_cast<size_t>(q - 1)];
    if (r > rank) {
      res.order_clipped = true;
      r = rank;
    }
    const Vector scale = sv.head(r).array().sqrt().inverse();
    Xq[static_cast<size_t>(q - 1)] =
        Lp * svd.matrixV().leftCols(r) * scale.asDiagonal();
    Yq[static_cast<size_t>(q - 1)] =
        Lq * svd.matrixU().leftCols(r) * scale.asDiagonal();
  }

  LssModel red;
  red.name = model.name.empty() ? "reduced" : model.name + "-bt";
  for (int q = 1; q <= M; ++q) {
    const Mode& md = model.mode(q);
    Mode rm;
    rm.label = q;
    rm.A = Yq[static_cast<size_t>(q - 1)].transpose() * md.A *
           Xq[static_cast<size_t>(q - 1)];
    rm.B = Yq[static_cast<size_t>(q - 1)].transpose() * md.B;
    rm.C = md.C * Xq[static_cast<size_t>(q - 1)];
    red.modes.push_back(std::move(rm));
  }
  for (int q = 1; q <= M; ++q)
    for (int s = 1; s <= M; ++s)
      if (q != s)
        red.couplings[{q, s}] = Yq[static_cast<size_t>(s - 1)].transpose() *
                                model.coupling(q, s) *
                                Xq[static_cast<size_t>(q - 1)];
  res.reduced = std::move(red);
  res.X = std::move(Xq);
  res.Y = std::move(Yq);
  res.reduced_stable =
      spectral_abscissa(assemble_blocks(res.reduced).A_D) < 0.0;
  return res;
}

/// Bilinear realization of a two-mode LSS with identity couplings and the
/// mode-indicator input u_hat (0 in mode 1, 1 in mode 2):
///   x' = A x + N2 x u_hat + B1 u + B3 u u_hat.
struct BilinearEmbedding {
  Matrix A;        // = A_1
  Matrix N1, N2, N3;  // N1 = N3 = 0, N2 = A_2 - A_1
  Matrix B1, B2, B3;  // B1 = B_1, B2 = 0, B3 = B_2 - B_1
  bool dims_equal = false;
  bool inputs_equal = false;
  bool couplings_identity = false;
  bool two_modes = false;
};

inline BilinearEmbedding bilinear_embed(const LssModel& model) {
  require_valid(model);
  BilinearEmbedding e;
  e.two_modes = model.mode_count() == 2;
  if (e.two_modes) {
    e.dims_equal = model.mode(1).n() == model.mode(2).n();
    e.inputs_equal = model.mode(1).m() == model.mode(2).m();
    if (e.dims_equal) {
      const Matrix I = Matrix::Identity(model.mode(1).n(), model.mode(1).n());
      e.couplings_identity = (model.coupling(1, 2) - I).norm() <= 1e-12 &&
                             (model.coupling(2, 1) - I).norm() <= 1e-12;
    }
  }
  if (!(e.two_modes && e.dims_equal && e.inputs_equal && e.couplings_identity)) {
    std::string why;
    if (!e.two_modes) why += " mode-count!=2";
    if (!e.dims_equal) why += " state-dims-differ";
    if (!e.inputs_equal) why += " input-dims-differ";
    if (!e.couplings_identity) why += " couplings-not-identity";
    throw ValidationError("bilinear embedding undefined:" + why);
  }
  const Mode& m1 = model.mode(1);
  const Mode& m2 = model.mode(2);
  e.A = m1.A;
  e.N1 = Matrix::Zero(m1.n(), m1.n());
  e.N2 = m2.A - m1.A;
  e.N3 = Matrix::Zero(m1.n(), m1.n());
  e.B1 = m1.B;
  e.B2 = Matrix::Zero(m1.n(), m1.m());
  e.B3 = m2.B - m1.B;
  return e;
}

}  // namespace lssmor
