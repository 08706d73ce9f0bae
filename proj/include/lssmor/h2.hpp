#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lssmor/errors.hpp"
#include "lssmor/expm.hpp"
#include "lssmor/gramians.hpp"
#include "lssmor/model.hpp"

namespace lssmor {

enum class H2Method { Controllability, Observability, Both };

struct H2Result {
  double norm_sq = 0.0;
  double norm = 0.0;
  H2Method via = H2Method::Controllability;
  double cross_gap = 0.0;  // |ctrl - obs| / value when via == Both
  GramianSet gramians;
};

struct GramianOptions {
  double tol = 1e-10;
  int iter_max = 500;
  int H_max = 200;
  bool use_series = false;  // default is the direct coupled solve
};

namespace detail {

inline double clamp_norm_sq(double v) {
  if (v >= 0.0) return v;
  if (v >= -1e-12) return 0.0;
  throw IllPosedError("H2 norm squared came out negative (" +
                      std::to_string(v) + "), Gramian computation failed");
}

}  // namespace detail

/// H2 norm via the Gramian trace formulas
///   sum_q trace(C_q P_q C_q^T) = sum_q trace(B_q^T Q_q B_q).
inline H2Result h2_norm(const LssModel& model,
                        H2Method method = H2Method::Controllability,
                        const GramianOptions& opts = {}) {
  H2Result res;
  res.via = method;
  res.gramians = opts.use_series
                     ? infinite_gramians_series(model, opts.tol, opts.H_max)
                     : infinite_gramians_direct(model, opts.tol, opts.iter_max);
  double ctrl = 0.0, obs = 0.0;
  for (int q = 1; q <= model.mode_count(); ++q) {
    const Mode& md = model.mode(q);
    ctrl += (md.C * res.gramians.P[static_cast<size_t>(q - 1)] *
             md.C.transpose()).trace();
    obs += (md.B.transpose() * res.gramians.Q[static_cast<size_t>(q - 1)] *
            md.B).trace();
  }
  ctrl = detail::clamp_norm_sq(ctrl);
  obs = detail::clamp_norm_sq(obs);
  switch (method) {
    case H2Method::Controllability:
      res.norm_sq = ctrl;
      break;
    case H2Method::Observability:
      res.norm_sq = obs;
      break;
    case H2Method::Both: {
      res.norm_sq = 0.5 * (ctrl + obs);
      const double denom = std::max(res.norm_sq, 1e-300);
      res.cross_gap = std::abs(ctrl - obs) / denom;
      break;
    }
  }
  res.norm = std::sqrt(res.norm_sq);
  return res;
}

/// Error system of two mode-compatible models: per mode the states are
/// stacked, the outputs subtracted, and couplings act block-diagonally so
/// that switching hits both systems simultaneously.
inline LssModel difference_system(const LssModel& a, const LssModel& b) {
  require_valid(a);
  require_valid(b);
  if (a.mode_count() != b.mode_count())
    throw ValidationError("difference system: mode counts differ");
  LssModel d;
  d.name = "difference";
  const int M = a.mode_count();
  for (int q = 1; q <= M; ++q) {
    const Mode& ma = a.mode(q);
    const Mode& mb = b.mode(q);
    if (ma.m() != mb.m() || ma.p() != mb.p())
      throw ValidationError("difference system: mode " + std::to_string(q) +
                            " input/output dimensions differ");
    Mode md;
    md.label = q;
    md.A = Matrix::Zero(ma.n() + mb.n(), ma.n() + mb.n());
    md.A.topLeftCorner(ma.n(), ma.n()) = ma.A;
    md.A.bottomRightCorner(mb.n(), mb.n()) = mb.A;
    md.B = Matrix::Zero(ma.n() + mb.n(), ma.m());
    md.B.topRows(ma.n()) = ma.B;
    md.B.bottomRows(mb.n()) = mb.B;
    md.C = Matrix::Zero(ma.p(), ma.n() + mb.n());
    md.C.leftCols(ma.n()) = ma.C;
    md.C.rightCols(mb.n()) = -mb.C;
    d.modes.push_back(std::move(md));
  }
  for (int q = 1; q <= M; ++q) {
    for (int s = 1; s <= M; ++s) {
      if (q == s) continue;
      const Matrix Ka = a.coupling(q, s);
      const Matrix Kb = b.coupling(q, s);
      Matrix K = Matrix::Zero(Ka.rows() + Kb.rows(), Ka.cols() + Kb.cols());
      K.topLeftCorner(Ka.rows(), Ka.cols()) = Ka;
      K.bottomRightCorner(Kb.rows(), Kb.cols()) = Kb;
      d.couplings[{q, s}] = std::move(K);
    }
  }
  return d;
}

struct H2ErrorResult {
  H2Result absolute;   // H2 norm of the difference system
  double reference = 0.0;  // H2 norm of model_a
  double relative = 0.0;
};

inline H2ErrorResult h2_error(const LssModel& a, const LssModel& b,
                              const GramianOptions& opts = {}) {
  H2ErrorResult res;
  // The difference-system trace cancels two nearly equal large terms, so the
  // Gramian iteration needs a tighter stop than the caller's general-purpose
  // tolerance or the cancellation noise dominates small errors.
  GramianOptions diff_opts = opts;
  diff_opts.tol = std::min(opts.tol, 1e-12);
  res.absolute =
      h2_norm(difference_system(a, b), H2Method::Controllability, diff_opts);
  res.reference = h2_norm(a, H2Method::Controllability, opts).norm;
  res.relative = res.reference > 0.0 ? res.absolute.norm / res.reference
                                     : res.absolute.norm;
  return res;
}

/// Gauss-Laguerre rule for weight e^{-x} on [0, inf), by Golub-Welsch.
inline void gauss_laguerre(int n, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  Matrix J = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = 2.0 * i + 1.0;
    if (i + 1 < n) {
      J(i, i + 1) = i + 1.0;
      J(i + 1, i) = i + 1.0;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  nodes.resize(static_cast<size_t>(n));
  weights.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes[static_cast<size_t>(i)] = es.eigenvalues()(i);
    const double v = es.eigenvectors()(0, i);
    weights[static_cast<size_t>(i)] = v * v;  // mu0 = 1 for e^{-x}
  }
}

/// Enumerate all admissible switching sequences (consecutive modes distinct)
/// of length k over 1..M, in lexicographic order of the active-mode list.
inline std::vector<std::vector<int>> admissible_sequences(int M, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void()> rec = [&]() {
    if (static_cast<int>(cur.size()) == k) {
      out.push_back(cur);
      return;
    }
    for (int q = 1; q <= M; ++q) {
      if (!cur.empty() && cur.back() == q) continue;
      cur.push_back(q);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

/// Independent, definition-level H2 oracle: sums the kernel self inner
/// products over every admissible sequence of length <= k_max by tensorized
/// Gauss-Laguerre quadrature.  Deliberately restricted to tiny systems.
inline H2Result h2_quadrature_oracle(const LssModel& model, int k_max,
                                     int quad_points = 60) {
  require_valid(model);
  if (model.total_order() > 6)
    throw ValidationError("quadrature oracle is limited to total order <= 6");
  if (k_max < 1 || k_max > 3)
    throw ValidationError("quadrature oracle supports 1 <= k_max <= 3");

  std::vector<double> x, w;
  gauss_laguerre(quad_points, x, w);
  // Absorb the e^{-x} weight so plain integrals come out.
  std::vector<double> wexp(w.size());
  for (size_t i = 0; i < w.size(); ++i) wexp[i] = w[i] * std::exp(x[i]);

  const int M = model.mode_count();
  // Per-mode exponentials at every node.
  std::vector<std::vector<Matrix>> E(static_cast<size_t>(M));
  for (int q = 1; q <= M; ++q)
    for (double xi : x)
      E[static_cast<size_t>(q - 1)].push_back(expm(model.mode(q).A * xi));

  double total = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    for (const auto& seq : admissible_sequences(M, k)) {
      // seq lists active modes in order: seq[0] first, seq[k-1] last.
      std::function<void(int, const Matrix&, double)> rec =
          [&](int stage, const Matrix& acc, double wprod) {
            if (stage == k) {
              const Matrix h =
                  model.mode(seq[static_cast<size_t>(k - 1)]).C * acc;
              total += wprod * h.squaredNorm();
              return;
            }
            const int q = seq[static_cast<size_t>(stage)];
            for (size_t i = 0; i < x.size(); ++i) {
              Matrix next = E[static_cast<size_t>(q - 1)][i] * acc;
              if (stage + 1 < k)
                next = model.coupling(q, seq[static_cast<size_t>(stage + 1)]) *
                       next;
              rec(stage + 1, next, wprod * wexp[i]);
            }
          };
      rec(0, model.mode(seq[0]).B, 1.0);
    }
  }
  H2Result res;
  res.via = H2Method::Controllability;
  res.norm_sq = detail::clamp_norm_sq(total);
  res.norm = std::sqrt(res.norm_sq);
  return res;
}

/// Truncated H2 norm squared from the level-k Gramian partial sums,
/// sum_q trace(C_q (sum_{k<=H} P_q^(k)) C_q^T).
inline double h2_truncated_from_levels(const LssModel& model, int H) {
  auto levels = level_k_gramians(model, H);
  double total = 0.0;
  for (int q = 1; q <= model.mode_count(); ++q) {
    Matrix P = Matrix::Zero(model.mode(q).n(), model.mode(q).n());
    for (const auto& lv : levels) P += lv.P[static_cast<size_t>(q - 1)];
    total += (model.mode(q).C * P * model.mode(q).C.transpose()).trace();
  }
  return total;
}

}  // namespace lssmor
