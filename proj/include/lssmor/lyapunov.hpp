#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <string>

#include "lssmor/errors.hpp"
#include "lssmor/model.hpp"

namespace lssmor {

enum class SolveMethod { Auto, SchurDirect, VectorizedDirect };

struct SolveReport {
  double residual_fro = 0.0;  // ||residual||_F / ||rhs||_F
  SolveMethod method = SolveMethod::SchurDirect;
};

namespace detail {

using ComplexMatrix = Eigen::MatrixXcd;

inline void check_spectra_disjoint(const Eigen::VectorXcd& la,
                                   const Eigen::VectorXcd& lb,
                                   double scale) {
  const double tol = 1e-12 * scale;
  for (Eigen::Index i = 0; i < la.size(); ++i) {
    for (Eigen::Index j = 0; j < lb.size(); ++j) {
      if (std::abs(la(i) + lb(j)) < tol) {
        throw IllPosedError(
            "Sylvester operator is singular: eigenvalue pair (" +
            std::to_string(la(i).real()) + "+" + std::to_string(la(i).imag()) +
            "i, " + std::to_string(lb(j).real()) + "+" +
            std::to_string(lb(j).imag()) + "i) sums to ~0");
      }
    }
  }
}

}  // namespace detail

/// Factored solver for A X + X B + C = 0 with fixed (A, B) and varying C.
///
/// Bartels-Stewart style: both coefficient matrices are reduced to complex
/// Schur form once, every solve is a triangular sweep.  Throws IllPosedError
/// from the constructor when spectra of A and -B intersect (relative to
/// 1e-12 * (||A||_F + ||B||_F)).
class SylvesterSolver {
 public:
  SylvesterSolver(const Matrix& A, const Matrix& B) {
    if (A.rows() != A.cols() || B.rows() != B.cols())
      throw ValidationError("Sylvester coefficients must be square");
    schur_a_.compute(A.cast<std::complex<double>>());
    schur_b_.compute(B.cast<std::complex<double>>());
    if (schur_a_.info() != Eigen::Success || schur_b_.info() != Eigen::Success)
      throw IllPosedError("Schur decomposition failed");
    detail::check_spectra_disjoint(schur_a_.matrixT().diagonal(),
                                   schur_b_.matrixT().diagonal(),
                                   A.norm() + B.norm());
  }

  /// Reuse precomputed Schur factorizations (for solver reuse across
  /// iterations where one coefficient is fixed).
  SylvesterSolver(Eigen::ComplexSchur<detail::ComplexMatrix> schur_a,
                  Eigen::ComplexSchur<detail::ComplexMatrix> schur_b,
                  double norm_scale)
      : schur_a_(std::move(schur_a)), schur_b_(std::move(schur_b)) {
    detail::check_spectra_disjoint(schur_a_.matrixT().diagonal(),
                                   schur_b_.matrixT().diagonal(), norm_scale);
  }

  Matrix solve(const Matrix& C) const {
    const auto& Ta = schur_a_.matrixT();
    const auto& Tb = schur_b_.matrixT();
    const auto& U = schur_a_.matrixU();
    const auto& V = schur_b_.matrixU();
    const Eigen::Index n = Ta.rows(), m = Tb.rows();
    if (C.rows() != n || C.cols() != m)
      throw ValidationError("Sylvester right-hand side has wrong shape");

    detail::ComplexMatrix F = U.adjoint() * C.cast<std::complex<double>>() * V;
    detail::ComplexMatrix Y(n, m);
    detail::ComplexMatrix T = Ta;  // mutated diagonal per column
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXcd rhs = -F.col(j);
      if (j > 0) rhs.noalias() -= Y.leftCols(j) * Tb.block(0, j, j, 1);
      T.diagonal() = Ta.diagonal().array() + Tb(j, j);
      Y.col(j) = T.triangularView<Eigen::Upper>().solve(rhs);
    }
    return (U * Y * V.adjoint()).real();
  }

  Eigen::VectorXcd eigenvalues_a() const { return schur_a_.matrixT().diagonal(); }

 private:
  Eigen::ComplexSchur<detail::ComplexMatrix> schur_a_, schur_b_;
};

namespace detail {

inline Matrix solve_sylvester_vectorized(const Matrix& A, const Matrix& B,
                                         const Matrix& C) {
  const Eigen::Index n = A.rows(), m = B.rows();
  Eigen::EigenSolver<Matrix> ea(A, false), eb(B, false);
  check_spectra_disjoint(ea.eigenvalues(), eb.eigenvalues(), A.norm() + B.norm());
  // (I_m (x) A + B^T (x) I_n) vec(X) = -vec(C)
  Matrix op = Matrix::Zero(n * m, n * m);
  for (Eigen::Index j = 0; j < m; ++j)
    op.block(j * n, j * n, n, n) = A;
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      op.block(j * n, i * n, n, n).diagonal().array() += B(i, j);
  Vector rhs(n * m);
  for (Eigen::Index j = 0; j < m; ++j) rhs.segment(j * n, n) = -C.col(j);
  Vector x = op.fullPivLu().solve(rhs);
  Matrix X(n, m);
  for (Eigen::Index j = 0; j < m; ++j) X.col(j) = x.segment(j * n, n);
  return X;
}

inline double relative_residual(const Matrix& res, const Matrix& rhs) {
  const double denom = rhs.norm();
  return denom > 0.0 ? res.norm() / denom : res.norm();
}

}  // namespace detail

/// Solve A X + X B + C = 0.  Auto picks the vectorized Kronecker path for
/// max(n, m) <= 3 and the Schur path otherwise.
inline std::pair<Matrix, SolveReport> solve_sylvester(
    const Matrix& A, const Matrix& B, const Matrix& C,
    SolveMethod method = SolveMethod::Auto) {
  if (method == SolveMethod::Auto)
    method = std::max(A.rows(), B.rows()) <= 3 ? SolveMethod::VectorizedDirect
                                               : SolveMethod::SchurDirect;
  Matrix X;
  if (method == SolveMethod::VectorizedDirect) {
    X = detail::solve_sylvester_vectorized(A, B, C);
  } else {
    X = SylvesterSolver(A, B).solve(C);
  }
  SolveReport rep;
  rep.method = method;
  rep.residual_fro = detail::relative_residual(A * X + X * B + C, C);
  return {X, rep};
}

/// Solve A P + P A^T + W = 0 with symmetric W; P is symmetrized on return.
inline std::pair<Matrix, SolveReport> solve_lyapunov(
    const Matrix& A, const Matrix& W, SolveMethod method = SolveMethod::Auto) {
  auto [P, rep] = solve_sylvester(A, A.transpose(), W, method);
  P = ((P + P.transpose()) * 0.5).eval();
  rep.residual_fro =
      detail::relative_residual(A * P + P * A.transpose() + W, W);
  return {P, rep};
}

/// Lyapunov solve reusing a prefactored SylvesterSolver(A, A^T).
inline Matrix solve_lyapunov(const SylvesterSolver& solver, const Matrix& W) {
  Matrix P = solver.solve(W);
  return ((P + P.transpose()) * 0.5).eval();
}

}  // namespace lssmor
