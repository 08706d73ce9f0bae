#pragma once

#include <cstdint>

#include "lssmor/lssmor.hpp"

namespace testutil {

using lssmor::LssModel;
using lssmor::Matrix;
using lssmor::Mode;
using lssmor::Vector;

/// Two scalar modes A = -1, B = C = 1 with both couplings k.
inline LssModel scalar_two_mode(double k12, double k21) {
  LssModel m;
  m.name = "scalar";
  for (int q = 1; q <= 2; ++q) {
    Mode md;
    md.label = q;
    md.A = Matrix::Constant(1, 1, -1.0);
    md.B = Matrix::Constant(1, 1, 1.0);
    md.C = Matrix::Constant(1, 1, 1.0);
    m.modes.push_back(md);
  }
  m.couplings[{1, 2}] = Matrix::Constant(1, 1, k12);
  m.couplings[{2, 1}] = Matrix::Constant(1, 1, k21);
  return m;
}

inline Matrix random_matrix(lssmor::Rng& rng, Eigen::Index rows,
                            Eigen::Index cols) {
  Matrix g(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

/// Normal (orthogonally diagonalizable) stable matrix with eigenvalues drawn
/// from [lo, hi] (both negative), so the existence bound uses beta = 1.
inline Matrix random_normal_stable(lssmor::Rng& rng, int n, double lo,
                                   double hi) {
  Matrix g = random_matrix(rng, n, n);
  Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ() *
             Matrix::Identity(n, n);
  Vector d(n);
  for (int i = 0; i < n; ++i) d(i) = rng.uniform(lo, hi);
  return q * d.asDiagonal() * q.transpose();
}

/// Random two-mode model with couplings scaled to a fraction of the
/// sufficient existence bound, so the coupled Gramians are guaranteed.
inline LssModel random_model(int n, int m, int p, uint64_t seed,
                             double coupling_frac) {
  lssmor::Rng rng(seed);
  LssModel model;
  double abscissa = -1e300;
  for (int q = 1; q <= 2; ++q) {
    Mode md;
    md.label = q;
    md.A = random_normal_stable(rng, n, -5.0, -1.0);
    md.B = random_matrix(rng, n, m);
    md.C = random_matrix(rng, p, n);
    abscissa = std::max(abscissa, lssmor::spectral_abscissa(md.A));
    model.modes.push_back(std::move(md));
  }
  const double bound = std::sqrt(-2.0 * abscissa);  // beta = 1 for normal A_D
  for (int q = 1; q <= 2; ++q) {
    const int s = 3 - q;
    Matrix k = random_matrix(rng, n, n);
    Eigen::JacobiSVD<Matrix> svd(k);
    k *= coupling_frac * bound / svd.singularValues().maxCoeff();
    model.couplings[{q, s}] = k;
  }
  return model;
}

}  // namespace testutil
