#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

#include "lssmor/model.hpp"

namespace lssmor {

namespace detail {

// Diagonal Pade approximant of degree m for exp, evaluated at A.
// Returns (U, V) with r(A) = (V - U)^{-1} (V + U) solved by the caller.
inline void pade_uv(const Matrix& A, int m, Matrix& U, Matrix& V) {
  static const std::array<double, 4> b3 = {120, 60, 12, 1};
  static const std::array<double, 6> b5 = {30240, 15120, 3360, 420, 30, 1};
  static const std::array<double, 8> b7 = {17297280, 8648640, 1995840, 277200,
                                           25200, 1512, 56, 1};
  static const std::array<double, 10> b9 = {
      17643225600., 8821612800., 2075673600., 302702400., 30270240.,
      2162160.,     110880.,     3960.,       90.,        1.};
  static const std::array<double, 14> b13 = {
      64764752532480000., 32382376266240000., 7771770303897600.,
      1187353796428800.,  129060195264000.,   10559470521600.,
      670442572800.,      33522128640.,       1323241920.,
      40840800.,          960960.,            16380.,
      182.,               1.};

  const Eigen::Index n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = A * A;
  if (m == 13) {
    const Matrix A4 = A2 * A2;
    const Matrix A6 = A4 * A2;
    U = A * (A6 * (b13[13] * A6 + b13[11] * A4 + b13[9] * A2) + b13[7] * A6 +
             b13[5] * A4 + b13[3] * A2 + b13[1] * I);
    V = A6 * (b13[12] * A6 + b13[10] * A4 + b13[8] * A2) + b13[6] * A6 +
        b13[4] * A4 + b13[2] * A2 + b13[0] * I;
    return;
  }
  const double* b = m == 3 ? b3.data() : m == 5 ? b5.data() : m == 7 ? b7.data() : b9.data();
  U = Matrix::Zero(n, n);
  V = Matrix::Zero(n, n);
  Matrix Apow = I;  // A^(2k)
  for (int k = 0; 2 * k <= m; ++k) {
    V.noalias() += b[2 * k] * Apow;
    if (2 * k + 1 <= m) U.noalias() += b[2 * k + 1] * Apow;
    Apow = (Apow * A2).eval();
  }
  U = (A * U).eval();
}

}  // namespace detail

/// Matrix exponential by scaling-and-squaring with diagonal Pade
/// approximants (orders 3/5/7/9/13 chosen from the 1-norm).
inline Matrix expm(const Matrix& A) {
  const double nrm = A.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  const Eigen::Index n = A.rows();
  if (n == 0) return A;
  if (n == 1) return (Matrix(1, 1) << std::exp(A(0, 0))).finished();

  struct Theta {
    int m;
    double theta;
  };
  static const std::array<Theta, 4> low = {{{3, 1.495585217958292e-2},
                                            {5, 2.539398330063230e-1},
                                            {7, 9.504178996162932e-1},
                                            {9, 2.097847961257068e0}}};
  const double theta13 = 5.371920351148152;

  Matrix U, V;
  int squarings = 0;
  bool done = false;
  for (const auto& t : low) {
    if (nrm <= t.theta) {
      detail::pade_uv(A, t.m, U, V);
      done = true;
      break;
    }
  }
  Matrix As;
  if (!done) {
    squarings = std::max(0, static_cast<int>(
                                std::ceil(std::log2(nrm / theta13))));
    As = A / std::ldexp(1.0, squarings);
    detail::pade_uv(As, 13, U, V);
  }
  Matrix R = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) R = (R * R).eval();
  return R;
}

}  // namespace lssmor
