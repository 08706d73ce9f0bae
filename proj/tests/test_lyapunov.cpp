#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace lssmor;

TEST_CASE("scalar Lyapunov and Sylvester solutions") {
  // a p + p a + w = 0 with a = -1, w = 2  =>  p = 1.
  const Matrix a = Matrix::Constant(1, 1, -1.0);
  const Matrix w = Matrix::Constant(1, 1, 2.0);
  for (auto method : {SolveMethod::SchurDirect, SolveMethod::VectorizedDirect}) {
    auto [p, rep] = solve_lyapunov(a, w, method);
    CHECK(p(0, 0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(rep.residual_fro < 1e-14);
    CHECK(rep.method == method);
  }
  // a x + x b + c = 0 with a = -2, b = -3, c = 10  =>  x = 2.
  auto [x, rep] = solve_sylvester(Matrix::Constant(1, 1, -2.0),
                                  Matrix::Constant(1, 1, -3.0),
                                  Matrix::Constant(1, 1, 10.0));
  CHECK(x(0, 0) == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(rep.method == SolveMethod::VectorizedDirect);  // Auto, n <= 3
}

TEST_CASE("Auto method selection by size") {
  Rng rng(7);
  const Matrix a3 = testutil::random_normal_stable(rng, 3, -4.0, -1.0);
  const Matrix a4 = testutil::random_normal_stable(rng, 4, -4.0, -1.0);
  auto r3 = solve_lyapunov(a3, Matrix::Identity(3, 3));
  auto r4 = solve_lyapunov(a4, Matrix::Identity(4, 4));
  CHECK(r3.second.method == SolveMethod::VectorizedDirect);
  CHECK(r4.second.method == SolveMethod::SchurDirect);
}

TEST_CASE("seeded residuals and symmetry") {
  for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    Rng rng(seed);
    const int n = 5 + static_cast<int>(seed) * 7;  // up to 40
    Matrix a = testutil::random_matrix(rng, n, n);
    a -= Matrix::Identity(n, n) * (spectral_abscissa(a) + 1.0);
    const Matrix g = testutil::random_matrix(rng, n, 2);
    const Matrix w = g * g.transpose();
    auto [p, rep] = solve_lyapunov(a, w);
    CHECK(rep.residual_fro < 1e-10);
    CHECK((p - p.transpose()).norm() == 0.0);  // exactly symmetrized
    // A stable Lyapunov solution with PSD forcing is PSD.
    Eigen::SelfAdjointEigenSolver<Matrix> es(p);
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * p.norm());
  }
}

TEST_CASE("Schur and vectorized paths agree for tiny systems") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    const int n = 1 + static_cast<int>(seed % 3);
    const int m = 1 + static_cast<int>((seed / 3) % 3);
    Matrix a = testutil::random_matrix(rng, n, n) -
               3.0 * Matrix::Identity(n, n);
    Matrix b = testutil::random_matrix(rng, m, m) -
               3.0 * Matrix::Identity(m, m);
    const Matrix c = testutil::random_matrix(rng, n, m);
    auto [xs, rs] = solve_sylvester(a, b, c, SolveMethod::SchurDirect);
    auto [xv, rv] = solve_sylvester(a, b, c, SolveMethod::VectorizedDirect);
    CHECK((xs - xv).norm() <= 1e-12 * std::max(1.0, xv.norm()));
  }
}

TEST_CASE("singular Sylvester operator is rejected") {
  // A = diag(1, -1): eigenvalue pair 1 + (-1) = 0 makes A X + X A^T + W = 0
  // singular.
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  CHECK_THROWS_AS(SylvesterSolver(a, a.transpose()), IllPosedError);
  CHECK_THROWS_AS(
      solve_lyapunov(a, Matrix::Identity(2, 2), SolveMethod::VectorizedDirect),
      IllPosedError);
}

TEST_CASE("factored solver reuse matches one-shot solves") {
  Rng rng(11);
  const Matrix a = testutil::random_normal_stable(rng, 8, -3.0, -0.5);
  SylvesterSolver solver(a, a.transpose());
  for (int k = 0; k < 3; ++k) {
    const Matrix g = testutil::random_matrix(rng, 8, 3);
    const Matrix w = g * g.transpose();
    const Matrix p1 = solve_lyapunov(solver, w);
    auto [p2, rep] = solve_lyapunov(a, w, SolveMethod::SchurDirect);
    CHECK((p1 - p2).norm() <= 1e-12 * p2.norm());
  }
}

TEST_CASE("shape validation") {
  const Matrix a = Matrix::Constant(1, 1, -1.0);
  CHECK_THROWS_AS(SylvesterSolver(Matrix::Zero(1, 2), a), ValidationError);
  SylvesterSolver s(a, a);
  CHECK_THROWS_AS(s.solve(Matrix::Zero(2, 2)), ValidationError);
}
