#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace lssmor;

namespace {

// Transpose-swap dual: A -> A^T, B -> C^T, C -> B^T, K(q,s) -> K(s,q)^T.
// Its controllability Gramians equal the original observability Gramians.
LssModel dual_model(const LssModel& m) {
  LssModel d;
  d.name = m.name + "-dual";
  for (const auto& md : m.modes) {
    Mode dm;
    dm.label = md.label;
    dm.A = md.A.transpose();
    dm.B = md.C.transpose();
    dm.C = md.B.transpose();
    d.modes.push_back(std::move(dm));
  }
  for (const auto& [key, k] : m.couplings)
    d.couplings[{key.second, key.first}] = k.transpose();
  return d;
}

double min_eigenvalue(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("level recursion on the symmetric scalar model") {
  // A = -1, B = C = 1, K = 1/2 in both directions: level traces halve by a
  // factor of 8 each level: 1/2, 1/16, 1/128, ...
  auto m = testutil::scalar_two_mode(0.5, 0.5);
  auto levels = level_k_gramians(m, 3);
  REQUIRE(levels.size() == 3);
  const double expected[] = {0.5, 1.0 / 16.0, 1.0 / 128.0};
  for (int k = 0; k < 3; ++k) {
    for (int q = 0; q < 2; ++q) {
      CHECK(std::abs(levels[k].P[q](0, 0) - expected[k]) < 1e-14);
      CHECK(std::abs(levels[k].Q[q](0, 0) - expected[k]) < 1e-14);
    }
  }
}

TEST_CASE("infinite Gramians match a hand-solved 2x2 linear system") {
  // The coupled scalar equations reduce to
  //   -2 p1 + (1/4) p2 + 1 = 0
  //   (1/4) p1 - 2 p2 + 1 = 0
  // solved here independently as a 2x2 linear system (p1 = p2 = 4/7).
  Matrix lhs(2, 2);
  lhs << -2.0, 0.25, 0.25, -2.0;
  Vector rhs(2);
  rhs << -1.0, -1.0;
  const Vector oracle = lhs.fullPivLu().solve(rhs);
  CHECK(std::abs(oracle(0) - 4.0 / 7.0) < 1e-15);

  auto m = testutil::scalar_two_mode(0.5, 0.5);
  auto direct = infinite_gramians_direct(m, 1e-12);
  auto series = infinite_gramians_series(m, 1e-12);
  for (const auto& set : {direct, series}) {
    CHECK(set.converged);
    for (int q = 0; q < 2; ++q) {
      CHECK(std::abs(set.P[q](0, 0) - oracle(0)) < 1e-10);
      CHECK(std::abs(set.Q[q](0, 0) - oracle(1)) < 1e-10);
    }
    CHECK(set.max_residual() < 1e-10);
  }
  CHECK(direct.levels_used == -1);
  CHECK(series.levels_used > 1);
}

TEST_CASE("zero couplings reduce to the linear Gramians") {
  auto m = testutil::scalar_two_mode(0.0, 0.0);
  auto set = infinite_gramians_series(m);
  CHECK(set.converged);
  CHECK(set.levels_used == 1);
  auto [p1, q1] = linear_gramians(m, 1);
  CHECK((set.P[0] - p1).norm() < 1e-14);
  CHECK((set.Q[0] - q1).norm() < 1e-14);
  CHECK(set.max_residual() < 1e-12);
}

TEST_CASE("duality under the transpose swap") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    auto m = testutil::random_model(4, 2, 2, seed, 0.4);
    auto d = dual_model(m);
    auto sm = infinite_gramians_direct(m, 1e-12);
    auto sd = infinite_gramians_direct(d, 1e-12);
    REQUIRE(sm.converged);
    REQUIRE(sd.converged);
    for (int q = 0; q < 2; ++q) {
      CHECK((sm.Q[q] - sd.P[q]).norm() <= 1e-8 * std::max(1.0, sm.Q[q].norm()));
      CHECK((sm.P[q] - sd.Q[q]).norm() <= 1e-8 * std::max(1.0, sm.P[q].norm()));
    }
  }
}

TEST_CASE("series and direct methods agree on seeded models") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    auto m = testutil::random_model(4, 2, 2, seed, 0.5);
    REQUIRE(existence_check(m).satisfied);
    auto a = infinite_gramians_series(m, 1e-12);
    auto b = infinite_gramians_direct(m, 1e-12);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    for (int q = 0; q < 2; ++q) {
      CHECK((a.P[q] - b.P[q]).norm() <= 1e-8 * std::max(1.0, b.P[q].norm()));
      CHECK((a.Q[q] - b.Q[q]).norm() <= 1e-8 * std::max(1.0, b.Q[q].norm()));
      CHECK(min_eigenvalue(b.P[q]) > -1e-12 * b.P[q].norm());
      CHECK(min_eigenvalue(b.Q[q]) > -1e-12 * b.Q[q].norm());
    }
  }
}

TEST_CASE("coupled solution satisfies the full vectorized block equation") {
  // Independent oracle: with M = 2 the block-diagonal P = diag(P_1, P_2)
  // solves (I (x) A_D + A_D (x) I + Kbar (x) Kbar) vec(P) = -vec(B_D B_D^T)
  // exactly, and that Kronecker system has a unique solution.
  auto m = testutil::random_model(3, 1, 1, 42, 0.4);
  auto asmb = assemble_blocks(m);
  const Eigen::Index n = asmb.A_D.rows();
  Matrix op = Matrix::Zero(n * n, n * n);
  auto kron_acc = [&](const Matrix& l, const Matrix& r) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        op.block(i * n, j * n, n, n) += l(i, j) * r;
  };
  kron_acc(Matrix::Identity(n, n), asmb.A_D);  // I (x) A_D
  kron_acc(asmb.A_D, Matrix::Identity(n, n));  // A_D (x) I
  kron_acc(asmb.K_offdiag, asmb.K_offdiag);    // Kbar (x) Kbar
  const Matrix w = asmb.B_D * asmb.B_D.transpose();
  Vector rhs(n * n);
  for (Eigen::Index j = 0; j < n; ++j) rhs.segment(j * n, n) = -w.col(j);
  const Vector x = op.fullPivLu().solve(rhs);
  Matrix p_full(n, n);
  for (Eigen::Index j = 0; j < n; ++j) p_full.col(j) = x.segment(j * n, n);

  auto set = infinite_gramians_direct(m, 1e-13);
  REQUIRE(set.converged);
  CHECK((asmb.state_block(p_full, 1) - set.P[0]).norm() <=
        1e-9 * p_full.norm());
  CHECK((asmb.state_block(p_full, 2) - set.P[1]).norm() <=
        1e-9 * p_full.norm());
  // Off-diagonal blocks of the unique Kronecker solution vanish for M = 2.
  CHECK(p_full.block(0, 3, 3, 3).norm() <= 1e-9 * p_full.norm());
}

TEST_CASE("existence check on reference models") {
  auto m = testutil::scalar_two_mode(0.5, 0.5);
  auto rep = existence_check(m);
  CHECK(rep.alpha == Catch::Approx(1.0));
  CHECK(rep.beta == Catch::Approx(1.0));
  CHECK(rep.k_norm == Catch::Approx(0.5));
  CHECK(rep.bound == Catch::Approx(std::sqrt(2.0)));
  CHECK(rep.beta_reliable);
  CHECK(rep.satisfied);

  auto loose = testutil::scalar_two_mode(2.0, 2.0);
  auto rep2 = existence_check(loose);
  CHECK(rep2.k_norm == Catch::Approx(2.0));
  CHECK_FALSE(rep2.satisfied);

  auto decoupled = testutil::scalar_two_mode(0.0, 0.0);
  CHECK(existence_check(decoupled).k_norm == 0.0);
  CHECK(existence_check(decoupled).satisfied);
}

TEST_CASE("strong couplings are reported as divergent") {
  auto m = testutil::scalar_two_mode(3.0, 3.0);
  CHECK_THROWS_AS(infinite_gramians_series(m), DivergenceError);
  CHECK_THROWS_AS(infinite_gramians_direct(m), DivergenceError);
}

TEST_CASE("unstable modes are rejected") {
  auto m = testutil::scalar_two_mode(0.5, 0.5);
  m.mode(2).A(0, 0) = 0.5;
  CHECK_THROWS_AS(level_k_gramians(m, 2), IllPosedError);
  CHECK_THROWS_AS(infinite_gramians_direct(m), IllPosedError);
  CHECK_THROWS_AS(linear_gramians(m, 2), IllPosedError);
}
