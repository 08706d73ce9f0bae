#include <catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace lssmor;

TEST_CASE("H2 norm of the symmetric scalar model is sqrt(8/7)") {
  auto m = testutil::scalar_two_mode(0.5, 0.5);
  GramianOptions opts;
  opts.tol = 1e-12;
  auto ctrl = h2_norm(m, H2Method::Controllability, opts);
  auto obs = h2_norm(m, H2Method::Observability, opts);
  auto both = h2_norm(m, H2Method::Both, opts);
  CHECK(std::abs(ctrl.norm_sq - 8.0 / 7.0) < 1e-10);
  CHECK(std::abs(obs.norm_sq - 8.0 / 7.0) < 1e-10);
  CHECK(std::abs(both.norm_sq - 8.0 / 7.0) < 1e-10);
  CHECK(both.cross_gap < 1e-10);
  CHECK(ctrl.norm == Catch::Approx(std::sqrt(8.0 / 7.0)));
  // Series-based Gramians give the same value.
  opts.use_series = true;
  CHECK(std::abs(h2_norm(m, H2Method::Controllability, opts).norm_sq -
                 8.0 / 7.0) < 1e-10);
}

TEST_CASE("decoupled and degenerate cases") {
  auto m = testutil::scalar_two_mode(0.0, 0.0);
  CHECK(std::abs(h2_norm(m).norm_sq - 1.0) < 1e-12);  // 2 modes x trace 1/2

  auto z = testutil::scalar_two_mode(0.5, 0.5);
  z.mode(1).C.setZero();
  z.mode(2).C.setZero();
  CHECK(h2_norm(z).norm == 0.0);
}

TEST_CASE("difference system structure") {
  auto a = testutil::scalar_two_mode(0.5, 0.5);
  auto b = testutil::random_model(2, 1, 1, 3, 0.3);
  auto d = difference_system(a, b);
  REQUIRE(d.mode_count() == 2);
  CHECK(d.mode(1).n() == 3);
  CHECK(d.mode(1).A.topLeftCorner(1, 1) == a.mode(1).A);
  CHECK(d.mode(1).A.bottomRightCorner(2, 2) == b.mode(1).A);
  CHECK(d.mode(1).A.block(0, 1, 1, 2).isZero(0.0));
  CHECK(d.mode(1).C.leftCols(1) == a.mode(1).C);
  CHECK(d.mode(1).C.rightCols(2) == -b.mode(1).C);
  CHECK(d.coupling(1, 2).topLeftCorner(1, 1) == a.coupling(1, 2));
  CHECK(d.coupling(1, 2).bottomRightCorner(2, 2) == b.coupling(1, 2));

  LssModel bad = b;
  bad.mode(1).C = Matrix::Ones(2, 2);
  CHECK_THROWS_AS(difference_system(a, bad), ValidationError);
}

TEST_CASE("h2_error basics") {
  auto a = testutil::random_model(3, 2, 2, 5, 0.4);
  SECTION("identical models have zero error") {
    auto e = h2_error(a, a);
    CHECK(e.relative < 1e-12);
  }
  SECTION("scaled output of a decoupled model gives a known relative error") {
    // With zero couplings and C_b = (1 + eps) C_a the error system output is
    // -eps times the reference output, so the relative H2 error is eps.
    auto base = testutil::random_model(3, 2, 2, 6, 0.0);
    base.couplings[{1, 2}].setZero();
    base.couplings[{2, 1}].setZero();
    const double eps = 1e-3;
    LssModel scaled = base;
    scaled.mode(1).C *= 1.0 + eps;
    scaled.mode(2).C *= 1.0 + eps;
    auto e = h2_error(base, scaled);
    CHECK(std::abs(e.relative - eps) < 1e-6 * eps + 1e-12);
  }
  SECTION("absolute error is symmetric in the arguments") {
    auto b = testutil::random_model(3, 2, 2, 7, 0.4);
    auto eab = h2_error(a, b);
    auto eba = h2_error(b, a);
    CHECK(std::abs(eab.absolute.norm - eba.absolute.norm) <=
          1e-10 * std::max(1.0, eab.absolute.norm));
  }
}

TEST_CASE("Gauss-Laguerre rule integrates polynomials exactly") {
  std::vector<double> x, w;
  gauss_laguerre(5, x, w);
  REQUIRE(x.size() == 5);
  auto moment = [&](int k) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], k);
    return s;
  };
  // int_0^inf x^k e^{-x} dx = k!; exact up to degree 2n-1 = 9.
  double fact = 1.0;
  for (int k = 0; k <= 9; ++k) {
    if (k > 0) fact *= k;
    CHECK(std::abs(moment(k) - fact) <= 1e-10 * fact);
  }
}

TEST_CASE("admissible sequences enumeration") {
  auto seqs = admissible_sequences(2, 3);
  REQUIRE(seqs.size() == 2);  // 121 and 212
  CHECK(seqs[0] == std::vector<int>{1, 2, 1});
  CHECK(seqs[1] == std::vector<int>{2, 1, 2});
  CHECK(admissible_sequences(3, 2).size() == 6);
}

TEST_CASE("quadrature oracle matches the level partial sums") {
  SECTION("symmetric scalar model") {
    auto m = testutil::scalar_two_mode(0.5, 0.5);
    auto oracle = h2_quadrature_oracle(m, 3);
    // Partial sum of the level traces: 2 (1/2 + 1/16 + 1/128) = 1.140625.
    CHECK(std::abs(oracle.norm_sq - 1.140625) < 1e-8);
    CHECK(std::abs(oracle.norm_sq - h2_truncated_from_levels(m, 3)) < 1e-4);
    // Monotone in the truncation level, bounded by the full norm.
    const double k1 = h2_quadrature_oracle(m, 1).norm_sq;
    const double k2 = h2_quadrature_oracle(m, 2).norm_sq;
    CHECK(k1 < k2);
    CHECK(k2 < oracle.norm_sq);
    CHECK(oracle.norm_sq < h2_norm(m).norm_sq + 1e-10);
  }
  SECTION("random model with two-dimensional modes") {
    auto m = testutil::random_model(2, 1, 1, 9, 0.4);
    auto oracle = h2_quadrature_oracle(m, 3);
    CHECK(std::abs(oracle.norm_sq - h2_truncated_from_levels(m, 3)) <=
          1e-4 * std::max(1.0, oracle.norm_sq));
  }
  SECTION("guards") {
    auto big = testutil::random_model(4, 1, 1, 10, 0.3);
    CHECK_THROWS_AS(h2_quadrature_oracle(big, 2), ValidationError);
    auto m = testutil::scalar_two_mode(0.5, 0.5);
    CHECK_THROWS_AS(h2_quadrature_oracle(m, 0), ValidationError);
    CHECK_THROWS_AS(h2_quadrature_oracle(m, 4), ValidationError);
  }
}
