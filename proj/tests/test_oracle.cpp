#include "kronsketch/linalg.hpp"
#include "kronsketch/oracle.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace kronsketch;
using kronsketch::testing::rel_diff;
using kronsketch::testing::Rng;

TEST_CASE("exact regression: identity, column-space label, residual orthogonality") {
  Rng rng(1);
  const std::vector<DenseMatrix> eye = {DenseMatrix::Identity(2, 2), DenseMatrix::Identity(3, 3)};
  const DenseVector b = rng.vector(6);
  const auto s = exact_kron_regression(eye, b);
  CHECK(rel_diff(s.x_star, b) <= 1e-14);
  CHECK(s.opt_cost <= 1e-14);

  const std::vector<DenseMatrix> f = {rng.matrix(4, 2), rng.matrix(3, 2)};
  const DenseMatrix A = kron_chain(f);
  const DenseVector x0 = rng.vector(4);
  CHECK(rel_diff(exact_kron_regression(f, DenseVector(A * x0)).x_star, x0) <= 1e-10);

  const DenseVector y = rng.vector(12);
  const auto g = exact_kron_regression(f, y);
  const DenseVector r = A * g.x_star - y;
  CHECK((A.transpose() * r).norm() <= 1e-10 * y.norm());
  CHECK(g.opt_cost == doctest::Approx(r.norm()).epsilon(1e-12));
  CHECK_THROWS_AS(exact_kron_regression(f, rng.vector(11)), Error);
}

TEST_CASE("exact spline: A = L = I, lambda = 1 halves the label") {
  Rng rng(2);
  const std::vector<DenseMatrix> f = {DenseMatrix::Identity(4, 4)};
  const DenseVector b = rng.vector(4);
  const auto s = exact_spline(f, b, {DenseMatrix::Identity(4, 4), 1.0});
  CHECK(rel_diff(s.x_star, DenseVector(b / 2)) <= 1e-14);
  CHECK(s.opt_cost == doctest::Approx(b.squaredNorm() / 2).epsilon(1e-13));
  CHECK(spline_cost(f, s.x_star, b, {DenseMatrix::Identity(4, 4), 1.0}) == doctest::Approx(s.opt_cost));
}

TEST_CASE("exact low rank: k = 0 gives the Frobenius norm; diag(3,2,1), k = 1 gives sqrt 5") {
  Rng rng(3);
  const std::vector<DenseMatrix> f = {rng.matrix(3, 2), rng.matrix(2, 2)};
  CHECK(exact_lowrank(f, 0) == doctest::Approx(kron_chain(f).norm()).epsilon(1e-13));
  CHECK(exact_lowrank(f, 4) <= 1e-12);
  DenseMatrix D = DenseMatrix::Zero(3, 3);
  D.diagonal() << 3, 2, 1;
  const std::vector<DenseMatrix> one = {D};
  CHECK(exact_lowrank(one, 1) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
  CHECK(exact_lowrank(one, 2) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("leverage scores: hand examples and the Kronecker product law") {
  DenseMatrix ones = DenseMatrix::Ones(2, 1);
  const DenseVector l1 = leverage_scores(ones);
  CHECK(l1[0] == doctest::Approx(0.5));
  CHECK(l1[1] == doctest::Approx(0.5));
  CHECK(rel_diff(leverage_scores(DenseMatrix::Identity(3, 3)), DenseVector::Ones(3)) <= 1e-14);
  DenseMatrix e = DenseMatrix::Zero(3, 1);
  e(1, 0) = 5;
  const DenseVector le = leverage_scores(e);
  CHECK(le[0] == 0.0);
  CHECK(le[1] == doctest::Approx(1.0));

  Rng rng(4);
  const DenseMatrix A = rng.matrix(5, 2), B = rng.matrix(4, 3);
  const DenseVector lA = leverage_scores(A), lB = leverage_scores(B);
  CHECK(lA.sum() == doctest::Approx(2.0));
  CHECK(lB.sum() == doctest::Approx(3.0));
  const DenseVector lAB = leverage_scores(kron(A, B));
  CHECK(rel_diff(lAB, DenseVector(kron(DenseMatrix(lA), DenseMatrix(lB)))) <= 1e-10);

  // rank-deficient input: scores sum to the rank
  DenseMatrix R(4, 2);
  R.col(0) = rng.vector(4);
  R.col(1) = 2 * R.col(0);
  CHECK(leverage_scores(R).sum() == doctest::Approx(1.0));
}

TEST_CASE("leverage sampling: exact on consistent systems, near-optimal otherwise") {
  Rng rng(5);
  const std::vector<DenseMatrix> f = {rng.matrix(8, 2), rng.matrix(8, 2)};
  const DenseMatrix A = kron_chain(f);
  const DenseVector x0 = rng.vector(4);
  const DenseVector x = leverage_sample_regression(f, SparseVector::from_dense(DenseVector(A * x0)), 0.5, 0.1, 7);
  CHECK(rel_diff(x, x0) <= 1e-9);

  const DenseVector b = rng.vector(64);
  const double opt = exact_kron_regression(f, b).opt_cost;
  int ok = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const DenseVector xs = leverage_sample_regression(f, SparseVector::from_dense(b), 0.5, 0.1, s);
    if (regression_cost(f, xs, b) <= 1.5 * opt) ++ok;
  }
  CHECK(ok >= 18);
  CHECK(leverage_sample_regression(f, SparseVector::from_dense(b), 0.5, 0.1, 3) ==
        leverage_sample_regression(f, SparseVector::from_dense(b), 0.5, 0.1, 3));
}

TEST_CASE("leverage sampling errors") {
  const std::vector<DenseMatrix> f = {DenseMatrix::Zero(3, 1), DenseMatrix::Identity(2, 2)};
  try {
    leverage_sample_regression(f, SparseVector(6), 0.5, 0.1, 1);
    FAIL("expected degenerate error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Degenerate);
  }
  const std::vector<DenseMatrix> g = {DenseMatrix::Identity(2, 2)};
  CHECK_THROWS_AS(leverage_sample_regression(g, SparseVector(2), 0.0, 0.1, 1), Error);
  CHECK_THROWS_AS(leverage_sample_regression(g, SparseVector(3), 0.5, 0.1, 1), Error);
}

TEST_CASE("dynamic baseline tracks updates like a fresh instance") {
  Rng rng(6);
  std::vector<DenseMatrix> f = {rng.matrix(5, 2), rng.matrix(4, 2)};
  const DenseVector b = rng.vector(20);
  LeverageBaseline dyn(f, SparseVector::from_dense(b));
  const DenseVector before = dyn.query(0.5, 0.1, 9);

  const DenseMatrix B = rng.matrix(4, 2);
  dyn.update(1, B);
  dyn.update_entry(0, 2, 1, 0.75);
  SparseVector db(20);
  db.add(3, 1.5);
  dyn.update_label(db);

  f[1] += B;
  f[0](2, 1) += 0.75;
  DenseVector b2 = b;
  b2[3] += 1.5;
  LeverageBaseline fresh(f, SparseVector::from_dense(b2));
  CHECK(dyn.query(0.5, 0.1, 9) == fresh.query(0.5, 0.1, 9));
  CHECK(dyn.query(0.5, 0.1, 9) != before);
  CHECK(dyn.label().to_dense() == b2);

  CHECK_THROWS_AS(dyn.update(2, B), Error);
  CHECK_THROWS_AS(dyn.update_entry(0, 5, 0, 1.0), Error);
  CHECK_THROWS_AS(dyn.update(0, B), Error);
}
