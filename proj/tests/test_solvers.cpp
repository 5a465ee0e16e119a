#include "kronsketch/linalg.hpp"
#include "kronsketch/solvers.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace kronsketch;
using kronsketch::testing::rel_diff;
using kronsketch::testing::Rng;

namespace {

TreeConfig cfg(Index m, std::uint64_t seed) {
  TreeConfig c;
  c.c_family = BaseFamily::OSNAP;
  c.t_family = TensorFamily::TensorSRHT;
  c.m = m;
  c.seed = seed;
  return c;
}

std::vector<DenseMatrix> factors(Rng& rng, Index q, Index n, Index d) {
  std::vector<DenseMatrix> f;
  for (Index i = 0; i < q; ++i) f.push_back(rng.matrix(n, d));
  return f;
}

// gamma^2 from the CS decomposition: [A; L] = [Q1; Q2] R, mu = sv(Q2), gamma = sqrt(1 - mu^2) / mu.
DenseVector gsvd_cs_oracle(const DenseMatrix& A, const DenseMatrix& L) {
  DenseMatrix S(A.rows() + L.rows(), A.cols());
  S << A, L;
  Eigen::MatrixXd Sc = S;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Sc);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(S.rows(), S.cols());
  const Eigen::MatrixXd Q2 = Q.bottomRows(L.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q2);
  DenseVector mu = svd.singularValues();  // p values, all > 0 when rank(L) = p
  DenseVector g(mu.size());
  for (Index i = 0; i < mu.size(); ++i) g[i] = (1 - mu[i] * mu[i]) / (mu[i] * mu[i]);
  std::sort(g.begin(), g.end());
  return g;
}

}  // namespace

TEST_CASE("regression with identity factors returns the label") {
  Rng rng(1);
  const std::vector<DenseMatrix> f = {DenseMatrix::Identity(3, 3), DenseMatrix::Identity(2, 2)};
  const auto tree = TensorTree::initialize(f, cfg(40, 3));
  const DenseVector b = rng.vector(6);
  const DenseVector x = regression_query(tree, tree.sketch_vector(SparseVector::from_dense(b)));
  CHECK(rel_diff(x, b) <= 1e-10);
  CHECK(regression_cost(f, x, b) <= 1e-10);
}

TEST_CASE("regression recovers x when b lies in the column space") {
  Rng rng(2);
  const auto f = factors(rng, 3, 4, 2);
  const auto tree = TensorTree::initialize(f, cfg(60, 4));
  const DenseVector x0 = rng.vector(8);
  const DenseVector b = kron_matvec(f, x0);
  const DenseVector bs = tree.sketch_vector(SparseVector::from_dense(b));
  const DenseVector x = regression_query(tree, bs);
  CHECK(rel_diff(x, x0) <= 1e-9);
  // scale equivariance
  CHECK(rel_diff(regression_query(tree, DenseVector(3.0 * bs)), DenseVector(3.0 * x)) <= 1e-12);
}

TEST_CASE("regression rejects m < d and a wrong-length sketched label") {
  Rng rng(3);
  const auto tree = TensorTree::initialize(factors(rng, 2, 4, 3), cfg(5, 1));
  try {
    regression_query(tree, DenseVector::Zero(5));
    FAIL("expected configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Configuration);
  }
  const auto ok = TensorTree::initialize(factors(rng, 2, 4, 1), cfg(5, 1));
  CHECK_THROWS_AS(regression_query(ok, DenseVector::Zero(4)), Error);
}

TEST_CASE("spline with lambda = 0 and L = I is plain regression; huge lambda drives x to 0") {
  Rng rng(4);
  const auto f = factors(rng, 2, 5, 2);
  const auto tree = TensorTree::initialize(f, cfg(30, 5));
  const DenseVector bs = tree.sketch_vector(SparseVector::from_dense(rng.vector(25)));
  const DenseVector xr = regression_query(tree, bs);
  const DenseVector xs = spline_query(tree, bs, {DenseMatrix::Identity(4, 4), 0.0});
  CHECK(rel_diff(xs, xr) <= 1e-10);
  const DenseVector xbig = spline_query(tree, bs, {DenseMatrix::Identity(4, 4), 1e12});
  CHECK(xbig.norm() <= 1e-8 * xr.norm());
}

TEST_CASE("spline solution satisfies the sketched normal equations") {
  Rng rng(5);
  const auto f = factors(rng, 2, 4, 3);
  const auto tree = TensorTree::initialize(f, cfg(25, 6));
  const DenseVector bs = tree.sketch_vector(SparseVector::from_dense(rng.vector(16)));
  const SplineSpec spec{first_difference(9), 0.7};
  const DenseVector x = spline_query(tree, bs, spec);
  const DenseMatrix& M = tree.root();
  const DenseVector grad = M.transpose() * (M * x - bs) + spec.lambda * spec.L.transpose() * (spec.L * x);
  CHECK(grad.norm() <= 1e-9 * (M.transpose() * bs).norm());
}

TEST_CASE("spline errors: singular pencil, bad L, negative lambda") {
  Rng rng(6);
  // d = 4 > m = 2, L has 1 row: [M; L] cannot have rank 4
  const auto tree = TensorTree::initialize(factors(rng, 2, 3, 2), cfg(2, 7));
  try {
    spline_query(tree, DenseVector::Zero(2), {DenseMatrix::Ones(1, 4), 1.0});
    FAIL("expected regularization error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Regularization);
  }
  CHECK_THROWS_AS(spline_query(tree, DenseVector::Zero(2), {DenseMatrix::Ones(1, 3), 1.0}), Error);
  CHECK_THROWS_AS(spline_query(tree, DenseVector::Zero(2), {DenseMatrix::Ones(1, 4), -1.0}), Error);
}

TEST_CASE("statistical dimension hand value") {
  // gamma = (1, 2) -> 1/(1+1) + 1/(1+1/4) = 1.3
  DenseMatrix A = DenseMatrix::Zero(2, 2);
  A(0, 0) = 1;
  A(1, 1) = 2;
  CHECK(statistical_dimension(A, {DenseMatrix::Identity(2, 2), 1.0}) == doctest::Approx(1.3).epsilon(1e-12));
  const DenseVector g = generalized_singular_values_sq(A, DenseMatrix::Identity(2, 2));
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(4.0));
}

TEST_CASE("statistical dimension limits and monotonicity") {
  Rng rng(7);
  const DenseMatrix A = rng.matrix(12, 6);
  const DenseMatrix L = first_difference(6);
  CHECK(statistical_dimension(A, {L, 0.0}) == 6.0);
  CHECK(statistical_dimension(A, {L, 1e14}) == doctest::Approx(1.0).epsilon(1e-6));
  double prev = 6.0;
  for (double lam : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
    const double sd = statistical_dimension(A, {L, lam});
    CHECK(sd < prev);
    CHECK(sd > 1.0);
    prev = sd;
  }
}

TEST_CASE("generalized singular values match the CS-decomposition oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 2 + rng.below(6);
    const Index p = 1 + rng.below(d);
    const DenseMatrix A = rng.matrix(d + 3, d);
    const DenseMatrix L = rng.matrix(p, d);
    const DenseVector got = generalized_singular_values_sq(A, L);
    const DenseVector want = gsvd_cs_oracle(A, L);
    REQUIRE(got.size() == p);
    CHECK(rel_diff(got, want) <= 1e-8);
  }
  // first-difference penalty, the common case
  const DenseMatrix A = rng.matrix(10, 5);
  CHECK(rel_diff(generalized_singular_values_sq(A, first_difference(5)), gsvd_cs_oracle(A, first_difference(5))) <=
        1e-8);
}

TEST_CASE("generalized singular values reject rank-deficient inputs") {
  const DenseMatrix L = DenseMatrix::Ones(2, 3);  // rank 1 < p = 2
  try {
    generalized_singular_values_sq(DenseMatrix::Identity(3, 3), L);
    FAIL("expected rank error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RankDeficient);
  }
  // [A; L] rank deficient: A = 0 and L has one row in R^2
  CHECK_THROWS_AS(generalized_singular_values_sq(DenseMatrix::Zero(3, 2), DenseMatrix::Ones(1, 2)), Error);
}

TEST_CASE("low rank: k = d reproduces A, rank-k input is recovered exactly") {
  Rng rng(9);
  const auto f = factors(rng, 2, 4, 2);
  const auto tree = TensorTree::initialize(f, cfg(12, 10));
  const auto full = lowrank_query(tree, 4);
  CHECK(rel_diff(materialize_lowrank(full), kron_chain(f)) <= 1e-10);
  CHECK(lowrank_cost(full) == 0.0);

  // rank-1 factors make A rank 1
  std::vector<DenseMatrix> r1;
  for (int i = 0; i < 2; ++i) r1.push_back(rng.vector(4) * rng.vector(2).transpose());
  const auto t1 = TensorTree::initialize(r1, cfg(12, 11));
  const auto res = lowrank_query(t1, 1);
  CHECK(lowrank_cost(res) <= 1e-10 * kron_chain(r1).norm());
}

TEST_CASE("low rank: cost is nonincreasing in k and matches the materialized residual") {
  Rng rng(10);
  const auto f = factors(rng, 2, 5, 3);
  const auto tree = TensorTree::initialize(f, cfg(20, 12));
  const DenseMatrix A = kron_chain(f);
  double prev = A.norm();
  for (Index k = 1; k <= 9; ++k) {
    const auto res = lowrank_query(tree, k);
    CHECK(res.Uk.rows() == k);
    CHECK((res.Uk * res.Uk.transpose() - DenseMatrix::Identity(k, k)).norm() <= 1e-10);
    const double c = lowrank_cost(res);
    CHECK(c == doctest::Approx((A - materialize_lowrank(res)).norm()).epsilon(1e-8));
    CHECK(c <= prev + 1e-10);
    prev = c;
  }
  CHECK_THROWS_AS(lowrank_query(tree, 0), Error);
  CHECK_THROWS_AS(lowrank_query(tree, 10), Error);
}

TEST_CASE("first_difference") {
  const DenseMatrix L = first_difference(3);
  DenseMatrix want(2, 3);
  want << -1, 1, 0, 0, -1, 1;
  CHECK(L == want);
  CHECK_THROWS_AS(first_difference(1), Error);
}
