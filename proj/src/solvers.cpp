#include "kronsketch/solvers.hpp"

#include "kronsketch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kronsketch {

DenseVector regression_query(const TensorTree& tree, const DenseVector& b_sketch) {
  const DenseMatrix& M = tree.root();
  if (b_sketch.size() != M.rows())
    throw Error(ErrorKind::Dimension, "sketched label has length " + std::to_string(b_sketch.size()) +
                                          ", expected m = " + std::to_string(M.rows()));
  if (M.rows() < M.cols())
    throw Error(ErrorKind::Configuration, "m = " + std::to_string(M.rows()) + " < d = " + std::to_string(M.cols()) +
                                              ": the sketch cannot embed the column space");
  return least_squares(M, b_sketch).x;
}

DenseVector spline_query(const TensorTree& tree, const DenseVector& b_sketch, const SplineSpec& spec) {
  const DenseMatrix& M = tree.root();
  const Index d = M.cols();
  if (b_sketch.size() != M.rows()) throw Error(ErrorKind::Dimension, "sketched label length != m");
  if (spec.L.cols() != d) throw Error(ErrorKind::Dimension, "L must have d = " + std::to_string(d) + " columns");
  if (!(spec.lambda >= 0)) throw Error(ErrorKind::Configuration, "lambda must be nonnegative");

  const Index m = M.rows(), p = spec.L.rows();
  DenseMatrix stacked(m + p, d);
  stacked.topRows(m) = M;
  stacked.bottomRows(p) = std::sqrt(spec.lambda) * spec.L;
  DenseVector rhs = DenseVector::Zero(m + p);
  rhs.head(m) = b_sketch;

  auto res = least_squares(stacked, rhs);
  if (res.rank_deficient)
    throw Error(ErrorKind::Regularization,
                "M^T M + lambda L^T L is singular; need rank([A; L]) = d with lambda > 0, or a full-rank sketch");
  return res.x;
}

DenseVector generalized_singular_values_sq(const DenseMatrix& A, const DenseMatrix& L) {
  const Index d = A.cols();
  const Index p = L.rows();
  if (L.cols() != d) throw Error(ErrorKind::Dimension, "A and L must have the same column count");
  if (p > d) throw Error(ErrorKind::Dimension, "L must have at most d rows");

  Eigen::MatrixXd Lc = L;
  Eigen::JacobiSVD<Eigen::MatrixXd> lsvd(Lc, Eigen::ComputeFullV);
  lsvd.setThreshold(1e-12);
  if (lsvd.rank() != p) throw Error(ErrorKind::RankDeficient, "rank(L) != p");
  DenseMatrix stacked(A.rows() + p, d);
  stacked << A, L;
  Eigen::MatrixXd Sc = stacked;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> sqr(Sc);
  sqr.setThreshold(1e-12);
  if (sqr.rank() != d) throw Error(ErrorKind::RankDeficient, "rank([A; L]) != d");

  // Split R^d into row(L) (Z) and null(L) (N), then eliminate the null-space
  // block of the pencil (A^T A, L^T L) through its Schur complement.
  const Eigen::MatrixXd V = lsvd.matrixV();
  const Eigen::MatrixXd Z = V.leftCols(p);
  const Eigen::MatrixXd N = V.rightCols(d - p);
  Eigen::MatrixXd AZ = A * Z;
  if (d > p) {
    Eigen::MatrixXd AN = A * N;
    Eigen::HouseholderQR<Eigen::MatrixXd> nqr(AN);
    const Eigen::MatrixXd Q = nqr.householderQ() * Eigen::MatrixXd::Identity(AN.rows(), AN.cols());
    AZ -= Q * (Q.transpose() * AZ);
  }
  const DenseMatrix P = AZ.transpose() * AZ;
  const Eigen::MatrixXd LZ = L * Z;
  const DenseMatrix Qm = LZ.transpose() * LZ;
  DenseVector g = sym_generalized_eigs(P, Qm).reverse();
  return g.cwiseMax(0.0);
}

double statistical_dimension(const DenseMatrix& A, const SplineSpec& spec) {
  if (!(spec.lambda >= 0)) throw Error(ErrorKind::Configuration, "lambda must be nonnegative");
  const DenseVector g = generalized_singular_values_sq(A, spec.L);
  const Index d = A.cols(), p = spec.L.rows();
  double sd = static_cast<double>(d - p);
  for (Index i = 0; i < g.size(); ++i) {
    if (spec.lambda == 0.0)
      sd += 1.0;
    else if (g[i] > 0.0)
      sd += 1.0 / (1.0 + spec.lambda / g[i]);
  }
  return sd;
}

LowRankResult lowrank_query(const TensorTree& tree, Index k) {
  const DenseMatrix& M = tree.root();
  if (k < 1 || k > M.cols())
    throw Error(ErrorKind::Configuration, "rank k = " + std::to_string(k) + " not in [1, d = " +
                                              std::to_string(M.cols()) + "]");
  if (k > M.rows()) throw Error(ErrorKind::Configuration, "rank k exceeds sketch size m");
  const ThinSvd svd = thin_svd(M);
  return {tree.factors(), svd.V.leftCols(k).transpose()};
}

DenseMatrix materialize_lowrank(const LowRankResult& res) {
  const DenseMatrix A = kron_chain(res.factors);
  if (res.Uk.cols() != A.cols()) throw Error(ErrorKind::Dimension, "Uk has wrong column count");
  const DenseMatrix AU = A * res.Uk.transpose();
  return AU * res.Uk;
}

double lowrank_cost(const LowRankResult& res) {
  const Index d = res.Uk.cols(), k = res.Uk.rows();
  if (k >= d) return 0.0;
  // ||A (I - Uk^T Uk)||_F = ||A W||_F with W an orthonormal basis of the complement.
  Eigen::MatrixXd Ut = res.Uk.transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Ut);
  const Eigen::MatrixXd Q = qr.householderQ();
  double sq = 0.0;
  for (Index j = k; j < d; ++j) {
    const DenseVector w = Q.col(j);
    sq += kron_matvec(res.factors, w).squaredNorm();
  }
  return std::sqrt(sq);
}

double regression_cost(std::span<const DenseMatrix> factors, const DenseVector& x, const DenseVector& b) {
  return (kron_matvec(factors, x) - b).norm();
}

double spline_cost(std::span<const DenseMatrix> factors, const DenseVector& x, const DenseVector& b,
                   const SplineSpec& spec) {
  const double r = (kron_matvec(factors, x) - b).squaredNorm();
  return r + spec.lambda * (spec.L * x).squaredNorm();
}

DenseMatrix first_difference(Index d) {
  if (d < 2) throw Error(ErrorKind::Dimension, "first_difference needs d >= 2");
  DenseMatrix L = DenseMatrix::Zero(d - 1, d);
  for (Index i = 0; i + 1 < d; ++i) {
    L(i, i) = -1.0;
    L(i, i + 1) = 1.0;
  }
  return L;
}

}  // namespace kronsketch
