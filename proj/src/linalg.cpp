#include "kronsketch/linalg.hpp"

#include "fft.hpp"

#include <algorithm>
#include <complex>
#include <limits>

namespace kronsketch {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::DimensionOverflow: return "dimension overflow";
    case ErrorKind::IndexOutOfRange: return "index out of range";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Regularization: return "regularization error";
    case ErrorKind::RankDeficient: return "rank deficiency";
    case ErrorKind::Degenerate: return "degenerate input";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

Index checked_mul(Index a, Index b) {
  if (a < 0 || b < 0) throw Error(ErrorKind::Dimension, "negative dimension");
  if (a != 0 && b > std::numeric_limits<Index>::max() / a)
    throw Error(ErrorKind::DimensionOverflow, std::to_string(a) + " x " + std::to_string(b));
  return a * b;
}

void SparseVector::add(Index index, double value) {
  if (index < 0 || index >= len_)
    throw Error(ErrorKind::IndexOutOfRange,
                "sparse index " + std::to_string(index) + " not in [0, " + std::to_string(len_) + ")");
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const auto& e, Index i) { return e.first < i; });
  if (it != entries_.end() && it->first == index)
    it->second += value;
  else
    entries_.insert(it, {index, value});
}

DenseVector SparseVector::to_dense() const {
  DenseVector v = DenseVector::Zero(len_);
  for (const auto& [i, x] : entries_) v[i] = x;
  return v;
}

SparseVector SparseVector::from_dense(const DenseVector& v) {
  SparseVector s(v.size());
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) s.entries_.emplace_back(i, v[i]);
  return s;
}

DenseMatrix kron_chain(std::span<const DenseMatrix> factors) {
  if (factors.empty()) throw Error(ErrorKind::Dimension, "kron_chain of an empty list");
  DenseMatrix acc = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) acc = kron(acc, factors[i]);
  return acc;
}

DenseVector kron_matvec(std::span<const DenseMatrix> factors, const DenseVector& x) {
  if (factors.empty()) throw Error(ErrorKind::Dimension, "kron_matvec of an empty list");
  Index d = 1;
  for (const auto& A : factors) d = checked_mul(d, A.cols());
  if (x.size() != d) throw Error(ErrorKind::Dimension, "kron_matvec: x has wrong length");

  // Contract one mode at a time. The working tensor is laid out as
  // (done rows) x (current mode) x (remaining cols), last index fastest.
  DenseVector cur = x;
  Index done = 1;
  Index rest = d;
  for (const auto& A : factors) {
    rest /= A.cols();
    DenseVector next(checked_mul(checked_mul(done, A.rows()), rest));
    for (Index a = 0; a < done; ++a) {
      Eigen::Map<const DenseMatrix> in(cur.data() + a * A.cols() * rest, A.cols(), rest);
      Eigen::Map<DenseMatrix> out(next.data() + a * A.rows() * rest, A.rows(), rest);
      out.noalias() = A * in;
    }
    cur.swap(next);
    done *= A.rows();
  }
  return cur;
}

DenseVector circular_convolve(const DenseVector& u, const DenseVector& v) {
  if (u.size() != v.size()) throw Error(ErrorKind::Dimension, "circular_convolve length mismatch");
  const Index s = u.size();
  if (s == 0) return DenseVector();
  detail::Spectrum fu, fv, out;
  detail::Spectrum cu(u.data(), u.data() + s), cv(v.data(), v.data() + s);
  detail::fft_forward(fu, cu);
  detail::fft_forward(fv, cv);
  for (Index i = 0; i < s; ++i) fu[i] *= fv[i];
  detail::fft_inverse(out, fu);
  DenseVector r(s);
  for (Index i = 0; i < s; ++i) r[i] = out[i].real();
  return r;
}

LeastSquaresResult least_squares(const DenseMatrix& M, const DenseVector& y) {
  if (M.rows() != y.size()) throw Error(ErrorKind::Dimension, "least_squares: rows of M != len(y)");
  Eigen::MatrixXd Mc = M;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Mc);
  LeastSquaresResult res;
  res.rank = cod.rank();
  res.rank_deficient = res.rank < M.cols();
  res.x = cod.solve(y);
  return res;
}

ThinSvd thin_svd(const DenseMatrix& M) {
  Eigen::MatrixXd Mc = M;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Mc, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

DenseVector sym_generalized_eigs(const DenseMatrix& P, const DenseMatrix& Q) {
  if (P.rows() != P.cols() || Q.rows() != Q.cols() || P.rows() != Q.rows())
    throw Error(ErrorKind::Dimension, "sym_generalized_eigs: P and Q must be square and equal size");
  Eigen::MatrixXd Pc = P, Qc = Q;
  Eigen::LLT<Eigen::MatrixXd> llt(Qc);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Regularization,
                "Q is not positive definite; regularize the pencil or check the rank condition");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Pc, Qc, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success)
    throw Error(ErrorKind::Regularization, "generalized eigensolve failed");
  DenseVector mu = ges.eigenvalues().reverse();
  return mu;
}

}  // namespace kronsketch
