#include "kronsketch/oracle.hpp"

#include "kronsketch/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace kronsketch {

namespace {

DenseVector to_dense_label(std::span<const DenseMatrix> factors, const DenseVector& b) {
  Index n = 1;
  for (const auto& A : factors) n = checked_mul(n, A.rows());
  if (b.size() != n) throw Error(ErrorKind::Dimension, "label length != prod n_i");
  return b;
}

double lookup(const SparseVector& b, Index index) {
  const auto& e = b.entries();
  auto it = std::lower_bound(e.begin(), e.end(), index, [](const auto& p, Index i) { return p.first < i; });
  return (it != e.end() && it->first == index) ? it->second : 0.0;
}

DenseVector sample_regression(std::span<const DenseMatrix> factors, std::span<const DenseVector> scores,
                              const SparseVector& b, double eps, double delta, std::uint64_t seed, double c) {
  if (!(eps > 0 && eps < 1) || !(delta > 0 && delta < 1) || !(c > 0))
    throw Error(ErrorKind::Configuration, "leverage sampling needs eps, delta in (0, 1) and c > 0");
  const Index q = static_cast<Index>(factors.size());
  Index d = 1, n = 1;
  for (const auto& A : factors) {
    d = checked_mul(d, A.cols());
    n = checked_mul(n, A.rows());
  }
  if (b.size() != n) throw Error(ErrorKind::Dimension, "label length != prod n_i");

  // per-factor cumulative distributions
  std::vector<std::vector<double>> cdf(factors.size());
  std::vector<double> totals(factors.size());
  for (Index j = 0; j < q; ++j) {
    const DenseVector& s = scores[j];
    const double total = s.sum();
    if (!(total > 0)) throw Error(ErrorKind::Degenerate, "factor " + std::to_string(j) + " has zero leverage");
    totals[j] = total;
    double acc = 0;
    for (Index i = 0; i < s.size(); ++i) cdf[j].push_back(acc += s[i]);
  }

  const Index m = static_cast<Index>(std::ceil(c * static_cast<double>(d) / (delta * eps * eps)));
  std::mt19937_64 rng(seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  DenseMatrix SA(m, d);
  DenseVector Sb(m);
  std::vector<Index> pick(factors.size());
  for (Index r = 0; r < m; ++r) {
    double prob = 1.0;
    Index flat = 0;
    for (Index j = 0; j < q; ++j) {
      const double u = uniform() * totals[j];
      auto it = std::upper_bound(cdf[j].begin(), cdf[j].end(), u);
      Index i = std::min<Index>(static_cast<Index>(it - cdf[j].begin()), factors[j].rows() - 1);
      while (scores[j][i] <= 0 && i > 0) --i;
      pick[j] = i;
      prob *= scores[j][i] / totals[j];
      flat = flat * factors[j].rows() + i;
    }
    const double w = 1.0 / std::sqrt(static_cast<double>(m) * prob);
    DenseMatrix row = factors[0].row(pick[0]);
    for (Index j = 1; j < q; ++j) row = kron(row, factors[j].row(pick[j]));
    SA.row(r) = w * row;
    Sb[r] = w * lookup(b, flat);
  }
  return least_squares(SA, Sb).x;
}

}  // namespace

OracleSolution exact_kron_regression(std::span<const DenseMatrix> factors, const DenseVector& b) {
  const DenseVector y = to_dense_label(factors, b);
  const DenseMatrix A = kron_chain(factors);
  OracleSolution sol;
  sol.x_star = least_squares(A, y).x;
  sol.opt_cost = (A * sol.x_star - y).norm();
  return sol;
}

OracleSolution exact_spline(std::span<const DenseMatrix> factors, const DenseVector& b, const SplineSpec& spec) {
  const DenseVector y = to_dense_label(factors, b);
  const DenseMatrix A = kron_chain(factors);
  const Index n = A.rows(), d = A.cols(), p = spec.L.rows();
  if (spec.L.cols() != d) throw Error(ErrorKind::Dimension, "L must have d columns");
  DenseMatrix stacked(n + p, d);
  stacked.topRows(n) = A;
  stacked.bottomRows(p) = std::sqrt(spec.lambda) * spec.L;
  DenseVector rhs = DenseVector::Zero(n + p);
  rhs.head(n) = y;
  auto res = least_squares(stacked, rhs);
  if (res.rank_deficient) throw Error(ErrorKind::Regularization, "A^T A + lambda L^T L is singular");
  OracleSolution sol;
  sol.x_star = res.x;
  sol.opt_cost = (A * sol.x_star - y).squaredNorm() + spec.lambda * (spec.L * sol.x_star).squaredNorm();
  return sol;
}

double exact_lowrank(std::span<const DenseMatrix> factors, Index k) {
  if (k < 0) throw Error(ErrorKind::Configuration, "rank k must be nonnegative");
  const DenseVector s = thin_svd(kron_chain(factors)).S;
  if (k >= s.size()) return 0.0;
  return s.tail(s.size() - k).norm();
}

DenseVector leverage_scores(const DenseMatrix& A) {
  const ThinSvd svd = thin_svd(A);
  const double tol = svd.S.size() > 0
                         ? std::max(A.rows(), A.cols()) * 1e-14 * std::max(svd.S[0], 1e-300)
                         : 0.0;
  Index rank = 0;
  while (rank < svd.S.size() && svd.S[rank] > tol) ++rank;
  return svd.U.leftCols(rank).rowwise().squaredNorm();
}

DenseVector leverage_sample_regression(std::span<const DenseMatrix> factors, const SparseVector& b, double eps,
                                       double delta, std::uint64_t seed, double c) {
  if (factors.empty()) throw Error(ErrorKind::Dimension, "no factors");
  std::vector<DenseVector> scores;
  for (const auto& A : factors) scores.push_back(leverage_scores(A));
  return sample_regression(factors, scores, b, eps, delta, seed, c);
}

LeverageBaseline::LeverageBaseline(std::vector<DenseMatrix> factors, SparseVector b)
    : factors_(std::move(factors)), b_(std::move(b)), scores_(factors_.size()), stale_(factors_.size(), true) {
  if (factors_.empty()) throw Error(ErrorKind::Dimension, "no factors");
}

void LeverageBaseline::update_entry(Index i, Index row, Index col, double delta) {
  if (i < 0 || i >= static_cast<Index>(factors_.size())) throw Error(ErrorKind::IndexOutOfRange, "factor index");
  auto& A = factors_[i];
  if (row < 0 || row >= A.rows() || col < 0 || col >= A.cols())
    throw Error(ErrorKind::IndexOutOfRange, "entry index");
  A(row, col) += delta;
  stale_[i] = true;
}

void LeverageBaseline::update(Index i, const DenseMatrix& B) {
  if (i < 0 || i >= static_cast<Index>(factors_.size())) throw Error(ErrorKind::IndexOutOfRange, "factor index");
  auto& A = factors_[i];
  if (B.rows() != A.rows() || B.cols() != A.cols()) throw Error(ErrorKind::Dimension, "update shape mismatch");
  A += B;
  stale_[i] = true;
}

void LeverageBaseline::update_label(const SparseVector& delta) {
  if (delta.size() != b_.size()) throw Error(ErrorKind::Dimension, "label update length mismatch");
  for (const auto& [i, v] : delta.entries()) b_.add(i, v);
}

DenseVector LeverageBaseline::query(double eps, double delta, std::uint64_t seed, double c) {
  for (std::size_t j = 0; j < factors_.size(); ++j) {
    if (!stale_[j]) continue;
    scores_[j] = leverage_scores(factors_[j]);
    stale_[j] = false;
  }
  return sample_regression(factors_, scores_, b_, eps, delta, seed, c);
}

}  // namespace kronsketch
