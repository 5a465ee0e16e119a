#pragma once

#include "kronsketch/solvers.hpp"
#include "kronsketch/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace kronsketch {

struct OracleSolution {
  DenseVector x_star;
  double opt_cost = 0.0;
};

/// Exact min ||(⊗ A_i) x - b||_2 by forming the Kronecker product. Desk scale only.
OracleSolution exact_kron_regression(std::span<const DenseMatrix> factors, const DenseVector& b);

/// Exact min ||A x - b||^2 + lambda ||L x||^2; opt_cost is the objective value.
OracleSolution exact_spline(std::span<const DenseMatrix> factors, const DenseVector& b, const SplineSpec& spec);

/// OPT_k = sqrt(sum_{i > k} sigma_i^2) of the explicit Kronecker product.
double exact_lowrank(std::span<const DenseMatrix> factors, Index k);

/// Row leverage scores ||U_i||^2 from the thin SVD; they sum to rank(A).
DenseVector leverage_scores(const DenseMatrix& A);

/// Leverage-score row sampling for Kronecker regression. The leverage score
/// of Kronecker row (i_1, ..., i_q) is the product of per-factor scores, so
/// rows are drawn factor by factor. m = ceil(c * d / (delta * eps^2)).
DenseVector leverage_sample_regression(std::span<const DenseMatrix> factors, const SparseVector& b, double eps,
                                       double delta, std::uint64_t seed, double c = 1.0);

/// Dynamic wrapper: entrywise factor updates in O(1), scores recomputed
/// lazily on the next query.
class LeverageBaseline {
 public:
  LeverageBaseline(std::vector<DenseMatrix> factors, SparseVector b);

  void update_entry(Index i, Index row, Index col, double delta);
  void update(Index i, const DenseMatrix& B);
  void update_label(const SparseVector& delta);
  DenseVector query(double eps, double delta, std::uint64_t seed, double c = 1.0);

  const std::vector<DenseMatrix>& factors() const { return factors_; }
  const SparseVector& label() const { return b_; }

 private:
  std::vector<DenseMatrix> factors_;
  SparseVector b_;
  std::vector<DenseVector> scores_;
  std::vector<bool> stale_;
};

}  // namespace kronsketch
