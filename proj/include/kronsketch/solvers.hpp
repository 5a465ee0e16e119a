#pragma once

#include "kronsketch/tensor_tree.hpp"
#include "kronsketch/types.hpp"

#include <span>
#include <vector>

namespace kronsketch {

/// Penalty lambda * ||L x||^2 added to the regression objective.
struct SplineSpec {
  DenseMatrix L;  // p x d
  double lambda = 0.0;
};

/// Rank-k approximation C = (A_1 ⊗ ... ⊗ A_q) Uk^T Uk kept in factored form.
struct LowRankResult {
  std::vector<DenseMatrix> factors;
  DenseMatrix Uk;  // k x d, orthonormal rows
};

/// argmin_x ||M x - b_sketch|| with M the tree root.
DenseVector regression_query(const TensorTree& tree, const DenseVector& b_sketch);

/// argmin_x ||M x - b_sketch||^2 + lambda ||L x||^2, solved by orthogonal
/// factorization of the stacked system [M; sqrt(lambda) L].
DenseVector spline_query(const TensorTree& tree, const DenseVector& b_sketch, const SplineSpec& spec);

/// Generalized singular values gamma_i^2 of (A, L), i in [p], ascending.
DenseVector generalized_singular_values_sq(const DenseMatrix& A, const DenseMatrix& L);

/// sd_lambda(A, L) = sum_i 1 / (1 + lambda / gamma_i^2) + d - p.
double statistical_dimension(const DenseMatrix& A, const SplineSpec& spec);

/// Top-k right singular vectors of the tree root.
LowRankResult lowrank_query(const TensorTree& tree, Index k);

DenseMatrix materialize_lowrank(const LowRankResult& res);

/// ||C - A||_F for the factored result, without forming A.
double lowrank_cost(const LowRankResult& res);

/// ||A x - b||_2 for A = ⊗ factors.
double regression_cost(std::span<const DenseMatrix> factors, const DenseVector& x, const DenseVector& b);

/// ||A x - b||^2 + lambda ||L x||^2.
double spline_cost(std::span<const DenseMatrix> factors, const DenseVector& x, const DenseVector& b,
                   const SplineSpec& spec);

/// (d-1) x d first-difference operator, rows e_{i+1} - e_i.
DenseMatrix first_difference(Index d);

}  // namespace kronsketch
