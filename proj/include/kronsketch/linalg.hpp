#pragma once

#include "kronsketch/types.hpp"

#include <cmath>
#include <span>

namespace kronsketch {

/// Kronecker product in block order: (A ⊗ B) has blocks a_ij * B, so the row
/// index of B varies fastest: (A ⊗ B)(i1*B.rows() + i2, j1*B.cols() + j2) = A(i1,j1) * B(i2,j2).
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& A,
                                       const Eigen::MatrixBase<DerivedB>& B) {
  using Scalar = typename DerivedA::Scalar;
  const Index rows = checked_mul(A.rows(), B.rows());
  const Index cols = checked_mul(A.cols(), B.cols());
  Matrix<Scalar> out(rows, cols);
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return out;
}

/// Left-associated fold ((A1 ⊗ A2) ⊗ A3) ⊗ ...
DenseMatrix kron_chain(std::span<const DenseMatrix> factors);

/// (A1 ⊗ ... ⊗ Aq) x without forming the Kronecker product.
DenseVector kron_matvec(std::span<const DenseMatrix> factors, const DenseVector& x);

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

inline Index next_power_of_two(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Unnormalized in-place Walsh–Hadamard butterfly (entries of H are ±1).
template <typename Scalar>
void fwht_inplace(std::span<Scalar> v) {
  const auto n = static_cast<Index>(v.size());
  if (!is_power_of_two(n)) throw Error(ErrorKind::Dimension, "fwht length must be a power of two");
  for (Index h = 1; h < n; h <<= 1) {
    for (Index i = 0; i < n; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        const Scalar a = v[j];
        const Scalar b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

/// Unnormalized Walsh–Hadamard transform applied to every column of X at once.
template <typename Scalar>
void fwht_columns_inplace(Matrix<Scalar>& X) {
  const Index n = X.rows();
  if (!is_power_of_two(n)) throw Error(ErrorKind::Dimension, "fwht length must be a power of two");
  const Index c = X.cols();
  Scalar* data = X.data();  // row-major: row j is contiguous
  for (Index h = 1; h < n; h <<= 1) {
    for (Index i = 0; i < n; i += 2 * h) {
      for (Index j = i; j < i + h; ++j) {
        Scalar* a = data + j * c;
        Scalar* b = data + (j + h) * c;
        for (Index k = 0; k < c; ++k) {
          const Scalar x = a[k], y = b[k];
          a[k] = x + y;
          b[k] = x - y;
        }
      }
    }
  }
}

/// Orthonormal Walsh–Hadamard transform H v with H = H_unnormalized / sqrt(len).
template <typename Scalar>
Vector<Scalar> fwht(const Vector<Scalar>& v) {
  Vector<Scalar> out = v;
  fwht_inplace(std::span<Scalar>(out.data(), static_cast<std::size_t>(out.size())));
  out /= std::sqrt(static_cast<Scalar>(v.size()));
  return out;
}

/// result[r] = sum_j u[j] * v[(r - j) mod s], evaluated through the FFT.
DenseVector circular_convolve(const DenseVector& u, const DenseVector& v);

struct LeastSquaresResult {
  DenseVector x;
  Index rank = 0;
  bool rank_deficient = false;
};

/// Minimum-norm least-squares solution of min ||M x - y||.
LeastSquaresResult least_squares(const DenseMatrix& M, const DenseVector& y);

struct ThinSvd {
  DenseMatrix U;  // rows x r
  DenseVector S;  // r, nonincreasing
  DenseMatrix V;  // cols x r
};

ThinSvd thin_svd(const DenseMatrix& M);

/// Eigenvalues of the symmetric-definite pencil P x = mu Q x, sorted descending.
DenseVector sym_generalized_eigs(const DenseMatrix& P, const DenseMatrix& Q);

}  // namespace kronsketch
