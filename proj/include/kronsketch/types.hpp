#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kronsketch {

static constexpr auto DYN = Eigen::Dynamic;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, DYN, DYN, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, DYN, 1>;

using DenseMatrix = Matrix<double>;
using DenseVector = Vector<double>;
using Index = Eigen::Index;

enum class ErrorKind {
  Dimension,
  DimensionOverflow,
  IndexOutOfRange,
  Configuration,
  Regularization,
  RankDeficient,
  Degenerate,
  NonFinite,
  Parse,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure at a byte offset into the input.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : Error(ErrorKind::Parse, what + " (byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Sparse real vector, entries kept sorted by index with no duplicates.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(Index len) : len_(len) {}

  Index size() const noexcept { return len_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  const std::vector<std::pair<Index, double>>& entries() const noexcept { return entries_; }

  /// Adds `value` at `index`, merging with an existing entry.
  void add(Index index, double value);

  DenseVector to_dense() const;
  static SparseVector from_dense(const DenseVector& v);

 private:
  Index len_ = 0;
  std::vector<std::pair<Index, double>> entries_;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
  return x.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& x, const char* what) {
  if (!x.allFinite()) throw Error(ErrorKind::NonFinite, std::string(what) + " has non-finite entries");
}

/// a*b with overflow detection on the Index range.
Index checked_mul(Index a, Index b);

}  // namespace kronsketch
