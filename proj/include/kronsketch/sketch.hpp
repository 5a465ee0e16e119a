#pragma once

#include "kronsketch/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace kronsketch {

enum class BaseFamily { CountSketch, OSNAP, SRHT };
enum class TensorFamily { TensorSketch, TensorSRHT };

std::string_view to_string(BaseFamily f);
std::string_view to_string(TensorFamily f);
std::optional<BaseFamily> parse_base_family(std::string_view name);
std::optional<TensorFamily> parse_tensor_family(std::string_view name);

/// Seeded description of one draw of a base sketch R^{input_dim} -> R^{output_dim}.
struct BaseSketchSpec {
  BaseFamily family = BaseFamily::CountSketch;
  Index input_dim = 0;
  Index output_dim = 0;
  Index sparsity = 1;  // OSNAP nonzeros per column
  std::uint64_t seed = 0;

  friend bool operator==(const BaseSketchSpec&, const BaseSketchSpec&) = default;
};

/// Seeded description of a degree-two sketch R^{side_dim * side_dim} -> R^{output_dim}.
struct TensorSketchSpec {
  TensorFamily family = TensorFamily::TensorSketch;
  Index side_dim = 0;
  Index output_dim = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const TensorSketchSpec&, const TensorSketchSpec&) = default;
};

/// Sketch with a fixed list of signed nonzeros per input coordinate
/// (CountSketch and OSNAP).
struct HashedSketch {
  Index rows = 0;
  std::vector<Index> col_start;  // size cols + 1
  std::vector<Index> row_index;
  std::vector<double> value;

  Index cols() const { return static_cast<Index>(col_start.size()) - 1; }

  /// CountSketch with pinned hash h (0-based buckets) and signs.
  static HashedSketch count_sketch(std::span<const Index> buckets, std::span<const double> signs,
                                   Index rows);
  DenseMatrix apply(const DenseMatrix& A) const;
  DenseMatrix dense() const;
};

/// A base sketch realized from its spec: random structure drawn once, then
/// applied to any number of matrices or queried column by column.
class BaseSketch {
 public:
  explicit BaseSketch(const BaseSketchSpec& spec);

  const BaseSketchSpec& spec() const { return spec_; }
  DenseMatrix apply(const DenseMatrix& A) const;
  /// Column j of the sketch matrix.
  DenseVector column(Index j) const;
  DenseMatrix dense() const;

 private:
  BaseSketchSpec spec_;
  HashedSketch hashed_;
  // SRHT: sqrt(n_pad / m) * S * H * D with H orthonormal on the padded length.
  Index padded_ = 0;
  std::vector<double> signs_;
  std::vector<Index> sampled_;
};

/// A degree-two sketch realized from its spec.
class TensorPairSketch {
 public:
  explicit TensorPairSketch(const TensorSketchSpec& spec);

  const TensorSketchSpec& spec() const { return spec_; }
  /// Column (j1, j2) of the result, at index j1 * J2.cols() + j2, is the
  /// sketch of J1[:, j1] ⊗ J2[:, j2].
  DenseMatrix apply(const DenseMatrix& J1, const DenseMatrix& J2) const;
  DenseVector apply(const DenseVector& u, const DenseVector& v) const;
  DenseMatrix dense() const;

 private:
  TensorSketchSpec spec_;
  // TensorSketch
  std::vector<Index> h1_, h2_;
  std::vector<double> s1_, s2_;
  // TensorSRHT
  Index padded_ = 0;
  std::vector<double> d1_, d2_;
  std::vector<Index> pick1_, pick2_;
};

DenseMatrix apply_base(const BaseSketchSpec& spec, const DenseMatrix& A);
DenseMatrix apply_tensor_pair(const TensorSketchSpec& spec, const DenseMatrix& J1, const DenseMatrix& J2);
DenseMatrix materialize(const BaseSketchSpec& spec);
DenseMatrix materialize(const TensorSketchSpec& spec);

/// Power of 1/eps in the sketch-size rule: subspace embeddings need eps^-2,
/// approximate-matrix-product based guarantees (spline) need eps^-1.
enum class EpsPower { InverseSquare, Inverse };

/// Which dimension law to use for (OSNAP, TensorSRHT), the one pair that
/// admits both a q*dim^2 and a q^4*dim rule.
enum class DimLaw { Default, LinearInDim };

/// Sketch size for a (base, tensor) family pair:
///   CountSketch + TensorSketch : eps^-p * q   * dim^2 * (1/delta)
///   SRHT        + TensorSRHT   : eps^-p * q^4 * dim   * log(1/delta)
///   OSNAP       + TensorSRHT   : eps^-p * q   * dim^2 * log(1/delta)
/// scaled by c_factor and rounded up.
Index choose_m(BaseFamily c_family, TensorFamily t_family, double fundamental_dim, Index q, double eps,
               double delta, double c_factor = 1.0, EpsPower power = EpsPower::InverseSquare,
               DimLaw law = DimLaw::Default);

/// Deterministic 64-bit mixing used to derive child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace kronsketch
