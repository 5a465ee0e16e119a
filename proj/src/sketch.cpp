#include "kronsketch/sketch.hpp"

#include "kronsketch/linalg.hpp"

#include "fft.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <string>

namespace kronsketch {

namespace {

/// Seeded random stream; draws are fully specified here (no std
/// distributions) so a seed materializes the same sketch on every platform.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : engine_(mix_seed(seed, 0x5eed)) {}

  /// Uniform integer in [0, n).
  Index below(Index n) {
    const auto un = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % un;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return static_cast<Index>(r % un);
  }

  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
};

std::vector<Index> draw_buckets(SeedStream& rng, Index count, Index range) {
  std::vector<Index> out(static_cast<std::size_t>(count));
  for (auto& b : out) b = rng.below(range);
  return out;
}

std::vector<double> draw_signs(SeedStream& rng, Index count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (auto& s : out) s = rng.sign();
  return out;
}

void check_dims(Index input, Index output, const char* what) {
  if (input < 1 || output < 1)
    throw Error(ErrorKind::Configuration, std::string(what) + ": dimensions must be >= 1");
}

// Entry (a, b) of the unnormalized Hadamard matrix.
inline double hadamard_sign(Index a, Index b) {
  return (std::popcount(static_cast<std::uint64_t>(a & b)) & 1) ? -1.0 : 1.0;
}

using detail::Spectrum;

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ a);
  h = splitmix(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix(h ^ (c + 0x2545f4914f6cdd1dULL));
  return h;
}

std::string_view to_string(BaseFamily f) {
  switch (f) {
    case BaseFamily::CountSketch: return "countsketch";
    case BaseFamily::OSNAP: return "osnap";
    case BaseFamily::SRHT: return "srht";
  }
  return "?";
}

std::string_view to_string(TensorFamily f) {
  switch (f) {
    case TensorFamily::TensorSketch: return "tensorsketch";
    case TensorFamily::TensorSRHT: return "tensorsrht";
  }
  return "?";
}

std::optional<BaseFamily> parse_base_family(std::string_view name) {
  for (auto f : {BaseFamily::CountSketch, BaseFamily::OSNAP, BaseFamily::SRHT})
    if (to_string(f) == name) return f;
  return std::nullopt;
}

std::optional<TensorFamily> parse_tensor_family(std::string_view name) {
  for (auto f : {TensorFamily::TensorSketch, TensorFamily::TensorSRHT})
    if (to_string(f) == name) return f;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// HashedSketch

HashedSketch HashedSketch::count_sketch(std::span<const Index> buckets, std::span<const double> signs,
                                        Index rows) {
  if (buckets.size() != signs.size()) throw Error(ErrorKind::Dimension, "count_sketch: hash/sign length mismatch");
  HashedSketch s;
  s.rows = rows;
  s.col_start.resize(buckets.size() + 1);
  for (std::size_t j = 0; j < buckets.size(); ++j) {
    if (buckets[j] < 0 || buckets[j] >= rows) throw Error(ErrorKind::IndexOutOfRange, "count_sketch bucket");
    s.col_start[j] = static_cast<Index>(j);
    s.row_index.push_back(buckets[j]);
    s.value.push_back(signs[j]);
  }
  s.col_start.back() = static_cast<Index>(buckets.size());
  return s;
}

DenseMatrix HashedSketch::apply(const DenseMatrix& A) const {
  if (A.rows() != cols()) throw Error(ErrorKind::Dimension, "sketch input dimension != rows of A");
  DenseMatrix out = DenseMatrix::Zero(rows, A.cols());
  for (Index j = 0; j < cols(); ++j) {
    const auto row = A.row(j);
    if ((row.array() == 0.0).all()) continue;
    for (Index t = col_start[j]; t < col_start[j + 1]; ++t) out.row(row_index[t]) += value[t] * row;
  }
  return out;
}

DenseMatrix HashedSketch::dense() const {
  DenseMatrix out = DenseMatrix::Zero(rows, cols());
  for (Index j = 0; j < cols(); ++j)
    for (Index t = col_start[j]; t < col_start[j + 1]; ++t) out(row_index[t], j) += value[t];
  return out;
}

// ---------------------------------------------------------------------------
// BaseSketch

BaseSketch::BaseSketch(const BaseSketchSpec& spec) : spec_(spec) {
  check_dims(spec.input_dim, spec.output_dim, "base sketch");
  const Index n = spec.input_dim;
  const Index m = spec.output_dim;
  SeedStream rng(spec.seed);
  switch (spec.family) {
    case BaseFamily::CountSketch: {
      auto buckets = draw_buckets(rng, n, m);
      auto signs = draw_signs(rng, n);
      hashed_ = HashedSketch::count_sketch(buckets, signs, m);
      break;
    }
    case BaseFamily::OSNAP: {
      const Index s = spec.sparsity;
      if (s < 1 || s > m) throw Error(ErrorKind::Configuration, "OSNAP sparsity must lie in [1, m]");
      const double scale = 1.0 / std::sqrt(static_cast<double>(s));
      hashed_.rows = m;
      hashed_.col_start.reserve(static_cast<std::size_t>(n) + 1);
      std::vector<Index> pool(static_cast<std::size_t>(m));
      for (Index j = 0; j < n; ++j) {
        hashed_.col_start.push_back(static_cast<Index>(hashed_.row_index.size()));
        // s distinct rows by a partial Fisher-Yates shuffle
        std::iota(pool.begin(), pool.end(), Index{0});
        for (Index t = 0; t < s; ++t) {
          const Index pick = t + rng.below(m - t);
          std::swap(pool[t], pool[pick]);
          hashed_.row_index.push_back(pool[t]);
          hashed_.value.push_back(scale * rng.sign());
        }
      }
      hashed_.col_start.push_back(static_cast<Index>(hashed_.row_index.size()));
      break;
    }
    case BaseFamily::SRHT: {
      padded_ = next_power_of_two(n);
      signs_ = draw_signs(rng, padded_);
      sampled_.resize(static_cast<std::size_t>(m));
      if (m <= padded_) {
        std::vector<Index> pool(static_cast<std::size_t>(padded_));
        std::iota(pool.begin(), pool.end(), Index{0});
        for (Index t = 0; t < m; ++t) {
          const Index pick = t + rng.below(padded_ - t);
          std::swap(pool[t], pool[pick]);
          sampled_[t] = pool[t];
        }
      } else {
        // more rows than coordinates: sample with replacement
        for (auto& r : sampled_) r = rng.below(padded_);
      }
      break;
    }
  }
}

DenseMatrix BaseSketch::apply(const DenseMatrix& A) const {
  if (A.rows() != spec_.input_dim)
    throw Error(ErrorKind::Dimension, "apply_base: A has " + std::to_string(A.rows()) + " rows, sketch expects " +
                                          std::to_string(spec_.input_dim));
  if (spec_.family != BaseFamily::SRHT) return hashed_.apply(A);

  DenseMatrix X = DenseMatrix::Zero(padded_, A.cols());
  for (Index i = 0; i < A.rows(); ++i) X.row(i) = signs_[i] * A.row(i);
  fwht_columns_inplace(X);
  // sqrt(n_pad/m) * (H_unnormalized / sqrt(n_pad)) = H_unnormalized / sqrt(m)
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec_.output_dim));
  DenseMatrix out(spec_.output_dim, A.cols());
  for (Index r = 0; r < spec_.output_dim; ++r) out.row(r) = scale * X.row(sampled_[r]);
  return out;
}

DenseVector BaseSketch::column(Index j) const {
  if (j < 0 || j >= spec_.input_dim) throw Error(ErrorKind::IndexOutOfRange, "sketch column index");
  DenseVector c = DenseVector::Zero(spec_.output_dim);
  if (spec_.family != BaseFamily::SRHT) {
    for (Index t = hashed_.col_start[j]; t < hashed_.col_start[j + 1]; ++t) c[hashed_.row_index[t]] += hashed_.value[t];
    return c;
  }
  const double scale = signs_[j] / std::sqrt(static_cast<double>(spec_.output_dim));
  for (Index r = 0; r < spec_.output_dim; ++r) c[r] = scale * hadamard_sign(sampled_[r], j);
  return c;
}

DenseMatrix BaseSketch::dense() const {
  if (spec_.family != BaseFamily::SRHT) return hashed_.dense();
  DenseMatrix out(spec_.output_dim, spec_.input_dim);
  for (Index j = 0; j < spec_.input_dim; ++j) out.col(j) = column(j);
  return out;
}

// ---------------------------------------------------------------------------
// TensorPairSketch

TensorPairSketch::TensorPairSketch(const TensorSketchSpec& spec) : spec_(spec) {
  check_dims(spec.side_dim, spec.output_dim, "tensor sketch");
  SeedStream rng(spec.seed);
  const Index m = spec.side_dim;
  if (spec.family == TensorFamily::TensorSketch) {
    h1_ = draw_buckets(rng, m, spec.output_dim);
    s1_ = draw_signs(rng, m);
    h2_ = draw_buckets(rng, m, spec.output_dim);
    s2_ = draw_signs(rng, m);
  } else {
    padded_ = next_power_of_two(m);
    d1_ = draw_signs(rng, padded_);
    d2_ = draw_signs(rng, padded_);
    pick1_.resize(static_cast<std::size_t>(spec.output_dim));
    pick2_.resize(static_cast<std::size_t>(spec.output_dim));
    const Index cells = checked_mul(padded_, padded_);
    for (Index r = 0; r < spec.output_dim; ++r) {
      const Index c = rng.below(cells);
      pick1_[r] = c / padded_;
      pick2_[r] = c % padded_;
    }
  }
}

DenseMatrix TensorPairSketch::apply(const DenseMatrix& J1, const DenseMatrix& J2) const {
  const Index m = spec_.side_dim;
  if (J1.rows() != m || J2.rows() != m)
    throw Error(ErrorKind::Dimension, "apply_tensor_pair: inputs must have side_dim rows");
  const Index c1 = J1.cols(), c2 = J2.cols();
  const Index s = spec_.output_dim;
  DenseMatrix out(s, checked_mul(c1, c2));

  if (spec_.family == TensorFamily::TensorSRHT) {
    auto transform = [&](const DenseMatrix& J, const std::vector<double>& d) {
      DenseMatrix X = DenseMatrix::Zero(padded_, J.cols());
      for (Index i = 0; i < m; ++i) X.row(i) = d[i] * J.row(i);
      fwht_columns_inplace(X);
      return X;
    };
    const DenseMatrix X1 = transform(J1, d1_);
    const DenseMatrix X2 = transform(J2, d2_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(s));
    for (Index r = 0; r < s; ++r) {
      const auto a = X1.row(pick1_[r]);
      const auto b = X2.row(pick2_[r]);
      for (Index j1 = 0; j1 < c1; ++j1) out.row(r).segment(j1 * c2, c2) = (scale * a[j1]) * b;
    }
    return out;
  }

  // TensorSketch: count-sketch each column, then convolve via the FFT.
  auto spectra = [&](const DenseMatrix& J, const std::vector<Index>& h, const std::vector<double>& sg) {
    std::vector<Spectrum> out_spec(static_cast<std::size_t>(J.cols()));
    Spectrum buf(static_cast<std::size_t>(s));
    for (Index j = 0; j < J.cols(); ++j) {
      std::fill(buf.begin(), buf.end(), std::complex<double>(0.0));
      for (Index i = 0; i < m; ++i) buf[h[i]] += sg[i] * J(i, j);
      detail::fft_forward(out_spec[j], buf);
    }
    return out_spec;
  };
  const auto F1 = spectra(J1, h1_, s1_);
  const auto F2 = spectra(J2, h2_, s2_);
  Spectrum prod(static_cast<std::size_t>(s)), time;
  for (Index j1 = 0; j1 < c1; ++j1) {
    for (Index j2 = 0; j2 < c2; ++j2) {
      for (Index r = 0; r < s; ++r) prod[r] = F1[j1][r] * F2[j2][r];
      detail::fft_inverse(time, prod);
      const Index col = j1 * c2 + j2;
      for (Index r = 0; r < s; ++r) out(r, col) = time[r].real();
    }
  }
  return out;
}

DenseVector TensorPairSketch::apply(const DenseVector& u, const DenseVector& v) const {
  DenseMatrix U = u;
  DenseMatrix V = v;
  return apply(U, V).col(0);
}

DenseMatrix TensorPairSketch::dense() const {
  const Index m = spec_.side_dim;
  const Index s = spec_.output_dim;
  DenseMatrix out = DenseMatrix::Zero(s, checked_mul(m, m));
  if (spec_.family == TensorFamily::TensorSketch) {
    for (Index a = 0; a < m; ++a)
      for (Index b = 0; b < m; ++b) out((h1_[a] + h2_[b]) % s, a * m + b) += s1_[a] * s2_[b];
    return out;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(s));
  for (Index r = 0; r < s; ++r)
    for (Index a = 0; a < m; ++a)
      for (Index b = 0; b < m; ++b)
        out(r, a * m + b) =
            scale * hadamard_sign(pick1_[r], a) * d1_[a] * hadamard_sign(pick2_[r], b) * d2_[b];
  return out;
}

// ---------------------------------------------------------------------------

DenseMatrix apply_base(const BaseSketchSpec& spec, const DenseMatrix& A) { return BaseSketch(spec).apply(A); }

DenseMatrix apply_tensor_pair(const TensorSketchSpec& spec, const DenseMatrix& J1, const DenseMatrix& J2) {
  return TensorPairSketch(spec).apply(J1, J2);
}

DenseMatrix materialize(const BaseSketchSpec& spec) { return BaseSketch(spec).dense(); }

DenseMatrix materialize(const TensorSketchSpec& spec) { return TensorPairSketch(spec).dense(); }

Index choose_m(BaseFamily c_family, TensorFamily t_family, double dim, Index q, double eps, double delta,
               double c_factor, EpsPower power, DimLaw law) {
  if (!(eps > 0 && eps < 1) || !(delta > 0 && delta < 1))
    throw Error(ErrorKind::Configuration, "choose_m: eps and delta must lie in (0, 1)");
  if (q < 1 || !(dim > 0) || !(c_factor > 0))
    throw Error(ErrorKind::Configuration, "choose_m: q, dim and c_factor must be positive");

  const double eps_term = power == EpsPower::InverseSquare ? 1.0 / (eps * eps) : 1.0 / eps;
  const double qd = static_cast<double>(q);
  const double log_term = std::log(1.0 / delta);
  double formula = 0;
  if (c_family == BaseFamily::CountSketch && t_family == TensorFamily::TensorSketch) {
    formula = eps_term * qd * dim * dim / delta;
  } else if (c_family == BaseFamily::SRHT && t_family == TensorFamily::TensorSRHT) {
    formula = eps_term * std::pow(qd, 4) * dim * log_term;
  } else if (c_family == BaseFamily::OSNAP && t_family == TensorFamily::TensorSRHT) {
    formula = law == DimLaw::LinearInDim ? eps_term * std::pow(qd, 4) * dim * log_term
                                         : eps_term * qd * dim * dim * log_term;
  } else {
    throw Error(ErrorKind::Configuration,
                std::string("no sketch-size rule for (") + std::string(to_string(c_family)) + ", " +
                    std::string(to_string(t_family)) +
                    "); supported pairs: (countsketch, tensorsketch), (srht, tensorsrht), (osnap, tensorsrht)");
  }
  const double target = c_factor * formula;
  if (!(target < 9.0e18)) throw Error(ErrorKind::DimensionOverflow, "choose_m: sketch size overflows");
  // absorb rounding noise in log/pow before taking the ceiling
  const double m = std::ceil(target * (1.0 - 1e-12));
  return std::max<Index>(1, static_cast<Index>(m));
}

}  // namespace kronsketch
