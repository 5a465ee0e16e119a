#include "kronsketch/tensor_tree.hpp"

#include "kronsketch/linalg.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>

namespace kronsketch {

namespace {

void validate_config(const TreeConfig& c) {
  if (c.m < 1) throw Error(ErrorKind::Configuration, "sketch size m must be >= 1");
  if (!(c.eps > 0 && c.eps < 1) || !(c.delta > 0 && c.delta < 1))
    throw Error(ErrorKind::Configuration, "eps and delta must lie in (0, 1)");
  if (c.osnap_sparsity < 1) throw Error(ErrorKind::Configuration, "OSNAP sparsity must be >= 1");
}

}  // namespace

TensorTree TensorTree::initialize(std::vector<DenseMatrix> factors, const TreeConfig& config) {
  validate_config(config);
  TensorTree t;
  t.config_ = config;
  t.factors_ = std::move(factors);
  t.build_shape();
  t.assign_fresh_specs();
  t.compute_all();
  return t;
}

TensorTree TensorTree::from_specs(std::vector<DenseMatrix> factors, const TreeConfig& config,
                                  std::vector<BaseSketchSpec> leaf_specs,
                                  std::vector<std::vector<std::optional<TensorSketchSpec>>> node_specs,
                                  std::uint64_t epoch) {
  validate_config(config);
  TensorTree t;
  t.config_ = config;
  t.factors_ = std::move(factors);
  t.epoch_ = epoch;
  t.build_shape();
  if (static_cast<Index>(leaf_specs.size()) != t.q())
    throw Error(ErrorKind::Dimension, "from_specs: need one leaf spec per factor");
  if (static_cast<Index>(node_specs.size()) != t.depth())
    throw Error(ErrorKind::Dimension, "from_specs: node spec levels do not match tree depth");
  for (Index k = 0; k < t.q(); ++k) {
    const auto& s = leaf_specs[k];
    if (s.input_dim != t.factors_[k].rows() || s.output_dim != config.m)
      throw Error(ErrorKind::Dimension, "from_specs: leaf spec " + std::to_string(k) + " has wrong shape");
  }
  t.leaf_specs_ = std::move(leaf_specs);
  for (Index l = 1; l <= t.depth(); ++l) {
    auto& level = t.levels_[l];
    auto& specs = node_specs[l - 1];
    if (specs.size() != level.size()) throw Error(ErrorKind::Dimension, "from_specs: node count mismatch");
    for (std::size_t k = 0; k < level.size(); ++k) {
      const bool should_promote = (2 * k + 1 == t.levels_[l - 1].size());
      if (should_promote != !specs[k].has_value())
        throw Error(ErrorKind::Dimension, "from_specs: promoted-node layout mismatch");
      if (specs[k] && (specs[k]->side_dim != config.m || specs[k]->output_dim != config.m))
        throw Error(ErrorKind::Dimension, "from_specs: node spec has wrong shape");
      level[k].spec = specs[k];
    }
  }
  t.compute_all();
  return t;
}

void TensorTree::build_shape() {
  if (factors_.empty()) throw Error(ErrorKind::Dimension, "tensor tree needs at least one factor");
  Index d = 1, n = 1;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const auto& A = factors_[i];
    if (A.rows() < 1 || A.cols() < 1)
      throw Error(ErrorKind::Dimension, "factor " + std::to_string(i) + " is empty");
    require_finite(A, "factor");
    d = checked_mul(d, A.cols());
    n = checked_mul(n, A.rows());
  }
  levels_.clear();
  levels_.emplace_back(factors_.size());
  while (levels_.back().size() > 1) {
    const std::size_t below = levels_.back().size();
    levels_.emplace_back((below + 1) / 2);
  }
}

BaseSketchSpec TensorTree::leaf_spec(Index k, std::uint64_t epoch) const {
  BaseSketchSpec s;
  s.family = config_.c_family;
  s.input_dim = factors_[k].rows();
  s.output_dim = config_.m;
  s.sparsity = config_.c_family == BaseFamily::OSNAP ? std::min(config_.osnap_sparsity, config_.m) : 1;
  s.seed = mix_seed(config_.seed, 0, static_cast<std::uint64_t>(k), epoch);
  return s;
}

TensorSketchSpec TensorTree::node_spec(Index level, Index k, std::uint64_t epoch) const {
  TensorSketchSpec s;
  s.family = config_.t_family;
  s.side_dim = config_.m;
  s.output_dim = config_.m;
  s.seed = mix_seed(config_.seed, static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(k), epoch);
  return s;
}

void TensorTree::assign_fresh_specs() {
  leaf_specs_.clear();
  for (Index k = 0; k < q(); ++k) leaf_specs_.push_back(leaf_spec(k, epoch_));
  for (Index l = 1; l <= depth(); ++l) {
    const std::size_t below = levels_[l - 1].size();
    for (std::size_t k = 0; k < levels_[l].size(); ++k) {
      if (2 * k + 1 == below)
        levels_[l][k].spec.reset();
      else
        levels_[l][k].spec = node_spec(l, static_cast<Index>(k), epoch_);
    }
  }
}

void TensorTree::recompute_node(Index level, Index k) {
  Node& node = levels_[level][k];
  if (level == 0) {
    node.value = apply_base(leaf_specs_[k], factors_[k]);
    return;
  }
  const auto& below = levels_[level - 1];
  if (!node.spec) {
    node.value = below[2 * k].value;
    return;
  }
  node.value = apply_tensor_pair(*node.spec, below[2 * k].value, below[2 * k + 1].value);
}

void TensorTree::compute_all() {
  for (Index l = 0; l <= depth(); ++l)
    for (Index k = 0; k < level_size(l); ++k) recompute_node(l, k);
  recompute_counter_ = 0;
  for (const auto& level : levels_) recompute_counter_ += static_cast<Index>(level.size());
}

void TensorTree::check_update(Index i, const DenseMatrix& B) const {
  if (i < 0 || i >= q())
    throw Error(ErrorKind::IndexOutOfRange,
                "factor index " + std::to_string(i) + " not in [0, " + std::to_string(q()) + ")");
  const auto& A = factors_[i];
  if (B.rows() != A.rows() || B.cols() != A.cols())
    throw Error(ErrorKind::Dimension, "update shape " + std::to_string(B.rows()) + "x" + std::to_string(B.cols()) +
                                          " does not match factor " + std::to_string(A.rows()) + "x" +
                                          std::to_string(A.cols()));
  require_finite(B, "update");
}

void TensorTree::update(Index i, const DenseMatrix& B) {
  check_update(i, B);
  factors_[i] += B;

  DenseMatrix delta = apply_base(leaf_specs_[i], B);
  levels_[0][i].value += delta;
  recompute_counter_ = 1;

  Index k = i;
  for (Index l = 1; l <= depth(); ++l) {
    const Index parent = k / 2;
    Node& node = levels_[l][parent];
    const auto& below = levels_[l - 1];
    if (!node.spec) {
      node.value = below[k].value;
    } else {
      // the changed child keeps its side of the tensor product
      delta = (k % 2 == 0) ? apply_tensor_pair(*node.spec, delta, below[k + 1].value)
                           : apply_tensor_pair(*node.spec, below[k - 1].value, delta);
      node.value += delta;
    }
    ++recompute_counter_;
    k = parent;
  }
}

void TensorTree::update_adaptive(Index i, const DenseMatrix& B) {
  if (!config_.adaptive) throw Error(ErrorKind::Configuration, "update_adaptive on a tree built with adaptive = false");
  check_update(i, B);
  factors_[i] += B;
  ++epoch_;

  leaf_specs_[i] = leaf_spec(i, epoch_);
  recompute_node(0, i);
  recompute_counter_ = 1;
  Index k = i;
  for (Index l = 1; l <= depth(); ++l) {
    k /= 2;
    Node& node = levels_[l][k];
    if (node.spec) node.spec = node_spec(l, k, epoch_);
    recompute_node(l, k);
    ++recompute_counter_;
  }
}

void TensorTree::apply_update(Index i, const DenseMatrix& B) {
  if (config_.adaptive)
    update_adaptive(i, B);
  else
    update(i, B);
}

Index TensorTree::n() const {
  Index n = 1;
  for (const auto& A : factors_) n = checked_mul(n, A.rows());
  return n;
}

Index TensorTree::d() const {
  Index d = 1;
  for (const auto& A : factors_) d = checked_mul(d, A.cols());
  return d;
}

std::vector<std::vector<std::optional<TensorSketchSpec>>> TensorTree::node_specs() const {
  std::vector<std::vector<std::optional<TensorSketchSpec>>> out;
  for (Index l = 1; l <= depth(); ++l) {
    auto& level = out.emplace_back();
    for (const auto& node : levels_[l]) level.push_back(node.spec);
  }
  return out;
}

DenseVector TensorTree::sketch_vector(const SparseVector& b) const {
  const Index total = n();
  if (b.size() != total)
    throw Error(ErrorKind::Dimension,
                "label length " + std::to_string(b.size()) + " != prod n_i = " + std::to_string(total));

  // Node (l, k) covers leaves [k 2^l, (k+1) 2^l) and sees local indices over
  // that range, last leaf fastest. T(u ⊗ v) is bilinear, so entries sharing a
  // left-child index collapse into one tensor-pair application.
  using Entry = std::pair<Index, double>;
  struct Walker {
    const TensorTree& t;
    std::vector<BaseSketch> leaves;
    std::vector<std::vector<std::optional<TensorPairSketch>>> inner;
    std::vector<std::vector<std::unordered_map<Index, DenseVector>>> units;

    Index rows(Index l, Index k) const {
      Index r = 1;
      const Index lo = k << l, hi = std::min(t.q(), (k + 1) << l);
      for (Index i = lo; i < hi; ++i) r *= t.factors_[i].rows();
      return r;
    }

    const DenseVector& unit(Index l, Index k, Index i) {
      auto& memo = units[l][k];
      if (auto it = memo.find(i); it != memo.end()) return it->second;
      DenseVector v;
      if (l == 0) {
        v = leaves[k].column(i);
      } else {
        const Entry e{i, 1.0};
        v = sketch(l, k, std::span<const Entry>(&e, 1));
      }
      return units[l][k].emplace(i, std::move(v)).first->second;
    }

    DenseVector sketch(Index l, Index k, std::span<const Entry> entries) {
      if (l == 0) {
        DenseVector acc = DenseVector::Zero(t.config_.m);
        for (const auto& [i, v] : entries) acc += v * unit(0, k, i);
        return acc;
      }
      if (!inner[l][k]) return sketch(l - 1, 2 * k, entries);
      const Index right_rows = rows(l - 1, 2 * k + 1);
      DenseVector acc = DenseVector::Zero(t.config_.m);
      std::vector<Entry> group;
      for (std::size_t s = 0; s < entries.size();) {
        const Index left = entries[s].first / right_rows;
        group.clear();
        for (; s < entries.size() && entries[s].first / right_rows == left; ++s)
          group.emplace_back(entries[s].first % right_rows, entries[s].second);
        const DenseVector w = sketch(l - 1, 2 * k + 1, group);
        acc += inner[l][k]->apply(unit(l - 1, 2 * k, left), w);
      }
      return acc;
    }
  };

  Walker w{*this, {}, std::vector<std::vector<std::optional<TensorPairSketch>>>(levels_.size()),
           std::vector<std::vector<std::unordered_map<Index, DenseVector>>>(levels_.size())};
  w.leaves.reserve(factors_.size());
  for (const auto& spec : leaf_specs_) w.leaves.emplace_back(spec);
  for (Index l = 0; l <= depth(); ++l) {
    w.units[l].resize(levels_[l].size());
    if (l == 0) continue;
    for (const auto& node : levels_[l])
      w.inner[l].push_back(node.spec ? std::optional<TensorPairSketch>(std::in_place, *node.spec) : std::nullopt);
  }

  std::vector<Entry> nz;
  for (const auto& e : b.entries())
    if (e.second != 0.0) nz.push_back(e);
  if (nz.empty()) return DenseVector::Zero(config_.m);
  return w.sketch(depth(), 0, nz);
}

DenseMatrix TensorTree::materialize_tree_sketch() const {
  std::vector<DenseMatrix> cur;
  for (const auto& spec : leaf_specs_) cur.push_back(materialize(spec));
  for (Index l = 1; l <= depth(); ++l) {
    std::vector<DenseMatrix> next;
    for (Index k = 0; k < level_size(l); ++k) {
      const auto& spec = levels_[l][k].spec;
      if (spec)
        next.push_back(apply_tensor_pair(*spec, cur[2 * k], cur[2 * k + 1]));
      else
        next.push_back(cur[2 * k]);
    }
    cur.swap(next);
  }
  return cur.front();
}

// ---------------------------------------------------------------------------
// snapshot

namespace {

constexpr std::array<char, 5> kMagic = {'K', 'T', 'T', 'R', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }

class SnapshotReader {
 public:
  explicit SnapshotReader(std::istream& is) : is_(is) {}

  std::uint64_t u64() {
    std::array<unsigned char, 8> b;
    is_.read(reinterpret_cast<char*>(b.data()), 8);
    if (is_.gcount() != 8) throw ParseError(offset_, "truncated tree snapshot");
    offset_ += 8;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    const std::size_t at = offset_;
    const double x = std::bit_cast<double>(u64());
    if (!std::isfinite(x)) throw ParseError(at, "non-finite value in tree snapshot");
    return x;
  }
  Index count(std::uint64_t limit = std::uint64_t{1} << 40) {
    const std::size_t at = offset_;
    const auto v = u64();
    if (v > limit) throw ParseError(at, "implausible count in tree snapshot");
    return static_cast<Index>(v);
  }
  void magic() {
    std::array<char, 5> b{};
    is_.read(b.data(), 5);
    if (is_.gcount() != 5 || b != kMagic) throw ParseError(0, "missing KTTR1 magic");
    offset_ = 5;
  }
  std::size_t offset() const { return offset_; }

 private:
  std::istream& is_;
  std::size_t offset_ = 0;
};

}  // namespace

void TensorTree::write_snapshot(std::ostream& os) const {
  os.write(kMagic.data(), kMagic.size());
  put_u64(os, static_cast<std::uint64_t>(q()));
  put_u64(os, static_cast<std::uint64_t>(config_.c_family));
  put_u64(os, static_cast<std::uint64_t>(config_.t_family));
  put_u64(os, static_cast<std::uint64_t>(config_.m));
  put_u64(os, static_cast<std::uint64_t>(config_.osnap_sparsity));
  put_u64(os, config_.adaptive ? 1 : 0);
  put_u64(os, config_.seed);
  put_u64(os, epoch_);
  put_f64(os, config_.eps);
  put_f64(os, config_.delta);
  for (const auto& A : factors_) {
    put_u64(os, static_cast<std::uint64_t>(A.rows()));
    put_u64(os, static_cast<std::uint64_t>(A.cols()));
    for (Index i = 0; i < A.size(); ++i) put_f64(os, A.data()[i]);
  }
  for (const auto& s : leaf_specs_) {
    put_u64(os, static_cast<std::uint64_t>(s.family));
    put_u64(os, static_cast<std::uint64_t>(s.input_dim));
    put_u64(os, static_cast<std::uint64_t>(s.output_dim));
    put_u64(os, static_cast<std::uint64_t>(s.sparsity));
    put_u64(os, s.seed);
  }
  put_u64(os, static_cast<std::uint64_t>(depth()));
  for (Index l = 1; l <= depth(); ++l) {
    put_u64(os, static_cast<std::uint64_t>(level_size(l)));
    for (const auto& node : levels_[l]) {
      put_u64(os, node.spec ? 1 : 0);
      if (!node.spec) continue;
      put_u64(os, static_cast<std::uint64_t>(node.spec->family));
      put_u64(os, static_cast<std::uint64_t>(node.spec->side_dim));
      put_u64(os, static_cast<std::uint64_t>(node.spec->output_dim));
      put_u64(os, node.spec->seed);
    }
  }
  if (!os) throw Error(ErrorKind::Io, "failed writing tree snapshot");
}

TensorTree TensorTree::read_snapshot(std::istream& is) {
  SnapshotReader r(is);
  r.magic();
  const Index q = r.count(1 << 20);
  TreeConfig config;
  auto family = [&](std::uint64_t max) {
    const std::size_t at = r.offset();
    const auto v = r.u64();
    if (v > max) throw ParseError(at, "unknown sketch family id");
    return v;
  };
  config.c_family = static_cast<BaseFamily>(family(2));
  config.t_family = static_cast<TensorFamily>(family(1));
  config.m = r.count();
  config.osnap_sparsity = r.count();
  config.adaptive = r.u64() != 0;
  config.seed = r.u64();
  const std::uint64_t epoch = r.u64();
  config.eps = r.f64();
  config.delta = r.f64();

  std::vector<DenseMatrix> factors;
  for (Index k = 0; k < q; ++k) {
    const Index rows = r.count(), cols = r.count();
    DenseMatrix A(rows, cols);
    for (Index i = 0; i < A.size(); ++i) A.data()[i] = r.f64();
    factors.push_back(std::move(A));
  }
  std::vector<BaseSketchSpec> leaves;
  for (Index k = 0; k < q; ++k) {
    BaseSketchSpec s;
    s.family = static_cast<BaseFamily>(family(2));
    s.input_dim = r.count();
    s.output_dim = r.count();
    s.sparsity = r.count();
    s.seed = r.u64();
    leaves.push_back(s);
  }
  const Index depth = r.count(64);
  std::vector<std::vector<std::optional<TensorSketchSpec>>> nodes(static_cast<std::size_t>(depth));
  for (auto& level : nodes) {
    const Index count = r.count(1 << 20);
    for (Index k = 0; k < count; ++k) {
      if (r.u64() == 0) {
        level.emplace_back();
        continue;
      }
      TensorSketchSpec s;
      s.family = static_cast<TensorFamily>(family(1));
      s.side_dim = r.count();
      s.output_dim = r.count();
      s.seed = r.u64();
      level.emplace_back(s);
    }
  }
  return from_specs(std::move(factors), config, std::move(leaves), std::move(nodes), epoch);
}

}  // namespace kronsketch
