#pragma once

#include "kronsketch/sketch.hpp"
#include "kronsketch/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace kronsketch {

struct TreeConfig {
  BaseFamily c_family = BaseFamily::CountSketch;
  TensorFamily t_family = TensorFamily::TensorSketch;
  Index m = 0;
  double eps = 0.5;
  double delta = 0.1;
  bool adaptive = false;
  std::uint64_t seed = 0;
  Index osnap_sparsity = 4;  // clamped to m
};

/// Balanced binary tree of sketched node matrices whose root is a sketch of
/// A_1 ⊗ ... ⊗ A_q.
///
/// Level 0 holds the q leaves J_k = C_k A_k. Each higher level pairs adjacent
/// nodes left to right, J_parent = T(J_left ⊗ J_right); an unpaired rightmost
/// node is promoted unchanged. An update to factor i only touches the nodes on
/// the path from leaf i to the root.
///
/// Single writer: update()/update_adaptive() need exclusive access; const
/// members may run concurrently between updates.
class TensorTree {
 public:
  static TensorTree initialize(std::vector<DenseMatrix> factors, const TreeConfig& config);

  /// Rebuilds a tree from explicit specs (used for snapshots and for
  /// comparing against a fresh build with a known spec assignment).
  /// `node_specs[l-1][k]` is the spec of node k on level l, or nullopt for a
  /// promoted node.
  static TensorTree from_specs(std::vector<DenseMatrix> factors, const TreeConfig& config,
                               std::vector<BaseSketchSpec> leaf_specs,
                               std::vector<std::vector<std::optional<TensorSketchSpec>>> node_specs,
                               std::uint64_t epoch = 0);

  /// A_i += B, propagating the sketched delta along the leaf-to-root path.
  void update(Index i, const DenseMatrix& B);
  /// A_i += B with fresh sketches drawn for every node on the path.
  void update_adaptive(Index i, const DenseMatrix& B);
  /// update_adaptive when the tree was configured adaptive, update otherwise.
  void apply_update(Index i, const DenseMatrix& B);

  /// Pi^q b for b indexed in Kronecker order over the factor row counts.
  DenseVector sketch_vector(const SparseVector& b) const;

  const DenseMatrix& root() const { return levels_.back().front().value; }
  /// Explicit Pi^q (m x n); desk scale only.
  DenseMatrix materialize_tree_sketch() const;

  Index q() const { return static_cast<Index>(factors_.size()); }
  Index m() const { return config_.m; }
  Index n() const;  // prod n_i
  Index d() const;  // prod d_i
  Index depth() const { return static_cast<Index>(levels_.size()) - 1; }
  Index level_size(Index level) const { return static_cast<Index>(levels_.at(level).size()); }
  const DenseMatrix& node(Index level, Index k) const { return levels_.at(level).at(k).value; }
  bool promoted(Index level, Index k) const { return level > 0 && !levels_.at(level).at(k).spec; }
  Index recompute_counter() const { return recompute_counter_; }
  std::uint64_t epoch() const { return epoch_; }

  const TreeConfig& config() const { return config_; }
  const std::vector<DenseMatrix>& factors() const { return factors_; }
  const std::vector<BaseSketchSpec>& leaf_specs() const { return leaf_specs_; }
  std::vector<std::vector<std::optional<TensorSketchSpec>>> node_specs() const;

  /// Binary snapshot of config, specs and factors (node matrices are rebuilt
  /// on load). Layout: "KTTR1", then little-endian u64 counts/ids and f64 data.
  void write_snapshot(std::ostream& os) const;
  static TensorTree read_snapshot(std::istream& is);

 private:
  struct Node {
    DenseMatrix value;
    std::optional<TensorSketchSpec> spec;  // empty on leaves and promoted nodes
  };

  TensorTree() = default;
  void build_shape();
  void assign_fresh_specs();
  void compute_all();
  void recompute_node(Index level, Index k);
  BaseSketchSpec leaf_spec(Index k, std::uint64_t epoch) const;
  TensorSketchSpec node_spec(Index level, Index k, std::uint64_t epoch) const;
  void check_update(Index i, const DenseMatrix& B) const;

  TreeConfig config_;
  std::vector<DenseMatrix> factors_;
  std::vector<BaseSketchSpec> leaf_specs_;
  std::vector<std::vector<Node>> levels_;
  Index recompute_counter_ = 0;
  std::uint64_t epoch_ = 0;
};

}  // namespace kronsketch
