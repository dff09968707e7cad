#pragma once

#include "snoh/types.hpp"

#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace snoh {

struct Split {
  std::vector<NodeId> train, val, test;

  bool empty() const { return train.empty() && val.empty() && test.empty(); }
};

// Immutable sparse graph: CSR adjacency (matrix convention: an edge pair
// (i, j) is the entry in row i, column j; row i is what node i aggregates
// from), dense node features, per-node class labels and an optional split.
// Construction validates index ranges, rejects duplicate entries and checks
// split disjointness. Safe to share read-only across threads.
class Graph {
 public:
  Graph(NodeId num_nodes, std::vector<std::pair<NodeId, NodeId>> edges, Matrix features,
        std::vector<std::int32_t> labels, int num_classes, Split split = {});

  NodeId num_nodes() const { return num_nodes_; }
  EdgeId num_edges() const { return static_cast<EdgeId>(col_idx_.size()); }
  int num_classes() const { return num_classes_; }
  int feature_dim() const { return static_cast<int>(features_.cols()); }

  std::span<const EdgeId> row_ptr() const { return row_ptr_; }
  std::span<const NodeId> col_idx() const { return col_idx_; }
  const Matrix& features() const { return features_; }
  std::span<const std::int32_t> labels() const { return labels_; }
  const Split& split() const { return split_; }

  // Copy with a different split; graph data is unchanged.
  Graph with_split(Split split) const;

  std::span<const NodeId> neighbors(NodeId i) const {
    return {col_idx_.data() + row_ptr_[i], col_idx_.data() + row_ptr_[i + 1]};
  }

 private:
  NodeId num_nodes_ = 0;
  std::vector<EdgeId> row_ptr_;
  std::vector<NodeId> col_idx_;
  Matrix features_;
  std::vector<std::int32_t> labels_;
  int num_classes_ = 0;
  Split split_;
};

// Symmetrically normalized adjacency with self-loops on the augmented CSR
// pattern: value(i,j) = 1/sqrt(d_i d_j) with d the degree in A+I. This
// pattern is the canonical edge list shared by every per-layer mask.
class NormalizedAdjacency {
 public:
  NodeId num_nodes() const { return num_nodes_; }
  EdgeId num_edges() const { return static_cast<EdgeId>(col_idx_.size()); }

  std::span<const EdgeId> row_ptr() const { return row_ptr_; }
  std::span<const NodeId> col_idx() const { return col_idx_; }
  std::span<const NodeId> row_idx() const { return row_idx_; }
  std::span<const double> values() const { return values_; }

  NodeId row_of(EdgeId e) const { return row_idx_[e]; }
  NodeId col_of(EdgeId e) const { return col_idx_[e]; }
  bool is_self_loop(EdgeId e) const { return row_idx_[e] == col_idx_[e]; }
  EdgeId self_loop_index(NodeId i) const { return self_pos_[i]; }
  EdgeId num_self_loops() const { return num_nodes_; }

  // -1 when the entry is not on the pattern.
  EdgeId find_edge(NodeId i, NodeId j) const;

  // Copy with one value replaced (finite-difference probes).
  NormalizedAdjacency with_value(EdgeId e, double v) const;

  friend NormalizedAdjacency normalize(const Graph& g);
  friend NormalizedAdjacency apply_mask(const NormalizedAdjacency& adj,
                                        std::span<const std::uint8_t> mask);

 private:
  NodeId num_nodes_ = 0;
  std::vector<EdgeId> row_ptr_;
  std::vector<NodeId> col_idx_;
  std::vector<NodeId> row_idx_;
  std::vector<double> values_;
  std::vector<EdgeId> self_pos_;
};

// Adds self-loops, computes degrees of A+I and returns 1/sqrt(d_i d_j) on the
// augmented pattern.
NormalizedAdjacency normalize(const Graph& g);

// Per-layer boolean edge masks over the shared augmented edge list, plus the
// per-node stop layer recorded by the cosine-distance controller.
//
// Invariants maintained by every mutation here:
//  - depth-monotone zeros: mask[l][e] == 0 implies mask[l'][e] == 0 for l' > l
//    once propagate_zeros/enforce_depth_monotone has run for the mutated layer;
//  - self-loop bits are 1 at every layer (clear_bit refuses them);
//  - stop_layer(i) == r implies rows i at layers >= r keep only the self-loop.
class LayerMaskSet {
 public:
  // stop_layer value meaning "never stopped".
  static constexpr int kNeverStops = std::numeric_limits<int>::max();

  LayerMaskSet(const NormalizedAdjacency& pattern, int depth);

  int depth() const { return depth_; }
  EdgeId num_edges() const { return num_edges_; }
  EdgeId num_self_loops() const { return num_nodes_; }
  NodeId num_nodes() const { return num_nodes_; }

  std::span<const std::uint8_t> layer(int l) const { return bits_[l]; }
  bool test(int l, EdgeId e) const { return bits_[l][e] != 0; }
  bool is_self_loop(EdgeId e) const { return self_loop_[e] != 0; }

  void clear_bit(int l, EdgeId e);

  // mask[l] &= mask[source_layer] for every l > source_layer. Idempotent.
  void propagate_zeros(int source_layer);

  // Cumulative AND from shallow to deep; restores depth monotonicity after
  // independent per-layer edits.
  void enforce_depth_monotone();

  // Clears every non-self-loop bit of row `node` at `first_layer` and deeper
  // and records the stop. Returns false (no-op) when the node already stopped
  // at a shallower or equal layer.
  bool stop_node(NodeId node, int first_layer);

  int stop_layer(NodeId node) const { return stop_layer_[node]; }
  std::span<const int> stop_layers() const { return stop_layer_; }

  // Fraction of surviving non-self-loop edges at `layer`.
  double edge_sparsity(int layer) const;
  // Fraction of nodes with at least one surviving incoming non-self-loop edge.
  double node_sparsity(int layer) const;

  std::int64_t surviving_non_self_loops(int layer) const;

  // Throws Error with detail when any invariant is violated.
  void check_invariants() const;

  std::span<const EdgeId> row_ptr() const { return row_ptr_; }

 private:
  int depth_ = 0;
  NodeId num_nodes_ = 0;
  EdgeId num_edges_ = 0;
  std::vector<std::vector<std::uint8_t>> bits_;
  std::vector<int> stop_layer_;
  // Row structure copied from the pattern so the mask set stays self-contained.
  std::vector<EdgeId> row_ptr_;
  std::vector<std::uint8_t> self_loop_;
};

// Adjacency with masked-out entries set to exactly zero; surviving values
// unchanged (no renormalization).
NormalizedAdjacency apply_mask(const NormalizedAdjacency& adj, std::span<const std::uint8_t> mask);

struct HomophilyResult {
  double ratio = 0.0;
  NodeId skipped = 0;  // nodes with no non-self-loop neighbor, excluded from the mean
};

// Mean over nodes of (same-label-neighbor count / neighbor count); self-loops
// are not neighbors.
HomophilyResult homophily_ratio(const Graph& g);

}  // namespace snoh
