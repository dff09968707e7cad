#include "snoh/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace snoh {

namespace {

void check_split_part(const std::vector<NodeId>& part, const char* name, NodeId n,
                      std::vector<std::uint8_t>& seen) {
  for (NodeId v : part) {
    if (v < 0 || v >= n) {
      throw DataError(std::string("split '") + name + "' contains out-of-range node index " +
                      std::to_string(v));
    }
    if (seen[v]) {
      throw DataError(std::string("splits are not disjoint: node ") + std::to_string(v) +
                      " appears twice");
    }
    seen[v] = 1;
  }
}

}  // namespace

Graph::Graph(NodeId num_nodes, std::vector<std::pair<NodeId, NodeId>> edges, Matrix features,
             std::vector<std::int32_t> labels, int num_classes, Split split)
    : num_nodes_(num_nodes),
      features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      split_(std::move(split)) {
  if (num_nodes <= 0) throw DataError("graph must have at least one node");
  if (features_.rows() != num_nodes) {
    throw DataError("feature rows (" + std::to_string(features_.rows()) +
                    ") != num_nodes (" + std::to_string(num_nodes) + ")");
  }
  if (static_cast<NodeId>(labels_.size()) != num_nodes) {
    throw DataError("label rows (" + std::to_string(labels_.size()) + ") != num_nodes (" +
                    std::to_string(num_nodes) + ")");
  }
  if (num_classes_ <= 0) throw DataError("num_classes must be positive");
  for (NodeId i = 0; i < num_nodes; ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw DataError("label " + std::to_string(labels_[i]) + " of node " + std::to_string(i) +
                      " out of range [0, " + std::to_string(num_classes_) + ")");
    }
  }

  for (const auto& [s, d] : edges) {
    if (s < 0 || s >= num_nodes || d < 0 || d >= num_nodes) {
      throw DataError("edge (" + std::to_string(s) + ", " + std::to_string(d) +
                      ") has node index out of range [0, " + std::to_string(num_nodes) + ")");
    }
  }
  std::sort(edges.begin(), edges.end());
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k] == edges[k - 1]) {
      throw DataError("duplicate edge (" + std::to_string(edges[k].first) + ", " +
                      std::to_string(edges[k].second) + ")");
    }
  }

  row_ptr_.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
  col_idx_.resize(edges.size());
  for (const auto& [s, d] : edges) row_ptr_[static_cast<std::size_t>(s) + 1]++;
  std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  std::vector<EdgeId> cursor(row_ptr_.begin(), row_ptr_.end() - 1);
  for (const auto& [s, d] : edges) col_idx_[cursor[s]++] = d;

  std::vector<std::uint8_t> seen(num_nodes, 0);
  check_split_part(split_.train, "train", num_nodes, seen);
  check_split_part(split_.val, "val", num_nodes, seen);
  check_split_part(split_.test, "test", num_nodes, seen);
}

Graph Graph::with_split(Split split) const {
  Graph g = *this;
  std::vector<std::uint8_t> seen(num_nodes_, 0);
  check_split_part(split.train, "train", num_nodes_, seen);
  check_split_part(split.val, "val", num_nodes_, seen);
  check_split_part(split.test, "test", num_nodes_, seen);
  g.split_ = std::move(split);
  return g;
}

NormalizedAdjacency normalize(const Graph& g) {
  const NodeId n = g.num_nodes();
  NormalizedAdjacency adj;
  adj.num_nodes_ = n;
  adj.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  adj.self_pos_.assign(n, -1);

  auto row_ptr = g.row_ptr();
  auto col_idx = g.col_idx();

  // Augmented pattern: original row entries plus (i, i) where missing; rows
  // stay sorted by column.
  std::vector<double> degree(n, 0.0);
  for (NodeId i = 0; i < n; ++i) {
    EdgeId deg = row_ptr[i + 1] - row_ptr[i];
    bool has_self = false;
    for (EdgeId e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      if (col_idx[e] == i) has_self = true;
    }
    if (!has_self) ++deg;
    adj.row_ptr_[static_cast<std::size_t>(i) + 1] = deg;
    degree[i] = static_cast<double>(deg);
  }
  std::partial_sum(adj.row_ptr_.begin(), adj.row_ptr_.end(), adj.row_ptr_.begin());

  const EdgeId nnz = adj.row_ptr_[n];
  adj.col_idx_.resize(nnz);
  adj.row_idx_.resize(nnz);
  adj.values_.resize(nnz);
  for (NodeId i = 0; i < n; ++i) {
    EdgeId w = adj.row_ptr_[i];
    bool placed_self = false;
    for (EdgeId e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      const NodeId j = col_idx[e];
      if (!placed_self && j > i) {
        adj.col_idx_[w++] = i;
        placed_self = true;
      }
      adj.col_idx_[w++] = j;
      if (j == i) placed_self = true;
    }
    if (!placed_self) adj.col_idx_[w++] = i;
    for (EdgeId e = adj.row_ptr_[i]; e < adj.row_ptr_[i + 1]; ++e) {
      const NodeId j = adj.col_idx_[e];
      adj.row_idx_[e] = i;
      adj.values_[e] = 1.0 / std::sqrt(degree[i] * degree[j]);
      if (j == i) adj.self_pos_[i] = e;
    }
  }
  return adj;
}

EdgeId NormalizedAdjacency::find_edge(NodeId i, NodeId j) const {
  const auto begin = col_idx_.begin() + row_ptr_[i];
  const auto end = col_idx_.begin() + row_ptr_[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  if (it == end || *it != j) return -1;
  return static_cast<EdgeId>(it - col_idx_.begin());
}

NormalizedAdjacency NormalizedAdjacency::with_value(EdgeId e, double v) const {
  NormalizedAdjacency copy = *this;
  copy.values_[e] = v;
  return copy;
}

LayerMaskSet::LayerMaskSet(const NormalizedAdjacency& pattern, int depth)
    : depth_(depth),
      num_nodes_(pattern.num_nodes()),
      num_edges_(pattern.num_edges()),
      row_ptr_(pattern.row_ptr().begin(), pattern.row_ptr().end()) {
  if (depth < 1) throw ConfigError("mask depth must be >= 1");
  bits_.assign(depth, std::vector<std::uint8_t>(num_edges_, 1));
  stop_layer_.assign(num_nodes_, kNeverStops);
  self_loop_.assign(num_edges_, 0);
  for (EdgeId e = 0; e < num_edges_; ++e) self_loop_[e] = pattern.is_self_loop(e) ? 1 : 0;
}

void LayerMaskSet::clear_bit(int l, EdgeId e) {
  if (self_loop_[e]) throw Error("attempt to clear a self-loop mask bit");
  bits_[l][e] = 0;
}

void LayerMaskSet::propagate_zeros(int source_layer) {
  const auto& src = bits_[source_layer];
  for (int l = source_layer + 1; l < depth_; ++l) {
    auto& dst = bits_[l];
    for (EdgeId e = 0; e < num_edges_; ++e) dst[e] &= src[e];
  }
}

void LayerMaskSet::enforce_depth_monotone() {
  for (int l = 1; l < depth_; ++l) {
    const auto& prev = bits_[l - 1];
    auto& cur = bits_[l];
    for (EdgeId e = 0; e < num_edges_; ++e) cur[e] &= prev[e];
  }
}

bool LayerMaskSet::stop_node(NodeId node, int first_layer) {
  if (stop_layer_[node] <= first_layer) return false;
  for (int l = first_layer; l < depth_; ++l) {
    auto& m = bits_[l];
    for (EdgeId e = row_ptr_[node]; e < row_ptr_[node + 1]; ++e) {
      if (!self_loop_[e]) m[e] = 0;
    }
  }
  stop_layer_[node] = first_layer;
  return true;
}

std::int64_t LayerMaskSet::surviving_non_self_loops(int layer) const {
  const auto& m = bits_[layer];
  std::int64_t alive = 0;
  for (EdgeId e = 0; e < num_edges_; ++e) alive += (m[e] && !self_loop_[e]) ? 1 : 0;
  return alive;
}

double LayerMaskSet::edge_sparsity(int layer) const {
  const std::int64_t total = num_edges_ - num_nodes_;
  if (total == 0) return 0.0;
  return static_cast<double>(surviving_non_self_loops(layer)) / static_cast<double>(total);
}

double LayerMaskSet::node_sparsity(int layer) const {
  const auto& m = bits_[layer];
  NodeId alive = 0;
  for (NodeId i = 0; i < num_nodes_; ++i) {
    for (EdgeId e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
      if (m[e] && !self_loop_[e]) {
        ++alive;
        break;
      }
    }
  }
  return static_cast<double>(alive) / static_cast<double>(num_nodes_);
}

void LayerMaskSet::check_invariants() const {
  for (int l = 0; l < depth_; ++l) {
    for (EdgeId e = 0; e < num_edges_; ++e) {
      if (self_loop_[e] && !bits_[l][e]) {
        throw Error("self-loop bit cleared at layer " + std::to_string(l) + ", edge " +
                    std::to_string(e));
      }
      if (l > 0 && !bits_[l - 1][e] && bits_[l][e]) {
        throw Error("depth monotonicity violated at layer " + std::to_string(l) + ", edge " +
                    std::to_string(e));
      }
    }
  }
  for (NodeId i = 0; i < num_nodes_; ++i) {
    const int r = stop_layer_[i];
    if (r == kNeverStops) continue;
    for (int l = r; l < depth_; ++l) {
      for (EdgeId e = row_ptr_[i]; e < row_ptr_[i + 1]; ++e) {
        if (!self_loop_[e] && bits_[l][e]) {
          throw Error("stopped node " + std::to_string(i) + " has a surviving row bit at layer " +
                      std::to_string(l));
        }
      }
    }
  }
}

NormalizedAdjacency apply_mask(const NormalizedAdjacency& adj, std::span<const std::uint8_t> mask) {
  if (static_cast<EdgeId>(mask.size()) != adj.num_edges()) {
    throw ConfigError("mask length " + std::to_string(mask.size()) + " != edge count " +
                      std::to_string(adj.num_edges()));
  }
  NormalizedAdjacency out = adj;
  for (EdgeId e = 0; e < adj.num_edges(); ++e) {
    if (!mask[e]) out.values_[e] = 0.0;
  }
  return out;
}

HomophilyResult homophily_ratio(const Graph& g) {
  auto labels = g.labels();
  HomophilyResult res;
  double sum = 0.0;
  NodeId counted = 0;
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    std::int64_t deg = 0, same = 0;
    for (NodeId j : g.neighbors(i)) {
      if (j == i) continue;
      ++deg;
      if (labels[j] == labels[i]) ++same;
    }
    if (deg == 0) {
      ++res.skipped;
      continue;
    }
    sum += static_cast<double>(same) / static_cast<double>(deg);
    ++counted;
  }
  res.ratio = counted > 0 ? sum / static_cast<double>(counted) : 0.0;
  return res;
}

}  // namespace snoh
