#pragma once

#include "snoh/graph.hpp"
#include "snoh/model.hpp"

#include <span>
#include <vector>

namespace snoh {

// One layer's adjacency as seen by the kernels: shared normalized values plus
// an optional survival mask (nullptr = every entry alive) and an optional
// per-edge value override (trainable soft masks multiply into the values).
struct MaskedAdjacencyView {
  const NormalizedAdjacency* adj = nullptr;
  const std::uint8_t* mask = nullptr;
  const double* values_override = nullptr;

  const double* value_data() const {
    return values_override ? values_override : adj->values().data();
  }
  double value(EdgeId e) const { return value_data()[e]; }
  bool alive(EdgeId e) const { return mask == nullptr || mask[e] != 0; }
};

std::vector<MaskedAdjacencyView> make_views(const NormalizedAdjacency& adj,
                                            const LayerMaskSet& masks);
std::vector<MaskedAdjacencyView> make_views(const NormalizedAdjacency& adj, int depth);

// out = A_masked * in. Rows are accumulated in a fixed order, so results are
// bit-reproducible; fully masked rows reduce to the bare self-loop term.
void masked_spmm(const MaskedAdjacencyView& view, const Matrix& in, Matrix& out);
// out = A_masked^T * in (scatter form, fixed order).
void masked_spmm_transpose(const MaskedAdjacencyView& view, const Matrix& in, Matrix& out);

// Cached per-layer activations of one forward pass.
//  h[0] = X, h[l+1] = layer output (ResGCN/JKNet; for GCN the final h entry is
//  the pre-softmax logits), z[l] = h[l] * W[l], t[l] = A_masked[l] * z[l].
struct ForwardTape {
  std::vector<Matrix> h;
  std::vector<Matrix> z;
  std::vector<Matrix> t;
  Matrix logits;
  Matrix probs;
  std::vector<std::int32_t> predictions;
  std::uint64_t state_version = 0;
};

ForwardTape forward(const Graph& g, std::span<const MaskedAdjacencyView> adj_layers,
                    const ModelState& state, const ModelConfig& cfg);

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Mean cross-entropy and argmax accuracy over a node split.
LossAccuracy loss_and_accuracy(const ForwardTape& tape, const Graph& g,
                               std::span<const NodeId> split);

struct Gradients {
  std::vector<Matrix> d_weights;
  // [layer][edge]; zero at masked entries (gradients are defined only on
  // surviving entries).
  std::vector<std::vector<double>> d_adj;
};

struct BackwardOptions {
  bool want_adj_grads = true;
  // >= 0: compute d_adj only for this layer (cheaper controller loops).
  int only_adj_layer = -1;
};

// Reverse-mode gradients of the mean training cross-entropy w.r.t. every
// weight and every surviving adjacency entry:
//   dL/dA[l](i,j) = < grad at t[l] row i, z[l] row j >.
Gradients backward(const ForwardTape& tape, const Graph& g,
                   std::span<const MaskedAdjacencyView> adj_layers, const ModelState& state,
                   const ModelConfig& cfg, std::span<const NodeId> split,
                   const BackwardOptions& opts = {});

// Standard Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction) on the
// model weights only; adjacency entries are never updated.
void adam_step(ModelState& state, const Gradients& grads, double lr);

// Row-wise cosine distance between z[layer] and t[layer], each value clamped
// to [0, 2]. Zero-norm rows yield 1.0 and bump *zero_norm_rows when given.
std::vector<double> cosine_distance_per_node(const ForwardTape& tape, int layer,
                                             std::int64_t* zero_norm_rows = nullptr);

struct PerturbTarget {
  enum class Kind { Weight, AdjacencyEntry };
  Kind kind = Kind::Weight;
  int layer = 0;
  int row = 0, col = 0;  // weight entry
  EdgeId edge = 0;       // adjacency entry (global CSR index)
};

// Central-difference estimate (L(x+h) - L(x-h)) / 2h of the training loss
// w.r.t. one weight or one surviving adjacency entry.
double finite_diff_grad(const Graph& g, std::span<const MaskedAdjacencyView> adj_layers,
                        const ModelState& state, const ModelConfig& cfg,
                        std::span<const NodeId> split, const PerturbTarget& target, double step);

}  // namespace snoh
