#include "snoh/engine.hpp"

#include <algorithm>
#include <cmath>

namespace snoh {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void check_layer_finite(const Matrix& m, int layer, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string(what) + " is non-finite at layer " + std::to_string(layer),
                       layer);
  }
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

// Elementwise grad * 1[pre > 0].
Matrix relu_backward(const Matrix& grad, const Matrix& pre) {
  return ((pre.array() > 0.0).cast<double>() * grad.array()).matrix();
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

}  // namespace

std::vector<MaskedAdjacencyView> make_views(const NormalizedAdjacency& adj,
                                            const LayerMaskSet& masks) {
  std::vector<MaskedAdjacencyView> views;
  views.reserve(masks.depth());
  for (int l = 0; l < masks.depth(); ++l) {
    views.push_back({&adj, masks.layer(l).data()});
  }
  return views;
}

std::vector<MaskedAdjacencyView> make_views(const NormalizedAdjacency& adj, int depth) {
  return std::vector<MaskedAdjacencyView>(static_cast<std::size_t>(depth),
                                          MaskedAdjacencyView{&adj, nullptr});
}

void masked_spmm(const MaskedAdjacencyView& view, const Matrix& in, Matrix& out) {
  const NormalizedAdjacency& a = *view.adj;
  const auto row_ptr = a.row_ptr();
  const auto col_idx = a.col_idx();
  const double* values = view.value_data();
  out.setZero(a.num_nodes(), in.cols());
  for (NodeId i = 0; i < a.num_nodes(); ++i) {
    auto out_row = out.row(i);
    for (EdgeId e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      if (!view.alive(e)) continue;
      out_row += values[e] * in.row(col_idx[e]);
    }
  }
}

void masked_spmm_transpose(const MaskedAdjacencyView& view, const Matrix& in, Matrix& out) {
  const NormalizedAdjacency& a = *view.adj;
  const auto row_ptr = a.row_ptr();
  const auto col_idx = a.col_idx();
  const double* values = view.value_data();
  out.setZero(a.num_nodes(), in.cols());
  for (NodeId i = 0; i < a.num_nodes(); ++i) {
    const auto in_row = in.row(i);
    for (EdgeId e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
      if (!view.alive(e)) continue;
      out.row(col_idx[e]) += values[e] * in_row;
    }
  }
}

ForwardTape forward(const Graph& g, std::span<const MaskedAdjacencyView> adj_layers,
                    const ModelState& state, const ModelConfig& cfg) {
  cfg.validate();
  const int depth = cfg.depth;
  if (static_cast<int>(adj_layers.size()) != depth) {
    throw ConfigError("adjacency list length " + std::to_string(adj_layers.size()) +
                      " != depth " + std::to_string(depth));
  }
  if (static_cast<int>(state.weights.size()) != cfg.num_weight_layers()) {
    throw ConfigError("model state has " + std::to_string(state.weights.size()) +
                      " weight matrices, config expects " +
                      std::to_string(cfg.num_weight_layers()));
  }
  if (g.feature_dim() != cfg.input_dim) {
    throw ConfigError("feature dim " + std::to_string(g.feature_dim()) + " != input_dim " +
                      std::to_string(cfg.input_dim));
  }

  ForwardTape tape;
  tape.state_version = state.version;
  tape.h.reserve(depth + 1);
  tape.z.reserve(depth);
  tape.t.reserve(depth);
  tape.h.push_back(g.features());

  for (int l = 0; l < depth; ++l) {
    const Matrix& hl = tape.h.back();
    if (hl.cols() != state.weights[l].rows()) {
      throw ConfigError("dimension mismatch at layer " + std::to_string(l));
    }
    Matrix z = hl * state.weights[l];
    Matrix t;
    masked_spmm(adj_layers[l], z, t);
    check_layer_finite(t, l, "post-aggregation activation");
    tape.z.push_back(std::move(z));
    tape.t.push_back(std::move(t));

    const Matrix& tl = tape.t.back();
    switch (cfg.variant) {
      case Variant::GCN:
        tape.h.push_back(l < depth - 1 ? relu(tl) : tl);
        break;
      case Variant::ResGCN:
        tape.h.push_back(l == 0 ? relu(tl) : Matrix(tape.h.back() + relu(tl)));
        break;
      case Variant::JKNet:
        tape.h.push_back(relu(tl));
        break;
    }
  }

  switch (cfg.variant) {
    case Variant::GCN:
      tape.logits = tape.t.back();
      break;
    case Variant::ResGCN:
      tape.logits = tape.h.back() * state.weights[depth];
      break;
    case Variant::JKNet: {
      Matrix concat(g.num_nodes(), depth * cfg.hidden_dim);
      for (int l = 0; l < depth; ++l) {
        concat.block(0, l * cfg.hidden_dim, g.num_nodes(), cfg.hidden_dim) = tape.h[l + 1];
      }
      tape.logits = concat * state.weights[depth];
      break;
    }
  }
  check_layer_finite(tape.logits, depth - 1, "logits");

  tape.probs = softmax_rows(tape.logits);
  tape.predictions.resize(g.num_nodes());
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    Eigen::Index best = 0;
    tape.probs.row(i).maxCoeff(&best);
    tape.predictions[i] = static_cast<std::int32_t>(best);
  }
  return tape;
}

LossAccuracy loss_and_accuracy(const ForwardTape& tape, const Graph& g,
                               std::span<const NodeId> split) {
  if (split.empty()) throw ConfigError("loss over an empty split");
  const auto labels = g.labels();
  double loss = 0.0;
  std::int64_t correct = 0;
  for (NodeId v : split) {
    const auto row = tape.logits.row(v);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    loss += lse - row(labels[v]);
    if (tape.predictions[v] == labels[v]) ++correct;
  }
  return {loss / static_cast<double>(split.size()),
          static_cast<double>(correct) / static_cast<double>(split.size())};
}

Gradients backward(const ForwardTape& tape, const Graph& g,
                   std::span<const MaskedAdjacencyView> adj_layers, const ModelState& state,
                   const ModelConfig& cfg, std::span<const NodeId> split,
                   const BackwardOptions& opts) {
  if (tape.state_version != state.version) {
    throw Error("stale tape: model state was stepped after the forward pass");
  }
  if (split.empty()) throw ConfigError("backward over an empty split");
  const int depth = cfg.depth;
  const NodeId n = g.num_nodes();
  const auto labels = g.labels();

  Gradients grads;
  grads.d_weights.resize(state.weights.size());
  if (opts.want_adj_grads) {
    grads.d_adj.assign(depth, {});
    for (int l = 0; l < depth; ++l) {
      if (opts.only_adj_layer < 0 || opts.only_adj_layer == l) {
        grads.d_adj[l].assign(adj_layers[l].adj->num_edges(), 0.0);
      }
    }
  }

  // d(mean CE)/d(logits) = (softmax - onehot)/|split| on split rows.
  Matrix g_logits = Matrix::Zero(n, cfg.num_classes);
  const double inv = 1.0 / static_cast<double>(split.size());
  for (NodeId v : split) {
    g_logits.row(v) = tape.probs.row(v) * inv;
    g_logits(v, labels[v]) -= inv;
  }

  auto adj_grad = [&](int l, const Matrix& g_t) {
    if (!opts.want_adj_grads) return;
    if (opts.only_adj_layer >= 0 && opts.only_adj_layer != l) return;
    const NormalizedAdjacency& a = *adj_layers[l].adj;
    const auto row_ptr = a.row_ptr();
    const auto col_idx = a.col_idx();
    auto& out = grads.d_adj[l];
    const Matrix& z = tape.z[l];
    for (NodeId i = 0; i < n; ++i) {
      const auto gt_row = g_t.row(i);
      for (EdgeId e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
        if (!adj_layers[l].alive(e)) continue;
        out[e] = gt_row.dot(z.row(col_idx[e]));
      }
    }
  };

  Matrix g_z, g_t;
  switch (cfg.variant) {
    case Variant::GCN: {
      g_t = g_logits;
      for (int l = depth - 1; l >= 0; --l) {
        adj_grad(l, g_t);
        masked_spmm_transpose(adj_layers[l], g_t, g_z);
        grads.d_weights[l] = tape.h[l].transpose() * g_z;
        if (l > 0) {
          Matrix g_h = g_z * state.weights[l].transpose();
          g_t = relu_backward(g_h, tape.t[l - 1]);
        }
      }
      break;
    }
    case Variant::ResGCN: {
      grads.d_weights[depth] = tape.h[depth].transpose() * g_logits;
      Matrix g_h = g_logits * state.weights[depth].transpose();
      for (int l = depth - 1; l >= 0; --l) {
        g_t = relu_backward(g_h, tape.t[l]);
        adj_grad(l, g_t);
        masked_spmm_transpose(adj_layers[l], g_t, g_z);
        grads.d_weights[l] = tape.h[l].transpose() * g_z;
        Matrix g_h_prev = g_z * state.weights[l].transpose();
        if (l >= 1) g_h_prev += g_h;  // residual passthrough
        g_h = std::move(g_h_prev);
      }
      break;
    }
    case Variant::JKNet: {
      const int h = cfg.hidden_dim;
      Matrix concat(n, depth * h);
      for (int l = 0; l < depth; ++l) concat.block(0, l * h, n, h) = tape.h[l + 1];
      grads.d_weights[depth] = concat.transpose() * g_logits;
      const Matrix g_concat = g_logits * state.weights[depth].transpose();
      Matrix g_h = g_concat.block(0, (depth - 1) * h, n, h);
      for (int l = depth - 1; l >= 0; --l) {
        g_t = relu_backward(g_h, tape.t[l]);
        adj_grad(l, g_t);
        masked_spmm_transpose(adj_layers[l], g_t, g_z);
        grads.d_weights[l] = tape.h[l].transpose() * g_z;
        if (l > 0) {
          g_h = g_z * state.weights[l].transpose();
          g_h += g_concat.block(0, (l - 1) * h, n, h);
        }
      }
      break;
    }
  }
  return grads;
}

void adam_step(ModelState& state, const Gradients& grads, double lr) {
  if (grads.d_weights.size() != state.weights.size()) {
    throw ConfigError("gradient/weight layer count mismatch");
  }
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    if (grads.d_weights[l].rows() != state.weights[l].rows() ||
        grads.d_weights[l].cols() != state.weights[l].cols()) {
      throw ConfigError("gradient shape mismatch at weight layer " + std::to_string(l));
    }
    if (!grads.d_weights[l].allFinite()) {
      throw NumericError("non-finite weight gradient at layer " + std::to_string(l),
                         static_cast<int>(l));
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t l = 0; l < state.weights.size(); ++l) {
    auto& m = state.adam_m[l];
    auto& v = state.adam_v[l];
    const auto& dw = grads.d_weights[l];
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * dw;
    v.array() = kAdamBeta2 * v.array() + (1.0 - kAdamBeta2) * dw.array().square();
    state.weights[l].array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
  }
  state.version += 1;
}

std::vector<double> cosine_distance_per_node(const ForwardTape& tape, int layer,
                                             std::int64_t* zero_norm_rows) {
  const Matrix& z = tape.z.at(layer);
  const Matrix& t = tape.t.at(layer);
  std::vector<double> dist(z.rows());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double nz = z.row(i).norm();
    const double nt = t.row(i).norm();
    if (nz == 0.0 || nt == 0.0) {
      dist[i] = 1.0;  // dead row: uninformative, neither forces nor blocks a stop
      if (zero_norm_rows) ++*zero_norm_rows;
      continue;
    }
    const double d = 1.0 - z.row(i).dot(t.row(i)) / (nz * nt);
    dist[i] = std::clamp(d, 0.0, 2.0);
  }
  return dist;
}

double finite_diff_grad(const Graph& g, std::span<const MaskedAdjacencyView> adj_layers,
                        const ModelState& state, const ModelConfig& cfg,
                        std::span<const NodeId> split, const PerturbTarget& target, double step) {
  auto loss_at = [&](std::span<const MaskedAdjacencyView> layers, const ModelState& s) {
    const ForwardTape tape = forward(g, layers, s, cfg);
    return loss_and_accuracy(tape, g, split).loss;
  };

  if (target.kind == PerturbTarget::Kind::Weight) {
    ModelState probe = state;
    probe.weights[target.layer](target.row, target.col) += step;
    const double up = loss_at(adj_layers, probe);
    probe.weights[target.layer](target.row, target.col) -= 2.0 * step;
    const double down = loss_at(adj_layers, probe);
    return (up - down) / (2.0 * step);
  }

  const MaskedAdjacencyView& view = adj_layers[target.layer];
  if (!view.alive(target.edge)) {
    throw Error("finite-difference target is a masked adjacency entry (layer " +
                std::to_string(target.layer) + ", edge " + std::to_string(target.edge) + ")");
  }
  const double base = view.value(target.edge);
  std::vector<MaskedAdjacencyView> layers(adj_layers.begin(), adj_layers.end());

  NormalizedAdjacency up_adj = view.adj->with_value(target.edge, base + step);
  layers[target.layer].adj = &up_adj;
  const double up = loss_at(layers, state);

  NormalizedAdjacency down_adj = view.adj->with_value(target.edge, base - step);
  layers[target.layer].adj = &down_adj;
  const double down = loss_at(layers, state);
  return (up - down) / (2.0 * step);
}

}  // namespace snoh
