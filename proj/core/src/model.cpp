#include "snoh/model.hpp"

#include <cmath>
#include <string>

namespace snoh {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::GCN: return "gcn";
    case Variant::ResGCN: return "resgcn";
    case Variant::JKNet: return "jknet";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "gcn") return Variant::GCN;
  if (name == "resgcn") return Variant::ResGCN;
  if (name == "jknet") return Variant::JKNet;
  throw ConfigError("unknown model variant '" + name + "' (expected gcn|resgcn|jknet)");
}

void ModelConfig::validate() const {
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
}

std::pair<int, int> ModelConfig::weight_shape(int idx) const {
  if (variant == Variant::GCN) {
    const int in = idx == 0 ? input_dim : hidden_dim;
    const int out = idx == depth - 1 ? num_classes : hidden_dim;
    if (depth == 1) return {input_dim, num_classes};
    return {in, out};
  }
  if (idx < depth) {
    return {idx == 0 ? input_dim : hidden_dim, hidden_dim};
  }
  // linear head
  if (variant == Variant::JKNet) return {depth * hidden_dim, num_classes};
  return {hidden_dim, num_classes};
}

ModelState init_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelState state;
  const int layers = cfg.num_weight_layers();
  state.weights.reserve(layers);
  state.adam_m.reserve(layers);
  state.adam_v.reserve(layers);
  for (int l = 0; l < layers; ++l) {
    const auto [rows, cols] = cfg.weight_shape(l);
    Matrix w(rows, cols);
    Rng rng = Rng::derive(cfg.seed, 0x9000 + static_cast<std::uint64_t>(l));
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    }
    state.weights.push_back(std::move(w));
    state.adam_m.emplace_back(Matrix::Zero(rows, cols));
    state.adam_v.emplace_back(Matrix::Zero(rows, cols));
  }
  return state;
}

}  // namespace snoh
