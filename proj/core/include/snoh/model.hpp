#pragma once

#include "snoh/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace snoh {

enum class Variant { GCN, ResGCN, JKNet };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::GCN;
  int depth = 2;       // number of aggregation layers
  int input_dim = 0;
  int hidden_dim = 64;
  int num_classes = 0;
  std::uint64_t seed = 0;

  // GCN folds the classifier into its last aggregation layer; ResGCN and
  // JKNet have a separate linear head.
  int num_weight_layers() const {
    return variant == Variant::GCN ? depth : depth + 1;
  }
  // (rows, cols) of weight matrix `idx`.
  std::pair<int, int> weight_shape(int idx) const;

  void validate() const;
};

struct ModelState {
  std::vector<Matrix> weights;
  std::vector<Matrix> adam_m, adam_v;
  std::int64_t step_count = 0;
  // Bumped by every optimizer step; lets tapes detect staleness.
  std::uint64_t version = 0;
};

// Glorot-uniform weights, zero Adam moments; bit-identical for equal seeds.
ModelState init_params(const ModelConfig& cfg);

struct TrainOptions {
  int epochs = 1000;
  double lr = 0.01;
  std::uint64_t seed = 0;
  bool deterministic = false;
  // Record mean cosine distances every N epochs (0 = off). Controllers with
  // their own probe schedule (snohv2) use that schedule instead.
  int probe_every = 30;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(lr > 0)) throw ConfigError("learning rate must be positive");
    if (probe_every < 0) throw ConfigError("probe_every must be >= 0");
  }
};

}  // namespace snoh
