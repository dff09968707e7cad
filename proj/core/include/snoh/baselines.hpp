#pragma once

#include "snoh/snowflake.hpp"

namespace snoh {

// Per-epoch random edge dropping (implicit data augmentation). The persistent
// masks and the stored adjacency are never altered.
struct DropEdgeConfig {
  double drop_rate = 0.0;          // q
  std::uint64_t seed_stream = 0;   // base of the per-epoch sample seeds
  bool per_layer = false;          // resample per layer instead of per epoch

  void validate() const {
    if (drop_rate < 0.0 || drop_rate > 1.0) throw ConfigError("dropedge rate must lie in [0, 1]");
  }
};

// Adjacency-only iterative magnitude pruning with one mask shared by every
// layer, an L1 penalty on the mask and optional weight rewinding.
struct UgsLiteConfig {
  double iterative_prune_rate = 20.0;  // IPR percent per round
  int rounds = 5;
  int epochs_per_round = 200;
  bool rewind_to_init = true;
  double l1_coeff = 1e-4;

  void validate() const {
    if (!(iterative_prune_rate > 0.0 && iterative_prune_rate < 100.0)) {
      throw ConfigError("ugs iterative_prune_rate must lie in (0, 100)");
    }
    if (rounds < 1) throw ConfigError("ugs rounds must be >= 1");
    if (epochs_per_round < 1) throw ConfigError("ugs epochs_per_round must be >= 1");
    if (l1_coeff < 0.0) throw ConfigError("ugs l1_coeff must be >= 0");
  }
};

// Removes floor(rate% * surviving) non-self-loop edges uniformly at random,
// independently at each layer, then restores depth monotonicity.
void random_prune(LayerMaskSet& masks, double rate_percent, std::uint64_t seed);

// Sequentially prunes each layer down to the given surviving edge fraction
// (inheriting the shallower layer's zeros first), so the final per-layer edge
// sparsity matches `targets`. Used for sparsity-matched comparisons.
void random_prune_to_sparsity(LayerMaskSet& masks, std::span<const double> targets,
                              std::uint64_t seed);

// Per-edge Bernoulli survival mask for one epoch; self-loops always survive.
std::vector<std::uint8_t> dropedge_sample_mask(const NormalizedAdjacency& adj, double q,
                                               std::uint64_t epoch_seed);

// Spec-level form: adjacency with this epoch's dropped entries set to zero.
NormalizedAdjacency dropedge_sample(const NormalizedAdjacency& adj, double q,
                                    std::uint64_t epoch_seed);

RunArtifacts dropedge_run(const Graph& g, const DropEdgeConfig& cfg, const ModelConfig& model_cfg,
                          const TrainOptions& opts);

RunArtifacts ugs_lite_run(const Graph& g, const UgsLiteConfig& cfg, const ModelConfig& model_cfg,
                          const TrainOptions& opts);

// Per-epoch DropEdge sampling composed (AND) with the persistent snohv2
// masks; probes and metrics run on the undropped masked adjacency.
RunArtifacts dropedge_plus_snohv2(const Graph& g, const DropEdgeConfig& de_cfg,
                                  const SnoHv2Config& v2_cfg, const ModelConfig& model_cfg,
                                  const TrainOptions& opts);

}  // namespace snoh
