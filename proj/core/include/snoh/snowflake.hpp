#pragma once

#include "snoh/engine.hpp"
#include "snoh/report.hpp"

#include <map>

namespace snoh {

enum class Scheme { OneShot, Iterative, Reinit };

const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

// Gradient-guided per-layer pruner. Layers are pruned deepest-first; each
// event removes the prune_rate% smallest accumulated |dL/dA| entries at the
// target layer and propagates the zeros to all deeper layers.
struct SnoHv1Config {
  double prune_rate = 30.0;  // percent removed per layer event
  int window = 30;           // epochs between prune events; also the |grad| accumulation span
  Scheme scheme = Scheme::OneShot;
  int iterative_rounds = 1;  // sub-events per layer (Scheme::Iterative)
  int reinit_epochs = 300;   // epochs between events after a re-init (Scheme::Reinit)

  void validate() const;
};

enum class ThresholdMode { Absolute, RelativeToFirstLayer };

// Cosine-distance early-stopping controller: when a node's distance between
// its pre- and post-aggregation rows falls below the threshold at some layer,
// its incoming non-self-loop edges are pruned there and at all deeper layers.
struct SnoHv2Config {
  ThresholdMode mode = ThresholdMode::Absolute;
  double rho = 0.05;               // absolute threshold
  double relative_percent = 5.0;   // p% of the first-layer distance (relative mode)
  int check_every = 30;
  int warmup = 50;                 // epochs before the first probe

  void validate() const;
};

struct NodeStop {
  NodeId node = 0;
  int layer = 0;  // 0-based first fully-pruned layer (1-based stop depth - 1)
};

struct PruneState {
  LayerMaskSet masks;
  int next_layer_to_prune = -1;  // v1 sequencing, depth-1 down to 0; -1 = done
  std::vector<PruneEvent> events;
};

struct RunArtifacts {
  ModelState state;
  PruneState prune;
  RunReport report;
};

// Removes floor(rate% * surviving non-self-loop count) edges with the smallest
// accumulated gradient magnitude at `layer` (ties broken by ascending edge
// index), then propagates the zeros to deeper layers. Returns the removed
// edges; empty when there was nothing to remove.
std::vector<EdgeId> snohv1_prune_layer(std::span<const double> grad_accum, LayerMaskSet& masks,
                                       int layer, double prune_rate_percent);

// Stops per node: the smallest layer >= 1 whose distance falls below the
// threshold (absolute rho, or p% of the layer-0 reference distance).
// Already-stopped nodes are skipped; layer 0 is never a stop.
std::vector<NodeStop> snohv2_evaluate_stops(const ForwardTape& tape, const LayerMaskSet& masks,
                                            const SnoHv2Config& cfg,
                                            std::span<const double> first_layer_distances);

// Applies stops to the mask set; records one NodesStopped event per layer and
// a Warning note for stops ignored because the node already stopped shallower.
void snohv2_prune(LayerMaskSet& masks, std::span<const NodeStop> stops,
                  std::vector<PruneEvent>* events, int epoch);

struct StopHistogram {
  std::map<int, std::int64_t> by_depth;  // 1-based stop depth -> node count
  std::int64_t never_stopped = 0;
};

StopHistogram stop_depth_report(const PruneState& prune);

RunArtifacts snohv1_run(const Graph& g, const SnoHv1Config& cfg, const ModelConfig& model_cfg,
                        const TrainOptions& opts);
RunArtifacts snohv2_run(const Graph& g, const SnoHv2Config& cfg, const ModelConfig& model_cfg,
                        const TrainOptions& opts);

}  // namespace snoh
