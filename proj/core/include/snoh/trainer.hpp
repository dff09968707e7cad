#pragma once

#include "snoh/baselines.hpp"
#include "snoh/dataset.hpp"
#include "snoh/snowflake.hpp"

namespace snoh {

enum class Method {
  None,
  SnoHv1,
  SnoHv2,
  RandomPrune,
  UgsLite,
  DropEdge,
  DropEdgePlusSnoHv2,
};

const char* method_name(Method m);
Method method_from_name(const std::string& name);

// One experiment: dataset, model, method and its parameters.
struct RunConfig {
  std::string dataset_dir;
  std::string out_dir;
  Method method = Method::None;

  ModelConfig model;  // input_dim/num_classes filled from the dataset when 0
  TrainOptions train;

  SnoHv1Config v1;
  SnoHv2Config v2;
  DropEdgeConfig dropedge;
  UgsLiteConfig ugs;
  double random_rate = 50.0;                 // method random: percent per layer
  std::vector<double> random_target_es;      // optional per-layer target edge sparsity

  // Split handling: use splits.json when present unless force_random_split.
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
  bool force_random_split = false;

  void validate() const;
};

// Plain full-batch training on a fixed mask set ("none" and "random" methods).
RunArtifacts train_fixed_masks(const Graph& g, LayerMaskSet masks, const ModelConfig& model_cfg,
                               const TrainOptions& opts);

// Resolves the split (random when absent or forced), fills model dims from the
// dataset and dispatches on method.
RunArtifacts run_experiment(const DatasetBundle& bundle, const RunConfig& cfg);

// Same, with the graph already split and dims resolved.
RunArtifacts run_method(const Graph& g, const RunConfig& cfg);

}  // namespace snoh
