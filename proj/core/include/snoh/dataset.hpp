#pragma once

#include "snoh/graph.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>

namespace snoh {

struct DatasetMeta {
  bool directed = false;
  int num_classes = 0;
  std::string name;
};

struct DatasetBundle {
  Graph graph;
  DatasetMeta meta;
  int warnings = 0;  // deduplicated edge lines etc.
};

// Loads edges.tsv / features.csv / labels.csv (+ optional splits.json,
// meta.json) from a directory. Undirected inputs are symmetrized; duplicate
// edge lines are dropped with a warning count. Errors carry file and line.
DatasetBundle load_dataset(const std::filesystem::path& dir);

// Canonical plain-text emission; load_dataset(write_dataset(b)) is an
// identity and re-writing is byte-stable.
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

// Uniform random disjoint partition; floor-based sizes with the remainder
// assigned to train. Deterministic per seed.
Split make_split(const Graph& g, std::array<double, 3> ratios, std::uint64_t seed);

struct SbmConfig {
  std::vector<NodeId> block_sizes;
  double p_in = 0.1;
  double p_out = 0.01;
  enum class FeatureMode { OneHotPlusNoise, PureNoise };
  FeatureMode feature_mode = FeatureMode::OneHotPlusNoise;
  int feature_dim = 0;  // 0 = number of blocks
  double noise_std = 0.1;
  std::uint64_t seed = 0;
};

// Stochastic block model fixture: labels are block ids, features per mode.
DatasetBundle synth_sbm(const SbmConfig& cfg);

}  // namespace snoh
