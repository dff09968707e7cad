#pragma once

#include "snoh/graph.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace snoh {

struct EpochRow {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

struct ProbeRow {
  int epoch = 0;
  std::vector<double> mean_distance;  // per layer
};

struct PruneEvent {
  enum class Kind { EdgesRemoved, NodesStopped, Warning };
  int epoch = 0;
  int layer = -1;
  Kind kind = Kind::Warning;
  std::int64_t count = 0;
  std::string note;
};

struct RunReport {
  std::vector<EpochRow> epochs;
  std::vector<double> final_node_sparsity;  // per layer
  std::vector<double> final_edge_sparsity;  // per layer
  std::vector<ProbeRow> probes;
  // 1-based stop depth -> node count; nodes that never stopped are separate.
  std::map<int, std::int64_t> stop_histogram;
  std::int64_t never_stopped = 0;

  int best_val_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc_at_best_val = 0.0;
  double wall_clock_sec = 0.0;
  std::int64_t zero_norm_rows = 0;
  std::string config_json;  // resolved config echo, filled by the caller
};

// Tracks per-epoch metrics and the best-validation checkpoint.
class ReportBuilder {
 public:
  void add_epoch(int epoch, double train_loss, double train_acc, double val_acc, double test_acc);
  void add_probe(int epoch, std::vector<double> mean_distance);
  void finalize_masks(const LayerMaskSet& masks);

  RunReport take() { return std::move(report_); }
  RunReport& report() { return report_; }

 private:
  RunReport report_;
};

// report.csv: epoch,train_loss,train_acc,val_acc,test_acc
void write_report_csv(const RunReport& r, const std::filesystem::path& file);
// sparsity.csv: layer,node_sparsity,edge_sparsity (layer 0-based)
void write_sparsity_csv(const RunReport& r, const std::filesystem::path& file);
// distances.csv: epoch,layer,mean_cosine_distance
void write_distances_csv(const RunReport& r, const std::filesystem::path& file);
// stops.csv: stop_depth,node_count (1-based depth; "inf" for never stopped)
void write_stops_csv(const RunReport& r, const std::filesystem::path& file);
// config.echo.json: resolved config plus result summary
void write_config_echo(const RunReport& r, const std::filesystem::path& file);

// All of the above into `dir`.
void write_run_outputs(const RunReport& r, const std::filesystem::path& dir);

}  // namespace snoh
