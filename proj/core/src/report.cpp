#include "snoh/report.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>

namespace snoh {

namespace {

std::ofstream open_out(const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void ReportBuilder::add_epoch(int epoch, double train_loss, double train_acc, double val_acc,
                              double test_acc) {
  report_.epochs.push_back({epoch, train_loss, train_acc, val_acc, test_acc});
  if (report_.epochs.size() == 1 || val_acc > report_.best_val_acc) {
    report_.best_val_acc = val_acc;
    report_.best_val_epoch = epoch;
    report_.test_acc_at_best_val = test_acc;
  }
}

void ReportBuilder::add_probe(int epoch, std::vector<double> mean_distance) {
  report_.probes.push_back({epoch, std::move(mean_distance)});
}

void ReportBuilder::finalize_masks(const LayerMaskSet& masks) {
  report_.final_node_sparsity.clear();
  report_.final_edge_sparsity.clear();
  for (int l = 0; l < masks.depth(); ++l) {
    report_.final_node_sparsity.push_back(masks.node_sparsity(l));
    report_.final_edge_sparsity.push_back(masks.edge_sparsity(l));
  }
  report_.stop_histogram.clear();
  report_.never_stopped = 0;
  for (NodeId i = 0; i < masks.num_nodes(); ++i) {
    const int r = masks.stop_layer(i);
    if (r == LayerMaskSet::kNeverStops) {
      ++report_.never_stopped;
    } else {
      ++report_.stop_histogram[r + 1];  // report 1-based stop depths
    }
  }
}

void write_report_csv(const RunReport& r, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "epoch,train_loss,train_acc,val_acc,test_acc\n";
  for (const auto& row : r.epochs) {
    out << row.epoch << ',' << row.train_loss << ',' << row.train_acc << ',' << row.val_acc << ','
        << row.test_acc << '\n';
  }
}

void write_sparsity_csv(const RunReport& r, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "layer,node_sparsity,edge_sparsity\n";
  for (std::size_t l = 0; l < r.final_edge_sparsity.size(); ++l) {
    out << l << ',' << r.final_node_sparsity[l] << ',' << r.final_edge_sparsity[l] << '\n';
  }
}

void write_distances_csv(const RunReport& r, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "epoch,layer,mean_cosine_distance\n";
  for (const auto& probe : r.probes) {
    for (std::size_t l = 0; l < probe.mean_distance.size(); ++l) {
      out << probe.epoch << ',' << l << ',' << probe.mean_distance[l] << '\n';
    }
  }
}

void write_stops_csv(const RunReport& r, const std::filesystem::path& file) {
  auto out = open_out(file);
  out << "stop_depth,node_count\n";
  for (const auto& [depth, count] : r.stop_histogram) {
    out << depth << ',' << count << '\n';
  }
  out << "inf," << r.never_stopped << '\n';
}

void write_config_echo(const RunReport& r, const std::filesystem::path& file) {
  nlohmann::json j;
  if (!r.config_json.empty()) {
    j["config"] = nlohmann::json::parse(r.config_json);
  }
  j["result"]["best_val_epoch"] = r.best_val_epoch;
  j["result"]["best_val_acc"] = r.best_val_acc;
  j["result"]["test_acc_at_best_val"] = r.test_acc_at_best_val;
  j["result"]["wall_clock_sec"] = r.wall_clock_sec;
  j["result"]["zero_norm_rows"] = r.zero_norm_rows;
  auto out = open_out(file);
  out << j.dump(2) << '\n';
}

void write_run_outputs(const RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_report_csv(r, dir / "report.csv");
  write_sparsity_csv(r, dir / "sparsity.csv");
  write_distances_csv(r, dir / "distances.csv");
  write_stops_csv(r, dir / "stops.csv");
  write_config_echo(r, dir / "config.echo.json");
}

}  // namespace snoh
