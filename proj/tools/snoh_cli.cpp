// Command-line front end: single runs, seed sweeps, gradient verification and
// homophily measurement, with CSV/JSON outputs under a per-run directory.

#include "snoh/gradcheck.hpp"
#include "snoh/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

namespace {

using nlohmann::json;
using namespace snoh;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDataset = 3;
constexpr int kExitNumeric = 4;

// --- key=value configuration ------------------------------------------------

using KvMap = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void parse_kv_line(const std::string& raw, KvMap& kv, const std::string& where) {
  std::string line = raw;
  if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
  line = trim(line);
  if (line.empty()) return;
  const auto eq = line.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(where + ": expected key=value, got '" + line + "'");
  }
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  if (key.empty()) throw ConfigError(where + ": empty key");
  kv[key] = value;
}

KvMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  KvMap kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    parse_kv_line(line, kv, path + ":" + std::to_string(lineno));
  }
  return kv;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> to_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const std::string tok =
        trim(v.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!tok.empty()) out.push_back(to_double(key, tok));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

RunConfig build_run_config(const KvMap& kv) {
  RunConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key == "dataset") cfg.dataset_dir = value;
    else if (key == "out") cfg.out_dir = value;
    else if (key == "method") cfg.method = method_from_name(value);
    else if (key == "model.variant") cfg.model.variant = variant_from_name(value);
    else if (key == "model.depth") cfg.model.depth = static_cast<int>(to_int(key, value));
    else if (key == "model.hidden") cfg.model.hidden_dim = static_cast<int>(to_int(key, value));
    else if (key == "model.seed") cfg.model.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "train.epochs") cfg.train.epochs = static_cast<int>(to_int(key, value));
    else if (key == "train.lr") cfg.train.lr = to_double(key, value);
    else if (key == "train.seed") cfg.train.seed = static_cast<std::uint64_t>(to_int(key, value));
    else if (key == "train.deterministic") cfg.train.deterministic = to_bool(key, value);
    else if (key == "train.probe_every") cfg.train.probe_every = static_cast<int>(to_int(key, value));
    else if (key == "split.random") cfg.force_random_split = to_bool(key, value);
    else if (key == "split.ratios") {
      const auto r = to_double_list(key, value);
      if (r.size() != 3) throw ConfigError("split.ratios needs three values");
      cfg.split_ratios = {r[0], r[1], r[2]};
    } else if (key == "v1.p") cfg.v1.prune_rate = to_double(key, value);
    else if (key == "v1.k") cfg.v1.window = static_cast<int>(to_int(key, value));
    else if (key == "v1.scheme") cfg.v1.scheme = scheme_from_name(value);
    else if (key == "v1.rounds") cfg.v1.iterative_rounds = static_cast<int>(to_int(key, value));
    else if (key == "v1.reinit_epochs") cfg.v1.reinit_epochs = static_cast<int>(to_int(key, value));
    else if (key == "v2.mode") {
      if (value == "absolute") cfg.v2.mode = ThresholdMode::Absolute;
      else if (value == "relative") cfg.v2.mode = ThresholdMode::RelativeToFirstLayer;
      else throw ConfigError("v2.mode must be absolute|relative");
    } else if (key == "v2.rho") cfg.v2.rho = to_double(key, value);
    else if (key == "v2.p") cfg.v2.relative_percent = to_double(key, value);
    else if (key == "v2.k") cfg.v2.check_every = static_cast<int>(to_int(key, value));
    else if (key == "v2.warmup") cfg.v2.warmup = static_cast<int>(to_int(key, value));
    else if (key == "de.q") cfg.dropedge.drop_rate = to_double(key, value);
    else if (key == "de.per_layer") cfg.dropedge.per_layer = to_bool(key, value);
    else if (key == "ugs.ipr") cfg.ugs.iterative_prune_rate = to_double(key, value);
    else if (key == "ugs.rounds") cfg.ugs.rounds = static_cast<int>(to_int(key, value));
    else if (key == "ugs.epochs_per_round") cfg.ugs.epochs_per_round = static_cast<int>(to_int(key, value));
    else if (key == "ugs.rewind") cfg.ugs.rewind_to_init = to_bool(key, value);
    else if (key == "ugs.l1") cfg.ugs.l1_coeff = to_double(key, value);
    else if (key == "rp.rate") cfg.random_rate = to_double(key, value);
    else if (key == "rp.target_es") cfg.random_target_es = to_double_list(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (cfg.dataset_dir.empty()) throw ConfigError("config key 'dataset' is required");
  cfg.dropedge.seed_stream = mix_seed(cfg.train.seed, 0xD20);
  cfg.validate();
  return cfg;
}

json config_echo(const RunConfig& cfg, const DatasetBundle& bundle) {
  json j;
  j["dataset"] = cfg.dataset_dir;
  j["dataset_name"] = bundle.meta.name;
  j["num_nodes"] = bundle.graph.num_nodes();
  j["num_classes"] = bundle.graph.num_classes();
  j["feature_dim"] = bundle.graph.feature_dim();
  j["out"] = cfg.out_dir;
  j["method"] = method_name(cfg.method);
  j["model"] = {{"variant", variant_name(cfg.model.variant)},
                {"depth", cfg.model.depth},
                {"hidden", cfg.model.hidden_dim},
                {"seed", cfg.model.seed}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"lr", cfg.train.lr},
                {"seed", cfg.train.seed},
                {"deterministic", cfg.train.deterministic},
                {"probe_every", cfg.train.probe_every}};
  j["split"] = {{"ratios", cfg.split_ratios}, {"random", cfg.force_random_split}};
  switch (cfg.method) {
    case Method::SnoHv1:
      j["v1"] = {{"p", cfg.v1.prune_rate},
                 {"k", cfg.v1.window},
                 {"scheme", scheme_name(cfg.v1.scheme)},
                 {"rounds", cfg.v1.iterative_rounds},
                 {"reinit_epochs", cfg.v1.reinit_epochs}};
      break;
    case Method::SnoHv2:
    case Method::DropEdgePlusSnoHv2:
      j["v2"] = {{"mode", cfg.v2.mode == ThresholdMode::Absolute ? "absolute" : "relative"},
                 {"rho", cfg.v2.rho},
                 {"p", cfg.v2.relative_percent},
                 {"k", cfg.v2.check_every},
                 {"warmup", cfg.v2.warmup}};
      if (cfg.method == Method::DropEdgePlusSnoHv2) {
        j["dropedge"] = {{"q", cfg.dropedge.drop_rate}, {"per_layer", cfg.dropedge.per_layer}};
      }
      break;
    case Method::DropEdge:
      j["dropedge"] = {{"q", cfg.dropedge.drop_rate}, {"per_layer", cfg.dropedge.per_layer}};
      break;
    case Method::UgsLite:
      j["ugs"] = {{"ipr", cfg.ugs.iterative_prune_rate},
                  {"rounds", cfg.ugs.rounds},
                  {"epochs_per_round", cfg.ugs.epochs_per_round},
                  {"rewind", cfg.ugs.rewind_to_init},
                  {"l1", cfg.ugs.l1_coeff}};
      break;
    case Method::RandomPrune:
      j["rp"] = {{"rate", cfg.random_rate}, {"target_es", cfg.random_target_es}};
      break;
    case Method::None: break;
  }
  return j;
}

std::string default_out_dir(const RunConfig& cfg) {
  const char* root = std::getenv("SNOH_OUT_ROOT");
  const std::string base = root && *root ? root : "runs";
  return base + "/" + method_name(cfg.method) + "_seed" + std::to_string(cfg.train.seed);
}

// --- subcommands -------------------------------------------------------------

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::string out;

  RunConfig resolve() const {
    KvMap kv;
    if (!config_path.empty()) kv = load_config_file(config_path);
    for (const auto& s : sets) parse_kv_line(s, kv, "--set");
    if (seed) kv["train.seed"] = std::to_string(*seed);
    if (deterministic) kv["train.deterministic"] = "1";
    if (!out.empty()) kv["out"] = out;
    return build_run_config(kv);
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value configuration file");
  cmd->add_option("--set", args.sets, "override: key=value (repeatable)");
  cmd->add_option("--seed", args.seed, "training seed (overrides config)");
  cmd->add_flag("--deterministic", args.deterministic, "force deterministic execution");
  cmd->add_option("--out", args.out, "output directory");
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = args.resolve();
  if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir(cfg);
  const DatasetBundle bundle = load_dataset(cfg.dataset_dir);
  RunArtifacts artifacts = run_experiment(bundle, cfg);
  artifacts.report.config_json = config_echo(cfg, bundle).dump();
  write_run_outputs(artifacts.report, cfg.out_dir);
  std::printf("method=%s epochs=%d best_val_epoch=%d val=%.4f test=%.4f out=%s\n",
              method_name(cfg.method), cfg.train.epochs, artifacts.report.best_val_epoch,
              artifacts.report.best_val_acc, artifacts.report.test_acc_at_best_val,
              cfg.out_dir.c_str());
  return kExitOk;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int cmd_sweep(const CommonArgs& args, const std::vector<std::uint64_t>& seeds, int jobs) {
  if (seeds.empty()) throw ConfigError("sweep needs at least one seed (--seeds)");
  RunConfig base = args.resolve();
  if (base.out_dir.empty()) base.out_dir = default_out_dir(base) + "_sweep";
  const DatasetBundle bundle = load_dataset(base.dataset_dir);
  std::filesystem::create_directories(base.out_dir);

  struct Row {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    int best_val_epoch = 0;
    double test_acc = 0.0;
    double edge_sparsity = 0.0;
    double node_sparsity = 0.0;
  };
  std::vector<Row> rows(seeds.size());

  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= seeds.size()) return;
      Row row;
      row.seed = seeds[k];
      RunConfig cfg = base;
      cfg.train.seed = seeds[k];
      cfg.model.seed = 0;  // rederive from the run seed
      cfg.dropedge.seed_stream = mix_seed(cfg.train.seed, 0xD20);
      cfg.out_dir = base.out_dir + "/seed_" + std::to_string(seeds[k]);
      try {
        RunArtifacts artifacts = run_experiment(bundle, cfg);
        artifacts.report.config_json = config_echo(cfg, bundle).dump();
        write_run_outputs(artifacts.report, cfg.out_dir);
        row.ok = true;
        row.best_val_epoch = artifacts.report.best_val_epoch;
        row.test_acc = artifacts.report.test_acc_at_best_val;
        row.edge_sparsity = mean_of(artifacts.report.final_edge_sparsity);
        row.node_sparsity = mean_of(artifacts.report.final_node_sparsity);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (row.ok) {
          std::printf("seed %llu: test=%.4f (best val epoch %d)\n",
                      static_cast<unsigned long long>(row.seed), row.test_acc,
                      row.best_val_epoch);
        } else {
          std::fprintf(stderr, "seed %llu failed: %s\n",
                       static_cast<unsigned long long>(row.seed), row.error.c_str());
        }
      }
      rows[k] = std::move(row);
    }
  };

  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<double> accs, edge_sp, node_sp;
  for (const Row& r : rows) {
    if (!r.ok) continue;
    accs.push_back(r.test_acc);
    edge_sp.push_back(r.edge_sparsity);
    node_sp.push_back(r.node_sparsity);
  }
  {
    std::ofstream out(base.out_dir + "/sweep.csv");
    out << std::setprecision(17);
    out << "seed,best_val_epoch,test_acc,final_edge_sparsity,final_node_sparsity,"
           "test_acc_std,edge_sparsity_std,node_sparsity_std\n";
    for (const Row& r : rows) {
      if (!r.ok) continue;
      out << r.seed << ',' << r.best_val_epoch << ',' << r.test_acc << ',' << r.edge_sparsity
          << ',' << r.node_sparsity << ",0,0,0\n";
    }
    // Aggregate row: seed column -1, value columns are means, std columns stds.
    out << "-1,0," << mean_of(accs) << ',' << mean_of(edge_sp) << ',' << mean_of(node_sp) << ','
        << std_of(accs) << ',' << std_of(edge_sp) << ',' << std_of(node_sp) << '\n';
  }
  std::printf("sweep: %zu/%zu runs ok, mean test=%.4f +- %.4f -> %s/sweep.csv\n", accs.size(),
              seeds.size(), mean_of(accs), std_of(accs), base.out_dir.c_str());
  const bool all_ok = accs.size() == seeds.size();
  return all_ok ? kExitOk : 1;
}

int cmd_gradcheck(const GradCheckOptions& opts) {
  if (opts.trials == 0) {
    std::printf("warning: 0 trials requested; vacuous pass\n");
    return kExitOk;
  }
  const GradCheckResult res = gradcheck(opts);
  std::printf("%-8s %-12s %12s %10s\n", "variant", "target", "max_rel_err", "targets");
  const char* names[3] = {"gcn", "resgcn", "jknet"};
  for (int v = 0; v < 3; ++v) {
    std::printf("%-8s %-12s %12.3e %10lld\n", names[v], "weight", res.weight[v].max_rel_err,
                static_cast<long long>(res.weight[v].targets));
    std::printf("%-8s %-12s %12.3e %10lld\n", names[v], "adjacency",
                res.adjacency[v].max_rel_err, static_cast<long long>(res.adjacency[v].targets));
  }
  std::printf("instances=%d resampled=%d worst=%.3e tolerance=%.1e -> %s\n", res.instances,
              res.resampled, res.max_rel_err(), opts.tolerance,
              res.pass(opts.tolerance) ? "PASS" : "FAIL");
  return res.pass(opts.tolerance) ? kExitOk : 1;
}

int cmd_homophily(const std::string& dataset) {
  const DatasetBundle bundle = load_dataset(dataset);
  const HomophilyResult res = homophily_ratio(bundle.graph);
  if (res.skipped > 0) {
    std::fprintf(stderr, "warning: %d isolated node(s) excluded from the mean\n", res.skipped);
  }
  std::printf("%.4f\n", res.ratio);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise adjacency pruning and per-node depth early-stopping for deep GNNs"};
  app.require_subcommand(1);

  CommonArgs train_args;
  auto* train = app.add_subcommand("train", "run one training configuration");
  add_common(train, train_args);

  CommonArgs sweep_args;
  std::vector<std::uint64_t> sweep_seeds;
  int sweep_jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run one configuration across seeds");
  add_common(sweep, sweep_args);
  sweep->add_option("--seeds", sweep_seeds, "seed list")->delimiter(',')->required();
  sweep->add_option("--jobs", sweep_jobs, "parallel runs");

  GradCheckOptions gc;
  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "verify gradients by finite differences");
  gradcheck_cmd->add_option("--trials", gc.trials, "random instances to check");
  gradcheck_cmd->add_option("--tolerance", gc.tolerance, "max relative error");
  gradcheck_cmd->add_option("--max-nodes", gc.max_nodes, "largest instance size");
  gradcheck_cmd->add_option("--max-depth", gc.max_depth, "largest depth");
  gradcheck_cmd->add_option("--step", gc.step, "finite-difference step");
  gradcheck_cmd->add_option("--seed", gc.seed, "instance generator seed");

  std::string homophily_dataset;
  auto* homophily = app.add_subcommand("homophily", "print a dataset's homophily ratio");
  homophily->add_option("--dataset", homophily_dataset, "dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args, sweep_seeds, sweep_jobs);
    if (gradcheck_cmd->parsed()) return cmd_gradcheck(gc);
    if (homophily->parsed()) return cmd_homophily(homophily_dataset);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "invalid config: %s\n", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "dataset error: %s\n", e.what());
    return kExitDataset;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical abort at layer %d, epoch %d: %s\n", e.layer(), e.epoch(),
                 e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitConfig;
}
