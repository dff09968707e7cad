#include "snoh/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <system_error>

namespace snoh {

namespace {

using nlohmann::json;

std::string loc(const std::filesystem::path& file, std::size_t line) {
  return file.filename().string() + ":" + std::to_string(line);
}

std::ifstream open_or_throw(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing or unreadable file: " + file.string());
  return in;
}

std::string_view strip(std::string_view s) {
  const auto hash = s.find('#');
  if (hash != std::string_view::npos) s = s.substr(0, hash);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <class T>
T parse_number(std::string_view tok, const std::filesystem::path& file, std::size_t line) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw DataError("non-numeric cell '" + std::string(tok) + "' at " + loc(file, line));
  }
  return value;
}

Matrix load_features(const std::filesystem::path& file) {
  auto in = open_or_throw(file);
  std::vector<std::vector<double>> rows;
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    std::string_view line = strip(linebuf);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto comma = line.find(',', start);
      const auto tok = strip(line.substr(start, comma == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : comma - start));
      row.push_back(parse_number<double>(tok, file, lineno));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError("row width " + std::to_string(row.size()) + " != " +
                      std::to_string(rows.front().size()) + " at " + loc(file, lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty features file: " + file.string());
  Matrix x(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
  }
  return x;
}

std::vector<std::int32_t> load_labels(const std::filesystem::path& file) {
  auto in = open_or_throw(file);
  std::vector<std::int32_t> labels;
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    const auto line = strip(linebuf);
    if (line.empty()) continue;
    labels.push_back(parse_number<std::int32_t>(line, file, lineno));
  }
  if (labels.empty()) throw DataError("empty labels file: " + file.string());
  return labels;
}

struct EdgeLoad {
  std::vector<std::pair<NodeId, NodeId>> edges;
  int duplicate_lines = 0;
};

EdgeLoad load_edges(const std::filesystem::path& file, NodeId num_nodes, bool directed) {
  auto in = open_or_throw(file);
  std::set<std::pair<NodeId, NodeId>> seen;
  EdgeLoad out;
  std::string linebuf;
  std::size_t lineno = 0;
  while (std::getline(in, linebuf)) {
    ++lineno;
    const auto line = strip(linebuf);
    if (line.empty()) continue;
    const auto sep = line.find_first_of(" \t");
    if (sep == std::string_view::npos) {
      throw DataError("expected 'src<TAB>dst' at " + loc(file, lineno));
    }
    const NodeId src = parse_number<NodeId>(strip(line.substr(0, sep)), file, lineno);
    const NodeId dst = parse_number<NodeId>(strip(line.substr(sep + 1)), file, lineno);
    if (src < 0 || src >= num_nodes || dst < 0 || dst >= num_nodes) {
      throw DataError("dangling edge index (" + std::to_string(src) + ", " +
                      std::to_string(dst) + ") at " + loc(file, lineno) + "; num_nodes = " +
                      std::to_string(num_nodes));
    }
    std::pair<NodeId, NodeId> key = directed ? std::pair{src, dst}
                                             : std::pair{std::min(src, dst), std::max(src, dst)};
    if (!seen.insert(key).second) {
      ++out.duplicate_lines;
      continue;
    }
    out.edges.emplace_back(key.first, key.second);
    if (!directed && key.first != key.second) out.edges.emplace_back(key.second, key.first);
  }
  return out;
}

std::vector<NodeId> json_nodes(const json& arr, const char* name) {
  if (!arr.is_array()) throw DataError(std::string("splits.json: '") + name + "' must be an array");
  std::vector<NodeId> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.push_back(v.get<NodeId>());
  return out;
}

// Shortest round-trip decimal form.
std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

DatasetBundle load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("dataset directory not found: " + dir.string());
  }
  Matrix features = load_features(dir / "features.csv");
  std::vector<std::int32_t> labels = load_labels(dir / "labels.csv");
  const NodeId n = static_cast<NodeId>(features.rows());
  if (static_cast<NodeId>(labels.size()) != n) {
    throw DataError("labels.csv has " + std::to_string(labels.size()) + " rows but features.csv has " +
                    std::to_string(n));
  }

  DatasetMeta meta;
  meta.name = dir.filename().string();
  const auto meta_path = dir / "meta.json";
  if (std::filesystem::exists(meta_path)) {
    auto in = open_or_throw(meta_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError("meta.json: " + std::string(e.what()));
    }
    meta.directed = j.value("directed", false);
    meta.num_classes = j.value("num_classes", 0);
    meta.name = j.value("name", meta.name);
  }
  if (meta.num_classes == 0) {
    meta.num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  }

  EdgeLoad edges = load_edges(dir / "edges.tsv", n, meta.directed);

  Split split;
  const auto splits_path = dir / "splits.json";
  if (std::filesystem::exists(splits_path)) {
    auto in = open_or_throw(splits_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw DataError("splits.json: " + std::string(e.what()));
    }
    split.train = json_nodes(j.at("train"), "train");
    split.val = json_nodes(j.at("val"), "val");
    split.test = json_nodes(j.at("test"), "test");
  }

  DatasetBundle bundle{
      Graph(n, std::move(edges.edges), std::move(features), std::move(labels), meta.num_classes,
            std::move(split)),
      meta, edges.duplicate_lines};
  return bundle;
}

void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Graph& g = bundle.graph;

  {
    std::ofstream out(dir / "edges.tsv");
    auto row_ptr = g.row_ptr();
    auto col = g.col_idx();
    for (NodeId i = 0; i < g.num_nodes(); ++i) {
      for (EdgeId e = row_ptr[i]; e < row_ptr[i + 1]; ++e) {
        const NodeId j = col[e];
        if (!bundle.meta.directed && j < i) continue;  // canonical min-first pair
        out << i << '\t' << j << '\n';
      }
    }
  }
  {
    std::ofstream out(dir / "features.csv");
    const Matrix& x = g.features();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (j) out << ',';
        out << format_double(x(i, j));
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    for (auto label : g.labels()) out << label << '\n';
  }
  {
    json meta;
    meta["directed"] = bundle.meta.directed;
    meta["num_classes"] = bundle.meta.num_classes;
    meta["name"] = bundle.meta.name;
    std::ofstream out(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
  if (!g.split().empty()) {
    auto sorted = [](std::vector<NodeId> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    json splits;
    splits["train"] = sorted(g.split().train);
    splits["val"] = sorted(g.split().val);
    splits["test"] = sorted(g.split().test);
    std::ofstream out(dir / "splits.json");
    out << splits.dump(2) << '\n';
  }
}

Split make_split(const Graph& g, std::array<double, 3> ratios, std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1, got " + std::to_string(total));
  }
  const NodeId n = g.num_nodes();
  if (n < 3) throw ConfigError("graph too small to split (need >= 3 nodes)");

  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  Rng rng = Rng::derive(seed, /*stream=*/0x511717);
  rng.shuffle(perm);

  const NodeId n_val = static_cast<NodeId>(ratios[1] * n);
  const NodeId n_test = static_cast<NodeId>(ratios[2] * n);
  const NodeId n_train = n - n_val - n_test;  // floor remainder goes to train

  Split s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  return s;
}

DatasetBundle synth_sbm(const SbmConfig& cfg) {
  if (cfg.block_sizes.empty()) throw ConfigError("sbm: need at least one block");
  if (cfg.p_in < 0 || cfg.p_in > 1 || cfg.p_out < 0 || cfg.p_out > 1) {
    throw ConfigError("sbm: probabilities must lie in [0, 1]");
  }
  const int num_blocks = static_cast<int>(cfg.block_sizes.size());
  const NodeId n = std::accumulate(cfg.block_sizes.begin(), cfg.block_sizes.end(), NodeId{0});

  std::vector<std::int32_t> labels(n);
  {
    NodeId at = 0;
    for (int b = 0; b < num_blocks; ++b) {
      for (NodeId k = 0; k < cfg.block_sizes[b]; ++k) labels[at++] = b;
    }
  }

  Rng edge_rng = Rng::derive(cfg.seed, 1);
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? cfg.p_in : cfg.p_out;
      if (edge_rng.bernoulli(p)) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
    }
  }

  const int f = cfg.feature_dim > 0 ? cfg.feature_dim : num_blocks;
  Rng feat_rng = Rng::derive(cfg.seed, 2);
  Matrix x = Matrix::Zero(n, f);
  for (NodeId i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) x(i, j) = cfg.noise_std * feat_rng.gaussian();
    if (cfg.feature_mode == SbmConfig::FeatureMode::OneHotPlusNoise && labels[i] < f) {
      x(i, labels[i]) += 1.0;
    }
  }

  DatasetBundle bundle{
      Graph(n, std::move(edges), std::move(x), std::move(labels), num_blocks),
      DatasetMeta{false, num_blocks, "sbm"}, 0};
  return bundle;
}

}  // namespace snoh
