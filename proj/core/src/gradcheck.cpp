#include "snoh/gradcheck.hpp"

#include "snoh/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace snoh {

double GradCheckResult::max_rel_err() const {
  double worst = 0.0;
  for (const auto& c : weight) worst = std::max(worst, c.max_rel_err);
  for (const auto& c : adjacency) worst = std::max(worst, c.max_rel_err);
  return worst;
}

double gradcheck_rel_err(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
  return std::abs(analytic - numeric) / scale;
}

namespace {

struct Instance {
  Graph graph;
  NormalizedAdjacency adj;
  LayerMaskSet masks;
  ModelConfig cfg;
  ModelState state;
};

Instance make_instance(Rng& rng, const GradCheckOptions& opts, Variant variant) {
  const NodeId n = 4 + static_cast<NodeId>(rng.next_below(opts.max_nodes - 3));
  const int depth = 1 + static_cast<int>(rng.next_below(opts.max_depth));
  const int f = 3 + static_cast<int>(rng.next_below(4));
  const int h = 3 + static_cast<int>(rng.next_below(4));
  const int c = 2 + static_cast<int>(rng.next_below(3));

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j = i + 1; j < n; ++j) {
      if (rng.bernoulli(0.35)) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
    }
  }

  Matrix x(n, f);
  for (NodeId i = 0; i < n; ++i) {
    for (int j = 0; j < f; ++j) x(i, j) = rng.gaussian();
  }
  std::vector<std::int32_t> labels(n);
  for (NodeId i = 0; i < n; ++i) labels[i] = static_cast<std::int32_t>(rng.next_below(c));

  std::vector<NodeId> perm(n);
  for (NodeId i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  Split split;
  const NodeId half = std::max<NodeId>(2, n / 2);
  split.train.assign(perm.begin(), perm.begin() + half);

  Graph graph(n, std::move(edges), std::move(x), std::move(labels), c, std::move(split));
  NormalizedAdjacency adj = normalize(graph);
  LayerMaskSet masks(adj, depth);
  random_prune(masks, 15.0, rng.next_u64());

  ModelConfig cfg;
  cfg.variant = variant;
  cfg.depth = depth;
  cfg.input_dim = f;
  cfg.hidden_dim = h;
  cfg.num_classes = c;
  cfg.seed = rng.next_u64();
  ModelState state = init_params(cfg);
  return {std::move(graph), std::move(adj), std::move(masks), cfg, std::move(state)};
}

double min_abs_preactivation(const ForwardTape& tape) {
  double m = std::numeric_limits<double>::infinity();
  for (const Matrix& t : tape.t) m = std::min(m, t.array().abs().minCoeff());
  return m;
}

}  // namespace

GradCheckResult gradcheck(const GradCheckOptions& opts) {
  if (opts.tolerance < 0) throw ConfigError("gradcheck tolerance must be >= 0");
  if (!(opts.step > 0)) throw ConfigError("gradcheck step must be positive");
  if (opts.max_nodes < 4) throw ConfigError("gradcheck max_nodes must be >= 4");
  if (opts.max_depth < 1) throw ConfigError("gradcheck max_depth must be >= 1");

  GradCheckResult result;
  Rng rng = Rng::derive(opts.seed, 0x9C);

  for (int trial = 0; trial < opts.trials; ++trial) {
    const Variant variant = static_cast<Variant>(trial % 3);
    const auto vi = static_cast<std::size_t>(variant);

    // Resample until no ReLU pre-activation sits inside the FD window.
    Instance inst = make_instance(rng, opts, variant);
    auto views = make_views(inst.adj, inst.masks);
    ForwardTape tape = forward(inst.graph, views, inst.state, inst.cfg);
    while (min_abs_preactivation(tape) < 2.0 * opts.step) {
      ++result.resampled;
      inst = make_instance(rng, opts, variant);
      views = make_views(inst.adj, inst.masks);
      tape = forward(inst.graph, views, inst.state, inst.cfg);
    }

    const auto split = std::span<const NodeId>(inst.graph.split().train);
    const Gradients grads = backward(tape, inst.graph, views, inst.state, inst.cfg, split);

    for (std::size_t l = 0; l < inst.state.weights.size(); ++l) {
      for (int r = 0; r < inst.state.weights[l].rows(); ++r) {
        for (int c = 0; c < inst.state.weights[l].cols(); ++c) {
          PerturbTarget target;
          target.kind = PerturbTarget::Kind::Weight;
          target.layer = static_cast<int>(l);
          target.row = r;
          target.col = c;
          const double fd =
              finite_diff_grad(inst.graph, views, inst.state, inst.cfg, split, target, opts.step);
          auto& cell = result.weight[vi];
          cell.max_rel_err =
              std::max(cell.max_rel_err, gradcheck_rel_err(grads.d_weights[l](r, c), fd));
          ++cell.targets;
        }
      }
    }

    for (int l = 0; l < inst.cfg.depth; ++l) {
      for (EdgeId e = 0; e < inst.adj.num_edges(); ++e) {
        if (!inst.masks.test(l, e)) continue;
        PerturbTarget target;
        target.kind = PerturbTarget::Kind::AdjacencyEntry;
        target.layer = l;
        target.edge = e;
        const double fd =
            finite_diff_grad(inst.graph, views, inst.state, inst.cfg, split, target, opts.step);
        auto& cell = result.adjacency[vi];
        cell.max_rel_err = std::max(cell.max_rel_err, gradcheck_rel_err(grads.d_adj[l][e], fd));
        ++cell.targets;
      }
    }
    ++result.instances;
  }
  return result;
}

}  // namespace snoh
