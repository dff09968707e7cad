#include "snoh/snowflake.hpp"

#include "run_common.hpp"

#include <algorithm>
#include <cmath>

namespace snoh {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::OneShot: return "oneshot";
    case Scheme::Iterative: return "iterative";
    case Scheme::Reinit: return "reinit";
  }
  return "?";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "oneshot") return Scheme::OneShot;
  if (name == "iterative") return Scheme::Iterative;
  if (name == "reinit") return Scheme::Reinit;
  throw ConfigError("unknown scheme '" + name + "' (expected oneshot|iterative|reinit)");
}

void SnoHv1Config::validate() const {
  if (!(prune_rate > 0.0 && prune_rate < 100.0)) {
    throw ConfigError("snohv1 prune_rate must lie in (0, 100)");
  }
  if (window < 1) throw ConfigError("snohv1 window must be >= 1");
  if (iterative_rounds < 1) throw ConfigError("snohv1 iterative_rounds must be >= 1");
  if (reinit_epochs < 1) throw ConfigError("snohv1 reinit_epochs must be >= 1");
}

void SnoHv2Config::validate() const {
  if (rho < 0.0) throw ConfigError("snohv2 rho must be >= 0");
  if (mode == ThresholdMode::RelativeToFirstLayer &&
      !(relative_percent > 0.0 && relative_percent <= 100.0)) {
    throw ConfigError("snohv2 relative_percent must lie in (0, 100]");
  }
  if (check_every < 1) throw ConfigError("snohv2 check_every must be >= 1");
  if (warmup < 0) throw ConfigError("snohv2 warmup must be >= 0");
}

std::vector<EdgeId> snohv1_prune_layer(std::span<const double> grad_accum, LayerMaskSet& masks,
                                       int layer, double prune_rate_percent) {
  if (layer < 0 || layer >= masks.depth()) throw ConfigError("prune layer out of range");
  if (static_cast<EdgeId>(grad_accum.size()) != masks.num_edges()) {
    throw ConfigError("gradient accumulator length != edge count");
  }

  std::vector<EdgeId> candidates;
  for (EdgeId e = 0; e < masks.num_edges(); ++e) {
    if (masks.test(layer, e) && !masks.is_self_loop(e)) candidates.push_back(e);
  }
  const auto remove_count = static_cast<std::size_t>(
      std::floor(prune_rate_percent / 100.0 * static_cast<double>(candidates.size())));
  std::vector<EdgeId> removed;
  if (remove_count == 0) return removed;

  // Smallest accumulated |gradient| first; ties by ascending edge index.
  std::sort(candidates.begin(), candidates.end(), [&](EdgeId a, EdgeId b) {
    if (grad_accum[a] != grad_accum[b]) return grad_accum[a] < grad_accum[b];
    return a < b;
  });
  removed.assign(candidates.begin(), candidates.begin() + remove_count);
  for (EdgeId e : removed) masks.clear_bit(layer, e);
  masks.propagate_zeros(layer);
  return removed;
}

std::vector<NodeStop> snohv2_evaluate_stops(const ForwardTape& tape, const LayerMaskSet& masks,
                                            const SnoHv2Config& cfg,
                                            std::span<const double> first_layer_distances) {
  cfg.validate();
  const int depth = masks.depth();
  const NodeId n = masks.num_nodes();
  std::vector<NodeStop> stops;
  if (depth < 2) return stops;

  std::vector<std::vector<double>> dist(depth);
  for (int l = 1; l < depth; ++l) dist[l] = cosine_distance_per_node(tape, l);

  for (NodeId i = 0; i < n; ++i) {
    if (masks.stop_layer(i) != LayerMaskSet::kNeverStops) continue;
    const double threshold = cfg.mode == ThresholdMode::Absolute
                                 ? cfg.rho
                                 : cfg.relative_percent / 100.0 * first_layer_distances[i];
    for (int l = 1; l < depth; ++l) {
      if (dist[l][i] < threshold) {
        stops.push_back({i, l});
        break;
      }
    }
  }
  return stops;
}

void snohv2_prune(LayerMaskSet& masks, std::span<const NodeStop> stops,
                  std::vector<PruneEvent>* events, int epoch) {
  std::map<int, std::int64_t> applied_per_layer;
  std::int64_t ignored = 0;
  for (const NodeStop& s : stops) {
    if (masks.stop_node(s.node, s.layer)) {
      ++applied_per_layer[s.layer];
    } else {
      ++ignored;
    }
  }
  if (events) {
    for (const auto& [layer, count] : applied_per_layer) {
      events->push_back({epoch, layer, PruneEvent::Kind::NodesStopped, count, ""});
    }
    if (ignored > 0) {
      events->push_back({epoch, -1, PruneEvent::Kind::Warning, ignored,
                         "stops ignored: node already stopped at a shallower layer"});
    }
  }
}

StopHistogram stop_depth_report(const PruneState& prune) {
  StopHistogram hist;
  for (NodeId i = 0; i < prune.masks.num_nodes(); ++i) {
    const int r = prune.masks.stop_layer(i);
    if (r == LayerMaskSet::kNeverStops) {
      ++hist.never_stopped;
    } else {
      ++hist.by_depth[r + 1];
    }
  }
  return hist;
}

RunArtifacts snohv1_run(const Graph& g, const SnoHv1Config& cfg, const ModelConfig& model_cfg,
                        const TrainOptions& opts) {
  cfg.validate();
  model_cfg.validate();
  opts.validate();
  detail::require_split(g);
  detail::WallClock clock;

  const NormalizedAdjacency adj = normalize(g);
  PruneState prune{LayerMaskSet(adj, model_cfg.depth), model_cfg.depth - 1, {}};
  ModelState state = init_params(model_cfg);
  ReportBuilder report;

  std::vector<double> accum(adj.num_edges(), 0.0);
  int rounds_done = 0;
  int reinit_count = 0;
  int next_event = cfg.window;
  const double rate_per_event =
      cfg.scheme == Scheme::Iterative ? cfg.prune_rate / cfg.iterative_rounds : cfg.prune_rate;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    detail::epoch_guard(epoch, [&] {
      const auto views = make_views(adj, prune.masks);
      const ForwardTape tape = forward(g, views, state, model_cfg);
      detail::record_epoch(report, epoch, tape, g);

      const int target = prune.next_layer_to_prune;
      const bool accumulating = target >= 0 && epoch > next_event - cfg.window;
      BackwardOptions bw;
      bw.want_adj_grads = accumulating;
      bw.only_adj_layer = target;
      const Gradients grads = backward(tape, g, views, state, model_cfg, g.split().train, bw);
      if (accumulating) {
        const auto& da = grads.d_adj[target];
        for (EdgeId e = 0; e < adj.num_edges(); ++e) accum[e] += std::abs(da[e]);
      }
      adam_step(state, grads, opts.lr);

      if (opts.probe_every > 0 && epoch % opts.probe_every == 0) {
        report.add_probe(epoch,
                         detail::mean_distances(tape, model_cfg.depth, &report.report().zero_norm_rows));
      }

      if (target >= 0 && epoch == next_event) {
        if (prune.masks.surviving_non_self_loops(target) == 0) {
          prune.events.push_back({epoch, target, PruneEvent::Kind::Warning, 0,
                                  "no surviving prunable edges at target layer"});
        } else {
          const auto removed = snohv1_prune_layer(accum, prune.masks, target, rate_per_event);
          prune.events.push_back({epoch, target, PruneEvent::Kind::EdgesRemoved,
                                  static_cast<std::int64_t>(removed.size()), ""});
        }
        std::fill(accum.begin(), accum.end(), 0.0);

        // Advance the schedule.
        if (cfg.scheme == Scheme::Iterative) {
          if (++rounds_done >= cfg.iterative_rounds) {
            rounds_done = 0;
            prune.next_layer_to_prune -= 1;
          }
        } else {
          prune.next_layer_to_prune -= 1;
        }
        if (cfg.scheme == Scheme::Reinit && prune.next_layer_to_prune >= 0) {
          ModelConfig reinit_cfg = model_cfg;
          reinit_cfg.seed = mix_seed(model_cfg.seed, 0x2E1000 + static_cast<std::uint64_t>(++reinit_count));
          state = init_params(reinit_cfg);
          next_event += cfg.reinit_epochs;
        } else {
          next_event += cfg.window;
        }
      }
    });
  }

  report.finalize_masks(prune.masks);
  report.report().wall_clock_sec = clock.seconds();
  return {std::move(state), std::move(prune), report.take()};
}

RunArtifacts snohv2_run(const Graph& g, const SnoHv2Config& cfg, const ModelConfig& model_cfg,
                        const TrainOptions& opts) {
  cfg.validate();
  model_cfg.validate();
  opts.validate();
  detail::require_split(g);
  detail::WallClock clock;

  const NormalizedAdjacency adj = normalize(g);
  PruneState prune{LayerMaskSet(adj, model_cfg.depth), -1, {}};
  ModelState state = init_params(model_cfg);
  ReportBuilder report;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    detail::epoch_guard(epoch, [&] {
      const auto views = make_views(adj, prune.masks);
      const ForwardTape tape = forward(g, views, state, model_cfg);
      detail::record_epoch(report, epoch, tape, g);
      BackwardOptions bw;
      bw.want_adj_grads = false;
      const Gradients grads = backward(tape, g, views, state, model_cfg, g.split().train, bw);
      adam_step(state, grads, opts.lr);

      if (epoch >= cfg.warmup && (epoch - cfg.warmup) % cfg.check_every == 0) {
        // Probe on the post-update state; the training forward above would be
        // one step stale for the distances the stop rule consumes.
        const ForwardTape probe = forward(g, make_views(adj, prune.masks), state, model_cfg);
        report.add_probe(epoch, detail::mean_distances(probe, model_cfg.depth,
                                                       &report.report().zero_norm_rows));
        const auto d0 = cosine_distance_per_node(probe, 0);
        const auto stops = snohv2_evaluate_stops(probe, prune.masks, cfg, d0);
        snohv2_prune(prune.masks, stops, &prune.events, epoch);
      }
    });
  }

  report.finalize_masks(prune.masks);
  report.report().wall_clock_sec = clock.seconds();
  return {std::move(state), std::move(prune), report.take()};
}

}  // namespace snoh
