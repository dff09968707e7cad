#include "snoh/baselines.hpp"

#include "run_common.hpp"

#include <algorithm>
#include <cmath>

namespace snoh {

namespace {

// Uniformly remove `count` edges from `candidates` at `layer`.
void remove_random(LayerMaskSet& masks, int layer, std::vector<EdgeId>& candidates,
                   std::size_t count, Rng& rng) {
  rng.shuffle(candidates);
  count = std::min(count, candidates.size());
  for (std::size_t k = 0; k < count; ++k) masks.clear_bit(layer, candidates[k]);
}

std::vector<EdgeId> surviving_candidates(const LayerMaskSet& masks, int layer) {
  std::vector<EdgeId> out;
  for (EdgeId e = 0; e < masks.num_edges(); ++e) {
    if (masks.test(layer, e) && !masks.is_self_loop(e)) out.push_back(e);
  }
  return out;
}

}  // namespace

void random_prune(LayerMaskSet& masks, double rate_percent, std::uint64_t seed) {
  if (!(rate_percent >= 0.0 && rate_percent <= 100.0)) {
    throw ConfigError("random prune rate must lie in [0, 100]");
  }
  for (int l = 0; l < masks.depth(); ++l) {
    Rng rng = Rng::derive(seed, 0x7A000 + static_cast<std::uint64_t>(l));
    auto candidates = surviving_candidates(masks, l);
    const auto count = static_cast<std::size_t>(
        std::floor(rate_percent / 100.0 * static_cast<double>(candidates.size())));
    remove_random(masks, l, candidates, count, rng);
  }
  masks.enforce_depth_monotone();
}

void random_prune_to_sparsity(LayerMaskSet& masks, std::span<const double> targets,
                              std::uint64_t seed) {
  if (static_cast<int>(targets.size()) != masks.depth()) {
    throw ConfigError("one sparsity target per layer required");
  }
  const auto total = static_cast<double>(masks.num_edges() - masks.num_self_loops());
  for (int l = 0; l < masks.depth(); ++l) {
    if (l > 0) masks.propagate_zeros(l - 1);
    Rng rng = Rng::derive(seed, 0x7B000 + static_cast<std::uint64_t>(l));
    auto candidates = surviving_candidates(masks, l);
    const auto keep = static_cast<std::int64_t>(std::llround(targets[l] * total));
    const std::int64_t excess = static_cast<std::int64_t>(candidates.size()) - keep;
    if (excess > 0) {
      remove_random(masks, l, candidates, static_cast<std::size_t>(excess), rng);
    }
  }
  masks.enforce_depth_monotone();
}

std::vector<std::uint8_t> dropedge_sample_mask(const NormalizedAdjacency& adj, double q,
                                               std::uint64_t epoch_seed) {
  if (q < 0.0 || q > 1.0) throw ConfigError("dropedge rate must lie in [0, 1]");
  Rng rng(epoch_seed);
  std::vector<std::uint8_t> mask(adj.num_edges(), 1);
  for (EdgeId e = 0; e < adj.num_edges(); ++e) {
    if (adj.is_self_loop(e)) continue;
    if (rng.bernoulli(q)) mask[e] = 0;
  }
  return mask;
}

NormalizedAdjacency dropedge_sample(const NormalizedAdjacency& adj, double q,
                                    std::uint64_t epoch_seed) {
  return apply_mask(adj, dropedge_sample_mask(adj, q, epoch_seed));
}

RunArtifacts dropedge_run(const Graph& g, const DropEdgeConfig& cfg, const ModelConfig& model_cfg,
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

  const int depth = model_cfg.depth;
  std::vector<std::vector<std::uint8_t>> samples(cfg.per_layer ? depth : 1);
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    detail::epoch_guard(epoch, [&] {
      std::vector<MaskedAdjacencyView> train_views(depth);
      for (int l = 0; l < depth; ++l) {
        auto& sample = samples[cfg.per_layer ? l : 0];
        if (l == 0 || cfg.per_layer) {
          sample = dropedge_sample_mask(
              adj, cfg.drop_rate,
              mix_seed(cfg.seed_stream, (static_cast<std::uint64_t>(epoch) << 8) + l));
        }
        train_views[l] = {&adj, sample.data()};
      }

      // Metrics on the undropped adjacency; the dropped graph is a training-time
      // augmentation only.
      const auto eval_views = make_views(adj, prune.masks);
      const ForwardTape eval_tape = forward(g, eval_views, state, model_cfg);
      detail::record_epoch(report, epoch, eval_tape, g);
      if (opts.probe_every > 0 && epoch % opts.probe_every == 0) {
        report.add_probe(epoch,
                         detail::mean_distances(eval_tape, depth, &report.report().zero_norm_rows));
      }

      const ForwardTape tape = forward(g, train_views, state, model_cfg);
      BackwardOptions bw;
      bw.want_adj_grads = false;
      const Gradients grads = backward(tape, g, train_views, state, model_cfg, g.split().train, bw);
      adam_step(state, grads, opts.lr);
    });
  }

  report.finalize_masks(prune.masks);
  report.report().wall_clock_sec = clock.seconds();
  return {std::move(state), std::move(prune), report.take()};
}

RunArtifacts ugs_lite_run(const Graph& g, const UgsLiteConfig& cfg, const ModelConfig& model_cfg,
                          const TrainOptions& opts) {
  cfg.validate();
  model_cfg.validate();
  opts.validate();
  detail::require_split(g);
  detail::WallClock clock;

  const NormalizedAdjacency adj = normalize(g);
  const EdgeId nnz = adj.num_edges();
  const int depth = model_cfg.depth;
  PruneState prune{LayerMaskSet(adj, depth), -1, {}};
  const ModelState initial = init_params(model_cfg);
  ModelState state = initial;
  ReportBuilder report;

  // One real-valued mask shared by every layer; self-loop entries stay 1.
  std::vector<double> soft_mask(nnz, 1.0);
  std::vector<double> mask_m(nnz, 0.0), mask_v(nnz, 0.0);
  std::int64_t mask_step = 0;
  std::vector<double> eff_values(nnz, 0.0);
  const auto base_values = adj.values();

  int epoch = 0;
  for (int round = 1; round <= cfg.rounds; ++round) {
    for (int k = 0; k < cfg.epochs_per_round; ++k) {
      ++epoch;
      detail::epoch_guard(epoch, [&] {
        for (EdgeId e = 0; e < nnz; ++e) {
          eff_values[e] = base_values[e] * (adj.is_self_loop(e) ? 1.0 : soft_mask[e]);
        }
        std::vector<MaskedAdjacencyView> views(depth);
        for (int l = 0; l < depth; ++l) {
          views[l] = {&adj, prune.masks.layer(l).data(), eff_values.data()};
        }
        const ForwardTape tape = forward(g, views, state, model_cfg);
        detail::record_epoch(report, epoch, tape, g);
        if (opts.probe_every > 0 && epoch % opts.probe_every == 0) {
          report.add_probe(epoch,
                           detail::mean_distances(tape, depth, &report.report().zero_norm_rows));
        }

        const Gradients grads = backward(tape, g, views, state, model_cfg, g.split().train);
        adam_step(state, grads, opts.lr);

        // d(loss)/d(soft_mask_e) = sum_l d_adj[l][e] * base_e, plus the L1 term.
        ++mask_step;
        const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(mask_step));
        const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(mask_step));
        for (EdgeId e = 0; e < nnz; ++e) {
          if (adj.is_self_loop(e) || !prune.masks.test(0, e)) continue;
          double dm = 0.0;
          for (int l = 0; l < depth; ++l) dm += grads.d_adj[l][e];
          dm *= base_values[e];
          dm += cfg.l1_coeff * (soft_mask[e] > 0 ? 1.0 : (soft_mask[e] < 0 ? -1.0 : 0.0));
          mask_m[e] = 0.9 * mask_m[e] + 0.1 * dm;
          mask_v[e] = 0.999 * mask_v[e] + 0.001 * dm * dm;
          soft_mask[e] -= opts.lr * (mask_m[e] / bc1) / (std::sqrt(mask_v[e] / bc2) + 1e-8);
        }
      });
    }

    // Round boundary: drop the IPR% smallest-|m| surviving edges, uniformly
    // across layers (the mask is shared, so every layer prunes identically).
    std::vector<EdgeId> candidates = surviving_candidates(prune.masks, 0);
    const auto remove_count = static_cast<std::size_t>(std::floor(
        cfg.iterative_prune_rate / 100.0 * static_cast<double>(candidates.size())));
    std::sort(candidates.begin(), candidates.end(), [&](EdgeId a, EdgeId b) {
      const double ma = std::abs(soft_mask[a]), mb = std::abs(soft_mask[b]);
      if (ma != mb) return ma < mb;
      return a < b;
    });
    for (std::size_t k = 0; k < remove_count && k < candidates.size(); ++k) {
      for (int l = 0; l < depth; ++l) prune.masks.clear_bit(l, candidates[k]);
    }
    prune.events.push_back({epoch, -1, PruneEvent::Kind::EdgesRemoved,
                            static_cast<std::int64_t>(std::min(remove_count, candidates.size())),
                            "ugs round " + std::to_string(round)});

    if (cfg.rewind_to_init && round < cfg.rounds) {
      state = initial;
      std::fill(mask_m.begin(), mask_m.end(), 0.0);
      std::fill(mask_v.begin(), mask_v.end(), 0.0);
      mask_step = 0;
    }
  }

  report.finalize_masks(prune.masks);
  report.report().wall_clock_sec = clock.seconds();
  return {std::move(state), std::move(prune), report.take()};
}

RunArtifacts dropedge_plus_snohv2(const Graph& g, const DropEdgeConfig& de_cfg,
                                  const SnoHv2Config& v2_cfg, const ModelConfig& model_cfg,
                                  const TrainOptions& opts) {
  de_cfg.validate();
  v2_cfg.validate();
  model_cfg.validate();
  opts.validate();
  detail::require_split(g);
  detail::WallClock clock;

  const NormalizedAdjacency adj = normalize(g);
  const int depth = model_cfg.depth;
  PruneState prune{LayerMaskSet(adj, depth), -1, {}};
  ModelState state = init_params(model_cfg);
  ReportBuilder report;

  std::vector<std::vector<std::uint8_t>> composed(depth,
                                                  std::vector<std::uint8_t>(adj.num_edges(), 1));
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    detail::epoch_guard(epoch, [&] {
      const auto sample = dropedge_sample_mask(
          adj, de_cfg.drop_rate, mix_seed(de_cfg.seed_stream, static_cast<std::uint64_t>(epoch)));
      std::vector<MaskedAdjacencyView> train_views(depth);
      for (int l = 0; l < depth; ++l) {
        const auto persistent = prune.masks.layer(l);
        for (EdgeId e = 0; e < adj.num_edges(); ++e) composed[l][e] = persistent[e] & sample[e];
        train_views[l] = {&adj, composed[l].data()};
      }

      const ForwardTape eval_tape = forward(g, make_views(adj, prune.masks), state, model_cfg);
      detail::record_epoch(report, epoch, eval_tape, g);

      const ForwardTape tape = forward(g, train_views, state, model_cfg);
      BackwardOptions bw;
      bw.want_adj_grads = false;
      const Gradients grads = backward(tape, g, train_views, state, model_cfg, g.split().train, bw);
      adam_step(state, grads, opts.lr);

      if (epoch >= v2_cfg.warmup && (epoch - v2_cfg.warmup) % v2_cfg.check_every == 0) {
        // Probes run on the undropped persistent-masked adjacency.
        const ForwardTape probe = forward(g, make_views(adj, prune.masks), state, model_cfg);
        report.add_probe(epoch, detail::mean_distances(probe, depth,
                                                       &report.report().zero_norm_rows));
        const auto d0 = cosine_distance_per_node(probe, 0);
        const auto stops = snohv2_evaluate_stops(probe, prune.masks, v2_cfg, d0);
        snohv2_prune(prune.masks, stops, &prune.events, epoch);
      }
    });
  }

  report.finalize_masks(prune.masks);
  report.report().wall_clock_sec = clock.seconds();
  return {std::move(state), std::move(prune), report.take()};
}

}  // namespace snoh
