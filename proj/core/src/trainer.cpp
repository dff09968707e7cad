#include "snoh/trainer.hpp"

#include "run_common.hpp"

namespace snoh {

const char* method_name(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::SnoHv1: return "snohv1";
    case Method::SnoHv2: return "snohv2";
    case Method::RandomPrune: return "random";
    case Method::UgsLite: return "ugs_lite";
    case Method::DropEdge: return "dropedge";
    case Method::DropEdgePlusSnoHv2: return "dropedge+snohv2";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "none") return Method::None;
  if (name == "snohv1") return Method::SnoHv1;
  if (name == "snohv2") return Method::SnoHv2;
  if (name == "random") return Method::RandomPrune;
  if (name == "ugs_lite") return Method::UgsLite;
  if (name == "dropedge") return Method::DropEdge;
  if (name == "dropedge+snohv2") return Method::DropEdgePlusSnoHv2;
  throw ConfigError("unknown method '" + name + "'");
}

void RunConfig::validate() const {
  train.validate();
  switch (method) {
    case Method::SnoHv1: v1.validate(); break;
    case Method::SnoHv2: v2.validate(); break;
    case Method::DropEdge: dropedge.validate(); break;
    case Method::UgsLite: ugs.validate(); break;
    case Method::DropEdgePlusSnoHv2:
      dropedge.validate();
      v2.validate();
      break;
    case Method::RandomPrune:
      if (!(random_rate >= 0.0 && random_rate <= 100.0)) {
        throw ConfigError("random_rate must lie in [0, 100]");
      }
      break;
    case Method::None: break;
  }
}

RunArtifacts train_fixed_masks(const Graph& g, LayerMaskSet masks, const ModelConfig& model_cfg,
                               const TrainOptions& opts) {
  model_cfg.validate();
  opts.validate();
  detail::require_split(g);
  detail::WallClock clock;

  const NormalizedAdjacency adj = normalize(g);
  if (masks.num_edges() != adj.num_edges() || masks.depth() != model_cfg.depth) {
    throw ConfigError("mask set does not match the graph pattern / model depth");
  }
  PruneState prune{std::move(masks), -1, {}};
  ModelState state = init_params(model_cfg);
  ReportBuilder report;

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    detail::epoch_guard(epoch, [&] {
      const auto views = make_views(adj, prune.masks);
      const ForwardTape tape = forward(g, views, state, model_cfg);
      detail::record_epoch(report, epoch, tape, g);
      if (opts.probe_every > 0 && epoch % opts.probe_every == 0) {
        report.add_probe(
            epoch, detail::mean_distances(tape, model_cfg.depth, &report.report().zero_norm_rows));
      }
      BackwardOptions bw;
      bw.want_adj_grads = false;
      const Gradients grads = backward(tape, g, views, state, model_cfg, g.split().train, bw);
      adam_step(state, grads, opts.lr);
    });
  }

  report.finalize_masks(prune.masks);
  report.report().wall_clock_sec = clock.seconds();
  return {std::move(state), std::move(prune), report.take()};
}

RunArtifacts run_method(const Graph& g, const RunConfig& cfg) {
  cfg.validate();
  switch (cfg.method) {
    case Method::None: {
      const NormalizedAdjacency adj = normalize(g);
      return train_fixed_masks(g, LayerMaskSet(adj, cfg.model.depth), cfg.model, cfg.train);
    }
    case Method::RandomPrune: {
      const NormalizedAdjacency adj = normalize(g);
      LayerMaskSet masks(adj, cfg.model.depth);
      const std::uint64_t seed = mix_seed(cfg.train.seed, 0x7A2D01);
      if (!cfg.random_target_es.empty()) {
        random_prune_to_sparsity(masks, cfg.random_target_es, seed);
      } else {
        random_prune(masks, cfg.random_rate, seed);
      }
      return train_fixed_masks(g, std::move(masks), cfg.model, cfg.train);
    }
    case Method::SnoHv1: return snohv1_run(g, cfg.v1, cfg.model, cfg.train);
    case Method::SnoHv2: return snohv2_run(g, cfg.v2, cfg.model, cfg.train);
    case Method::UgsLite: return ugs_lite_run(g, cfg.ugs, cfg.model, cfg.train);
    case Method::DropEdge: return dropedge_run(g, cfg.dropedge, cfg.model, cfg.train);
    case Method::DropEdgePlusSnoHv2:
      return dropedge_plus_snohv2(g, cfg.dropedge, cfg.v2, cfg.model, cfg.train);
  }
  throw ConfigError("unhandled method");
}

RunArtifacts run_experiment(const DatasetBundle& bundle, const RunConfig& cfg) {
  RunConfig resolved = cfg;
  if (resolved.model.input_dim == 0) resolved.model.input_dim = bundle.graph.feature_dim();
  if (resolved.model.num_classes == 0) resolved.model.num_classes = bundle.graph.num_classes();
  if (resolved.model.seed == 0) resolved.model.seed = mix_seed(resolved.train.seed, 0x11717);

  if (bundle.graph.split().empty() || resolved.force_random_split) {
    const Split split =
        make_split(bundle.graph, resolved.split_ratios, mix_seed(resolved.train.seed, 0x5F117));
    return run_method(bundle.graph.with_split(split), resolved);
  }
  return run_method(bundle.graph, resolved);
}

}  // namespace snoh
