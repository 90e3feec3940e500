#pragma once

#include <filesystem>
#include <iostream>

#include "fraudgnn/checkpoint.hpp"
#include "fraudgnn/config.hpp"
#include "fraudgnn/eval.hpp"
#include "fraudgnn/io.hpp"
#include "fraudgnn/synth.hpp"

namespace fraudgnn {

namespace pipeline_detail {

inline std::string out_path(const PipelineConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.paths.out);
  return (std::filesystem::path(cfg.paths.out) / name).string();
}

inline void write_manifest(const PipelineConfig& cfg, const std::string& command) {
  auto out = io_detail::open_output(out_path(cfg, "manifest_" + command + ".txt"));
  out << kVersionString << '\n';
  out << "command " << command << '\n';
  out << "config_hash " << cfg.config_hash() << '\n';
  out << "seed " << cfg.seed << '\n';
  out << cfg.canonical();
}

inline void require_path(const std::string& value, const std::string& key) {
  require(!value.empty(), ErrorCategory::Config,
          "config key paths." + key + " is required for this command");
  require(std::filesystem::exists(value), ErrorCategory::Io,
          "paths." + key + " = '" + value + "' does not exist");
}

// Loads the graph selected by features.graph plus its feature matrix, and
// exposes a unified sampling surface. Everything is kept alive together.
struct LoadedGraph {
  MultiEntityGraph multi;
  SingleEntityGraph single;
  bool is_single = false;
  FeatureMatrix features;

  GraphView view() const { return is_single ? single.view() : multi.view(); }
  std::size_t node_count() const { return is_single ? single.node_count() : multi.node_count(); }

  SampleSource source(bool with_edge_features) const {
    return is_single ? make_source(single, &features, with_edge_features)
                     : make_source(multi, &features, with_edge_features);
  }

  std::vector<NodeId> anchor_nodes() const {
    if (is_single) {
      std::vector<NodeId> all(single.node_count());
      for (NodeId u = 0; u < single.node_count(); ++u) all[u] = u;
      return all;
    }
    return multi.target_nodes();
  }

  // Original (input-file) id of a pipeline node.
  NodeId original_id(NodeId u) const { return is_single ? single.original_id(u) : u; }

  // Maps original-id labels into this graph's id space.
  LabeledSet map_labels(const LabeledSet& labels) const {
    if (!is_single) {
      for (const auto& [node, label] : labels.entries()) {
        (void)label;
        require(multi.is_target(node), ErrorCategory::Validation,
                "label on non-target node " + std::to_string(node));
      }
      return labels;
    }
    std::vector<NodeId> lookup;
    NodeId max_orig = 0;
    for (NodeId s = 0; s < single.node_count(); ++s)
      max_orig = std::max(max_orig, single.original_id(s));
    lookup.assign(static_cast<std::size_t>(max_orig) + 1, kInvalidNode);
    for (NodeId s = 0; s < single.node_count(); ++s) lookup[single.original_id(s)] = s;
    std::vector<std::pair<NodeId, std::uint8_t>> mapped;
    for (const auto& [node, label] : labels.entries()) {
      require(node < lookup.size() && lookup[node] != kInvalidNode, ErrorCategory::Validation,
              "label on node " + std::to_string(node) + " absent from the single-entity graph");
      mapped.emplace_back(lookup[node], label);
    }
    return LabeledSet(std::move(mapped), single.node_count());
  }
};

inline LoadedGraph load_graph(const PipelineConfig& cfg, bool with_features) {
  LoadedGraph g;
  g.is_single = cfg.features.graph == "single";
  require(g.is_single || cfg.features.graph == "multi", ErrorCategory::Config,
          "features.graph must be 'single' or 'multi'");
  if (g.is_single) {
    require_path(cfg.paths.single_graph, "single_graph");
    g.single = load_single_entity_graph(cfg.paths.single_graph);
  } else {
    require_path(cfg.paths.edges, "edges");
    require_path(cfg.paths.node_types, "node_types");
    g.multi = load_multi_entity_graph(cfg.paths.edges, cfg.paths.node_types,
                                      cfg.paths.target_type);
  }
  if (with_features) {
    require_path(cfg.paths.features, "features");
    g.features = load_features(cfg.paths.features);
    require(g.features.rows() == g.node_count(), ErrorCategory::Validation,
            "feature matrix rows do not match the graph");
  }
  return g;
}

}  // namespace pipeline_detail

// Generates the synthetic planted-fraud dataset and writes the input files
// the rest of the pipeline consumes.
inline void cmd_synth(const PipelineConfig& cfg) {
  using pipeline_detail::out_path;
  SynthConfig sc = cfg.synth;
  sc.seed = cfg.seed;
  const SynthResult r = generate_synthetic(sc);
  const std::string hash = cfg.config_hash();
  save_multi_entity_graph(out_path(cfg, "edges.tsv"), out_path(cfg, "node_types.tsv"), r.graph);
  save_labels(out_path(cfg, "labels.tsv"), r.labeled, hash);
  {
    std::vector<std::pair<NodeId, std::uint8_t>> all;
    for (NodeId u = 0; u < r.ground_truth.size(); ++u)
      all.emplace_back(u, r.ground_truth[u]);
    save_labels(out_path(cfg, "ground_truth.tsv"),
                LabeledSet(std::move(all), r.graph.node_count()), hash);
  }
  const GraphStats stats = graph_stats(r.graph);
  std::cout << "synth: " << stats.node_count << " nodes, " << stats.edge_count << " edges, "
            << r.labeled.size() << " labeled (" << r.labeled.count_of(1) << " suspicious)\n";
  pipeline_detail::write_manifest(cfg, "synth");
}

// Multi-entity -> single-entity structure transformation.
inline void cmd_transform(const PipelineConfig& cfg) {
  using pipeline_detail::out_path;
  pipeline_detail::require_path(cfg.paths.edges, "edges");
  pipeline_detail::require_path(cfg.paths.node_types, "node_types");
  const MultiEntityGraph multi =
      load_multi_entity_graph(cfg.paths.edges, cfg.paths.node_types, cfg.paths.target_type);
  TransformOptions opt = cfg.transform;
  opt.threads = cfg.threads;
  TransformSummary summary;
  const SingleEntityGraph single = transform_to_single_entity(multi, opt, &summary);
  save_single_entity_graph(out_path(cfg, "single_graph.txt"), single, cfg.config_hash());
  std::cout << "transform: " << summary.target_nodes << " target nodes, "
            << summary.single_edges << " edges (node ratio "
            << summary.ratios.node_ratio << ", edge ratio " << summary.ratios.edge_ratio
            << ")\n";
  if (summary.skipped_hubs > 0)
    std::cout << "transform: skipped " << summary.skipped_hubs
              << " hub entities over threshold " << cfg.transform.hub_threshold << "\n";
  pipeline_detail::write_manifest(cfg, "transform");
}

// Node feature initialization on the configured graph.
inline void cmd_featurize(const PipelineConfig& cfg) {
  using pipeline_detail::out_path;
  pipeline_detail::LoadedGraph g = pipeline_detail::load_graph(cfg, false);
  const GraphView view = g.view();
  FeatureMatrix f;
  const auto& fc = cfg.features;
  if (fc.method == "random")
    f = init_random(view, fc.random_dim, cfg.seed);
  else if (fc.method == "degree")
    f = init_degree(view, fc.degree_cap);
  else if (fc.method == "pagerank")
    f = init_pagerank(view, fc.pagerank_damping, fc.pagerank_tol, fc.pagerank_max_iter);
  else if (fc.method == "eigen")
    f = init_eigen(view, fc.eigen_k);
  else
    throw ConfigError("features.method must be random|degree|pagerank|eigen, got '" +
                      fc.method + "'");
  if (fc.normalize) f = normalize_features(f);
  save_features(out_path(cfg, "features_" + fc.method + ".txt"), f, cfg.config_hash());
  std::cout << "featurize: " << f.rows() << " x " << f.dim() << " (" << fc.method << ")\n";
  pipeline_detail::write_manifest(cfg, "featurize");
}

// Contrastive pre-training; a checkpoint is written after every epoch.
inline void cmd_pretrain(const PipelineConfig& cfg) {
  using pipeline_detail::out_path;
  pipeline_detail::LoadedGraph g = pipeline_detail::load_graph(cfg, true);
  const SampleSource src = g.source(false);

  std::vector<NodeId> anchors = g.anchor_nodes();
  if (cfg.pretrain.anchor_cap > 0 && anchors.size() > cfg.pretrain.anchor_cap) {
    RngStream rng = derive_stream(cfg.seed, "pretrain.anchor.sample");
    rng.shuffle(anchors);
    anchors.resize(cfg.pretrain.anchor_cap);
  }

  EncoderParams enc =
      make_encoder(g.features.dim(), cfg.pretrain.dim, cfg.pretrain.dim, false, 0, cfg.seed);
  MoCoState state = make_moco_state(enc, cfg.pretrain.momentum, cfg.pretrain.tau,
                                    cfg.pretrain.queue_capacity);
  PretrainConfig pc;
  pc.batch_size = cfg.pretrain.batch_size;
  pc.lr = cfg.pretrain.lr;
  pc.mode = parse_mode(cfg.pretrain.mode);
  Optimizer opt({OptimizerConfig::Kind::adam, pc.lr});

  SamplerConfig sampler = cfg.sampler;
  sampler.seed = cfg.seed;
  queue_warm_start(src, anchors, state, sampler, pc);
  const std::string echo = "config_hash=" + cfg.config_hash() + " " + cfg.canonical();
  for (std::size_t epoch = 0; epoch < cfg.pretrain.epochs; ++epoch) {
    const double loss = pretrain_epoch(src, anchors, state, sampler, opt, pc, epoch);
    std::cout << "pretrain epoch " << (epoch + 1) << "/" << cfg.pretrain.epochs
              << " mean InfoNCE " << loss << "\n";
    auto params = collect_params(state.theta_q);
    save_checkpoint(out_path(cfg, "pretrain_epoch" + std::to_string(epoch + 1) + ".ckpt"),
                    params, echo);
  }
  auto params = collect_params(state.theta_q);
  save_checkpoint(out_path(cfg, "pretrain.ckpt"), params, echo);
  pipeline_detail::write_manifest(cfg, "pretrain");
}

// Supervised fine-tuning; writes the model checkpoint and predictions for
// every node of the working graph (original ids).
inline void cmd_finetune(const PipelineConfig& cfg) {
  using pipeline_detail::out_path;
  pipeline_detail::LoadedGraph g = pipeline_detail::load_graph(cfg, true);
  pipeline_detail::require_path(cfg.paths.labels, "labels");
  const LabeledSet raw_labels = load_labels(cfg.paths.labels, g.is_single
                                                                  ? std::size_t(-1)
                                                                  : g.node_count());
  const LabeledSet labels = g.map_labels(raw_labels);
  const SampleSource src = g.source(true);

  FineTuneModel model = make_finetune_model(g.features.dim(), cfg.pretrain.dim,
                                            cfg.finetune.dim, src.edge_features.dim(),
                                            parse_mode(cfg.finetune.mode), cfg.seed);
  if (!cfg.paths.checkpoint.empty()) {
    pipeline_detail::require_path(cfg.paths.checkpoint, "checkpoint");
    const Checkpoint ckpt = load_checkpoint(cfg.paths.checkpoint);
    auto params = collect_params(model.encoder);
    restore_params(ckpt, params, /*allow_missing=*/true);
  }

  SamplerConfig sampler = cfg.sampler;
  sampler.seed = cfg.seed;
  FineTuneConfig fc;
  fc.epochs = cfg.finetune.epochs;
  fc.batch_size = cfg.finetune.batch_size;
  fc.lr = cfg.finetune.lr;
  fc.fresh_subgraphs = cfg.finetune.fresh_subgraphs;
  const auto losses = finetune_fit(model, src, labels, sampler, fc);
  std::cout << "finetune: " << losses.size() << " epochs, final mean loss "
            << (losses.empty() ? 0.0 : losses.back()) << "\n";

  const std::string echo = "config_hash=" + cfg.config_hash() + " " + cfg.canonical();
  auto params = collect_params(model);
  save_checkpoint(out_path(cfg, "model.ckpt"), params, echo);

  std::vector<NodeId> nodes(g.node_count());
  for (NodeId u = 0; u < nodes.size(); ++u) nodes[u] = u;
  if (!g.is_single) nodes = g.multi.target_nodes();
  Prediction pred = predict(model, src, nodes, sampler, model.mode);
  for (NodeId& u : pred.nodes) u = g.original_id(u);
  save_predictions(out_path(cfg, "predictions.tsv"), pred.nodes, pred.labels, pred.p_fraud,
                   cfg.config_hash());
  pipeline_detail::write_manifest(cfg, "finetune");
}

// Full method-grid evaluation over the multi-entity input.
inline void cmd_eval(const PipelineConfig& cfg) {
  using pipeline_detail::out_path;
  pipeline_detail::require_path(cfg.paths.edges, "edges");
  pipeline_detail::require_path(cfg.paths.node_types, "node_types");
  pipeline_detail::require_path(cfg.paths.labels, "labels");
  const MultiEntityGraph multi =
      load_multi_entity_graph(cfg.paths.edges, cfg.paths.node_types, cfg.paths.target_type);
  const LabeledSet labels = load_labels(cfg.paths.labels, multi.node_count());
  const ExperimentResult result = run_grid(multi, labels, cfg.eval_config());
  const std::string table = render_result_table(result);
  {
    auto out = io_detail::open_output(out_path(cfg, "results.txt"));
    out << "# config_hash " << cfg.config_hash() << '\n' << table;
  }
  {
    auto out = io_detail::open_output(out_path(cfg, "results.tsv"));
    out << "# config_hash " << cfg.config_hash() << '\n' << render_result_tsv(result);
  }
  std::cout << table;
  for (const CellResult& c : result.cells)
    if (!c.error.empty())
      std::cout << "cell " << c.key.label() << " failed: " << c.error << "\n";
  pipeline_detail::write_manifest(cfg, "eval");
}

// Embedding export for external visualization (t-SNE etc.).
inline void cmd_export(const PipelineConfig& cfg) {
  using pipeline_detail::out_path;
  pipeline_detail::LoadedGraph g = pipeline_detail::load_graph(cfg, true);
  pipeline_detail::require_path(cfg.paths.checkpoint, "checkpoint");
  const Checkpoint ckpt = load_checkpoint(cfg.paths.checkpoint);
  const SampleSource pretrain_src = g.source(false);
  const SampleSource finetune_src = g.source(true);

  SamplerConfig sampler = cfg.sampler;
  sampler.seed = cfg.seed;
  const EmbeddingMode mode = parse_mode(cfg.finetune.mode);
  std::vector<NodeId> nodes(g.node_count());
  for (NodeId u = 0; u < nodes.size(); ++u) nodes[u] = u;
  if (!g.is_single) nodes = g.multi.target_nodes();

  Tensor emb;
  if (ckpt.tensors.count("projection.w")) {
    FineTuneModel model = make_finetune_model(g.features.dim(), cfg.pretrain.dim,
                                              cfg.finetune.dim, finetune_src.edge_features.dim(),
                                              mode, cfg.seed);
    restore_params(ckpt, collect_params(model));
    emb = compute_embeddings(model, finetune_src, nodes, mode, sampler);
  } else {
    EncoderParams enc =
        make_encoder(g.features.dim(), cfg.pretrain.dim, cfg.pretrain.dim, false, 0, cfg.seed);
    restore_params(ckpt, collect_params(enc));
    emb = compute_embeddings(enc, pretrain_src, nodes, mode, sampler);
  }

  std::vector<int> labels(nodes.size(), -1);
  if (!cfg.paths.labels.empty()) {
    pipeline_detail::require_path(cfg.paths.labels, "labels");
    const LabeledSet ls = load_labels(cfg.paths.labels, std::size_t(-1));
    std::map<NodeId, std::uint8_t> by_id(ls.entries().begin(), ls.entries().end());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      auto it = by_id.find(g.original_id(nodes[i]));
      if (it != by_id.end()) labels[i] = it->second;
    }
  }
  std::vector<NodeId> original(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) original[i] = g.original_id(nodes[i]);
  save_embeddings(out_path(cfg, "embeddings.tsv"), original, labels, emb, cfg.config_hash());
  std::cout << "export: " << nodes.size() << " rows x " << emb.cols() << " dims\n";
  pipeline_detail::write_manifest(cfg, "export");
}

}  // namespace fraudgnn
