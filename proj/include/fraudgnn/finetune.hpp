#pragma once

#include <vector>

#include "fraudgnn/nn.hpp"
#include "fraudgnn/sampling.hpp"

namespace fraudgnn {

// Edge-aware encoder + affine projection (pre-train dim -> fine-tune dim) +
// two-layer MLP head emitting 2 logits.
struct FineTuneModel {
  EncoderParams encoder;  // edge_aware on
  AffineParams projection;
  AffineParams head1;
  AffineParams head2;
  EmbeddingMode mode = EmbeddingMode::subgraph;
};

inline FineTuneModel make_finetune_model(std::size_t input_dim, std::size_t encoder_dim,
                                         std::size_t embed_dim, std::size_t edge_dim,
                                         EmbeddingMode mode, std::uint64_t seed) {
  FineTuneModel m;
  m.encoder = make_encoder(input_dim, encoder_dim, encoder_dim, true, edge_dim, seed);
  RngStream rng = derive_stream(seed, "nn.init.finetune");
  m.projection = {nn_detail::glorot(encoder_dim, embed_dim, rng),
                  nn_detail::small_bias(embed_dim, rng)};
  m.head1 = {nn_detail::glorot(embed_dim, embed_dim, rng), nn_detail::small_bias(embed_dim, rng)};
  m.head2 = {nn_detail::glorot(embed_dim, 2, rng), nn_detail::small_bias(2, rng)};
  m.mode = mode;
  return m;
}

inline std::vector<ParamRef> collect_params(FineTuneModel& m) {
  std::vector<ParamRef> out;
  collect_params(m.encoder, "encoder.", out);
  out.push_back({"projection.w", &m.projection.w});
  out.push_back({"projection.b", &m.projection.b});
  out.push_back({"head1.w", &m.head1.w});
  out.push_back({"head1.b", &m.head1.b});
  out.push_back({"head2.w", &m.head2.w});
  out.push_back({"head2.b", &m.head2.b});
  return out;
}

struct TapeFineTune {
  TapeEncoder encoder;
  int proj_w, proj_b, h1_w, h1_b, h2_w, h2_b;

  static TapeFineTune bind(Tape& tape, const FineTuneModel& m, bool requires_grad) {
    TapeFineTune t{TapeEncoder::bind(tape, m.encoder, requires_grad),
                   tape.input(m.projection.w, requires_grad),
                   tape.input(m.projection.b, requires_grad),
                   tape.input(m.head1.w, requires_grad),
                   tape.input(m.head1.b, requires_grad),
                   tape.input(m.head2.w, requires_grad),
                   tape.input(m.head2.b, requires_grad)};
    return t;
  }

  GradientSet grads(const Tape& tape) const {
    GradientSet g = encoder.grads(tape);
    for (int v : {proj_w, proj_b, h1_w, h1_b, h2_w, h2_b}) g.tensors.push_back(tape.grad(v));
    return g;
  }
};

// encoder -> per-node projection -> NE/SE embedding -> head; raw 2 logits.
inline int classify_logits_forward(Tape& tape, const TapeFineTune& tf, const FineTuneModel& m,
                                   const SubGraph& sub, EmbeddingMode mode) {
  const int nodes = encoder_nodes_forward(tape, tf.encoder, sub);
  const int projected = affine_forward(tape, tf.proj_w, tf.proj_b, nodes);
  const int emb = pool_embedding(tape, projected, sub, mode, m.encoder.readout);
  const int hidden = tape.relu(affine_forward(tape, tf.h1_w, tf.h1_b, emb));
  return affine_forward(tape, tf.h2_w, tf.h2_b, hidden);
}

// Same pass ending in softmax probabilities.
inline int classify_forward(Tape& tape, const TapeFineTune& tf, const FineTuneModel& m,
                            const SubGraph& sub, EmbeddingMode mode) {
  return tape.softmax(classify_logits_forward(tape, tf, m, sub, mode));
}

// Class probabilities without gradient tracking.
inline Tensor classify_eval(const FineTuneModel& m, const SubGraph& sub, EmbeddingMode mode) {
  Tape tape;
  TapeFineTune tf = TapeFineTune::bind(tape, m, false);
  return tape.value(classify_forward(tape, tf, m, sub, mode));
}

// The pooled pre-head embedding (what the classifier sees); used for export.
inline Tensor embed_eval(const FineTuneModel& m, const SubGraph& sub, EmbeddingMode mode) {
  Tape tape;
  TapeFineTune tf = TapeFineTune::bind(tape, m, false);
  const int nodes = encoder_nodes_forward(tape, tf.encoder, sub);
  const int projected = affine_forward(tape, tf.proj_w, tf.proj_b, nodes);
  return tape.value(pool_embedding(tape, projected, sub, mode, m.encoder.readout));
}

// -log p(label), clamped at 1e-12; batch losses sum over the training batch.
inline double cross_entropy(const Tensor& probs, std::uint8_t label) {
  require(probs.rows() == 1 && probs.cols() == 2 && label <= 1, ErrorCategory::Numeric,
          "cross_entropy expects a 2-class probability row");
  return -std::log(std::max(probs(0, label), Tape::kLogClamp));
}

struct FineTuneConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 100;
  double lr = 1e-5;
  OptimizerConfig::Kind optimizer = OptimizerConfig::Kind::adam;
  // Fresh RWR sample per labeled node per epoch; frozen reuses the epoch-0
  // sample throughout.
  bool fresh_subgraphs = true;
};

// Supervised fine-tuning on the labeled subset. Gradients flow through the
// encoder, the projection and the head. Returns per-epoch mean sample losses.
inline std::vector<double> finetune_fit(FineTuneModel& model, SubgraphSampler& sampler,
                                        const LabeledSet& labeled, const FineTuneConfig& cfg) {
  require(labeled.size() > 0, ErrorCategory::Config, "fine-tuning needs labeled nodes");
  require(labeled.count_of(0) > 0 && labeled.count_of(1) > 0, ErrorCategory::Config,
          "fine-tuning needs both classes in the training set");

  auto params = collect_params(model);
  Optimizer optimizer({cfg.optimizer, cfg.lr});
  std::vector<double> epoch_losses;

  std::vector<std::pair<NodeId, std::uint8_t>> order(labeled.entries());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    RngStream shuffle_rng = derive_stream(sampler.config().seed, "finetune.shuffle", epoch);
    shuffle_rng.shuffle(order);
    const std::uint64_t salt = cfg.fresh_subgraphs ? epoch : 0;

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
      // samples must outlive the tape: graph ops keep pointers into them
      std::vector<SubGraph> samples;
      samples.reserve(bsz);
      for (std::size_t i = 0; i < bsz; ++i)
        samples.push_back(sampler.draw(order[start + i].first, "rwr.finetune", salt));
      Tape tape;
      TapeFineTune tf = TapeFineTune::bind(tape, model, true);
      int batch_loss = -1;
      for (std::size_t i = 0; i < bsz; ++i) {
        const int logits = classify_logits_forward(tape, tf, model, samples[i], model.mode);
        const int li = tape.softmax_cross_entropy(logits, order[start + i].second);
        batch_loss = batch_loss < 0 ? li : tape.add(batch_loss, li);
      }
      loss_sum += tape.value(batch_loss)(0, 0);
      tape.backward(batch_loss);
      GradientSet grads = tf.grads(tape);
      grads.check_finite(params);
      optimizer.step(params, grads);
    }
    epoch_losses.push_back(loss_sum / static_cast<double>(order.size()));
  }
  return epoch_losses;
}

inline std::vector<double> finetune_fit(FineTuneModel& model, const SampleSource& src,
                                        const LabeledSet& labeled,
                                        const SamplerConfig& sampler_cfg,
                                        const FineTuneConfig& cfg) {
  SubgraphSampler sampler(src, sampler_cfg);
  return finetune_fit(model, sampler, labeled, cfg);
}

struct Prediction {
  std::vector<NodeId> nodes;
  std::vector<std::uint8_t> labels;
  std::vector<double> p_fraud;
};

// Argmax of classify_forward per node; ties resolve to class 0. Sampling is
// seeded per node, so repeated calls are identical.
inline Prediction predict(const FineTuneModel& model, SubgraphSampler& sampler,
                          const std::vector<NodeId>& nodes, EmbeddingMode mode) {
  Prediction out;
  out.nodes = nodes;
  out.labels.reserve(nodes.size());
  out.p_fraud.reserve(nodes.size());
  for (NodeId u : nodes) {
    const SubGraph sub = sampler.draw(u, "rwr.predict", 0);
    const Tensor probs = classify_eval(model, sub, mode);
    out.labels.push_back(probs(0, 1) > probs(0, 0) ? 1 : 0);
    out.p_fraud.push_back(probs(0, 1));
  }
  return out;
}

inline Prediction predict(const FineTuneModel& model, const SampleSource& src,
                          const std::vector<NodeId>& nodes, const SamplerConfig& sampler_cfg,
                          EmbeddingMode mode) {
  SubgraphSampler sampler(src, sampler_cfg);
  return predict(model, sampler, nodes, mode);
}

}  // namespace fraudgnn
