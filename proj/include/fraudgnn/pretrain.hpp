#pragma once

#include <deque>
#include <vector>

#include "fraudgnn/nn.hpp"
#include "fraudgnn/sampling.hpp"

namespace fraudgnn {

// InfoNCE over a query, its matching key and a set of negatives. Inputs are
// expected to be L2-normalized; the denominator runs over key + negatives.
inline double info_nce(const Tensor& e_q, const Tensor& e_k,
                       const std::vector<Tensor>& negatives, double tau) {
  require(tau > 0.0, ErrorCategory::Numeric, "temperature must be positive");
  require(e_q.rows() == 1 && e_k.rows() == 1 && e_q.cols() == e_k.cols(),
          ErrorCategory::Numeric, "info_nce embedding shape mismatch");
  auto dot = [&](const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += a(0, c) * b(0, c);
    return s;
  };
  std::vector<double> logits{dot(e_q, e_k) / tau};
  for (const Tensor& n : negatives) {
    require(n.rows() == 1 && n.cols() == e_q.cols(), ErrorCategory::Numeric,
            "info_nce negative shape mismatch");
    logits.push_back(dot(e_q, n) / tau);
  }
  double mx = logits[0];
  for (double l : logits) mx = std::max(mx, l);
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return -(logits[0] - mx - std::log(z));
}

// MoCo training state: query/key encoders, momentum, temperature and the
// FIFO queue of past key embeddings.
struct MoCoState {
  EncoderParams theta_q;
  EncoderParams theta_k;
  std::deque<std::vector<double>> queue;  // rows of dim theta_q.output_dim
  std::size_t queue_capacity = 1024;
  double momentum = 0.999;
  double tau = 0.07;

  void validate() const {
    require(momentum >= 0.0 && momentum < 1.0, ErrorCategory::Config,
            "momentum must be in [0,1)");
    require(tau > 0.0, ErrorCategory::Config, "temperature must be positive");
    require(queue_capacity >= 1, ErrorCategory::Config, "queue capacity must be >= 1");
  }
};

// theta_k starts as an exact copy of theta_q.
inline MoCoState make_moco_state(const EncoderParams& encoder, double momentum, double tau,
                                 std::size_t queue_capacity) {
  MoCoState state;
  state.theta_q = encoder;
  state.theta_k = encoder;
  state.momentum = momentum;
  state.tau = tau;
  state.queue_capacity = queue_capacity;
  state.validate();
  return state;
}

// theta_k <- m * theta_k + (1 - m) * theta_q, element-wise over every tensor.
inline void momentum_update(MoCoState& state) {
  auto qp = collect_params(state.theta_q);
  auto kp = collect_params(state.theta_k);
  for (std::size_t i = 0; i < qp.size(); ++i) {
    Tensor& k = *kp[i].tensor;
    k.scale(state.momentum);
    k.add_scaled(*qp[i].tensor, 1.0 - state.momentum);
  }
}

// FIFO push of a key batch; oldest entries are evicted past capacity.
inline void queue_push(MoCoState& state, const std::vector<std::vector<double>>& keys) {
  require(keys.size() <= state.queue_capacity, ErrorCategory::Validation,
          "key batch exceeds queue capacity");
  for (const auto& k : keys) state.queue.push_back(k);
  while (state.queue.size() > state.queue_capacity) state.queue.pop_front();
}

struct PretrainConfig {
  std::size_t batch_size = 200;
  double lr = 1e-6;
  OptimizerConfig::Kind optimizer = OptimizerConfig::Kind::adam;
  EmbeddingMode mode = EmbeddingMode::subgraph;
};

namespace pretrain_detail {

inline std::vector<double> normalized_row(const Tensor& row) {
  std::vector<double> out(row.cols());
  double n = row.l2_norm();
  if (n <= 1e-12) return out;
  for (std::size_t c = 0; c < row.cols(); ++c) out[c] = row(0, c) / n;
  return out;
}

}  // namespace pretrain_detail

// Fills the queue with momentum-encoder keys before the first optimization
// step, so every training batch sees a steady-state key set. One pass over
// the anchors, capped at the queue capacity.
inline void queue_warm_start(SubgraphSampler& sampler, const std::vector<NodeId>& anchors,
                             MoCoState& state, const PretrainConfig& cfg) {
  const std::size_t want = std::min(state.queue_capacity, anchors.size());
  for (std::size_t i = 0; i < want; ++i) {
    const SubGraph sub = sampler.draw(anchors[i], "rwr.warmstart", 0);
    const Tensor k = encoder_eval(state.theta_k, sub, cfg.mode);
    queue_push(state, {pretrain_detail::normalized_row(k)});
  }
}

inline void queue_warm_start(const SampleSource& src, const std::vector<NodeId>& anchors,
                             MoCoState& state, const SamplerConfig& sampler_cfg,
                             const PretrainConfig& cfg) {
  SubgraphSampler sampler(src, sampler_cfg);
  queue_warm_start(sampler, anchors, state, cfg);
}

// One contrastive epoch: per batch, encode queries with theta_q and keys with
// theta_k (no gradient), minimize InfoNCE against in-batch keys plus the
// queue, update theta_q, momentum-update theta_k, then enqueue the keys.
// Returns the mean per-sample loss over the epoch.
inline double pretrain_epoch(SubgraphSampler& sampler, const std::vector<NodeId>& anchors,
                             MoCoState& state, Optimizer& optimizer, const PretrainConfig& cfg,
                             std::uint64_t epoch) {
  state.validate();
  require(!anchors.empty(), ErrorCategory::Validation, "pretrain needs at least one anchor");
  std::vector<NodeId> order = anchors;
  RngStream shuffle_rng = derive_stream(sampler.config().seed, "pretrain.shuffle", epoch);
  shuffle_rng.shuffle(order);

  auto q_params = collect_params(state.theta_q);
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
    std::vector<std::pair<SubGraph, SubGraph>> pairs;
    pairs.reserve(bsz);
    for (std::size_t i = 0; i < bsz; ++i) {
      const NodeId u = order[start + i];
      pairs.emplace_back(sampler.draw(u, "rwr.query", epoch), sampler.draw(u, "rwr.key", epoch));
    }

    // Keys through the momentum encoder, no gradient.
    std::vector<std::vector<double>> key_rows;
    key_rows.reserve(bsz);
    for (const auto& [q_sub, k_sub] : pairs) {
      (void)q_sub;
      Tensor k = encoder_eval(state.theta_k, k_sub, cfg.mode);
      key_rows.push_back(pretrain_detail::normalized_row(k));
    }

    // Candidate keys: this batch's keys first, queue snapshot after. Sample
    // i's positive sits at index i; everything else is a negative.
    const std::size_t dim = state.theta_q.output_dim;
    Tensor candidates(bsz + state.queue.size(), dim);
    for (std::size_t i = 0; i < bsz; ++i)
      std::copy(key_rows[i].begin(), key_rows[i].end(), candidates.row(i));
    {
      std::size_t r = bsz;
      for (const auto& row : state.queue)
        std::copy(row.begin(), row.end(), candidates.row(r++));
    }

    Tape tape;
    TapeEncoder te = TapeEncoder::bind(tape, state.theta_q, true);
    const int cand = tape.constant(candidates);
    int batch_loss = -1;
    for (std::size_t i = 0; i < bsz; ++i) {
      const int q_emb = tape.l2_normalize(encoder_forward(tape, te, pairs[i].first, cfg.mode));
      const int logits = tape.scale(tape.matmul_nt(q_emb, cand), 1.0 / state.tau);
      const int li = tape.softmax_cross_entropy(logits, i);
      batch_loss = batch_loss < 0 ? li : tape.add(batch_loss, li);
    }
    const int mean_loss = tape.scale(batch_loss, 1.0 / static_cast<double>(bsz));
    loss_sum += tape.value(batch_loss)(0, 0);
    loss_count += bsz;

    tape.backward(mean_loss);
    GradientSet grads = te.grads(tape);
    grads.check_finite(q_params);
    optimizer.step(q_params, grads);
    momentum_update(state);
    queue_push(state, key_rows);
  }
  return loss_sum / static_cast<double>(loss_count);
}

inline double pretrain_epoch(const SampleSource& src, const std::vector<NodeId>& anchors,
                             MoCoState& state, const SamplerConfig& sampler_cfg,
                             Optimizer& optimizer, const PretrainConfig& cfg,
                             std::uint64_t epoch) {
  SubgraphSampler sampler(src, sampler_cfg);
  return pretrain_epoch(sampler, anchors, state, optimizer, cfg, epoch);
}

}  // namespace fraudgnn
