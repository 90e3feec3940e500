#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fraudgnn/autograd.hpp"
#include "fraudgnn/rng.hpp"
#include "fraudgnn/sampling.hpp"
#include "fraudgnn/tensor.hpp"

namespace fraudgnn {

enum class EmbeddingMode { node, subgraph };  // NE | SE
enum class Readout { sum, mean };
enum class Activation { relu, identity };

inline EmbeddingMode parse_mode(const std::string& s) {
  if (s == "ne" || s == "NE") return EmbeddingMode::node;
  if (s == "se" || s == "SE") return EmbeddingMode::subgraph;
  throw ConfigError("embedding mode must be NE or SE, got '" + s + "'");
}

struct AffineParams {
  Tensor w;  // in x out
  Tensor b;  // 1 x out
};

// One GIN layer: a 2-layer MLP applied to the aggregated message, a learnable
// epsilon on the self term, and (edge-aware only) an affine projection taking
// raw edge features to this layer's input width.
struct GinLayerParams {
  AffineParams lin1;
  AffineParams lin2;
  Tensor eps;  // 1 x 1, initialized to 0
  AffineParams edge_proj;
  Activation activation = Activation::relu;
};

struct EncoderParams {
  std::vector<GinLayerParams> layers;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t output_dim = 0;
  std::size_t edge_dim = 0;  // 0 when not edge-aware
  bool edge_aware = false;
  Readout readout = Readout::sum;
};

namespace nn_detail {

inline Tensor glorot(std::size_t rows, std::size_t cols, RngStream& rng) {
  Tensor t(rows, cols);
  const double stddev = std::sqrt(2.0 / static_cast<double>(rows + cols));
  t.fill_normal(rng, stddev);
  return t;
}

// Small random bias keeps fresh networks off exact relu kinks (degenerate
// all-zero activations at init otherwise show up for small widths).
inline Tensor small_bias(std::size_t cols, RngStream& rng) {
  Tensor t(1, cols);
  t.fill_normal(rng, 0.01);
  return t;
}

}  // namespace nn_detail

// Three stacked layers in the reference configuration (in -> h -> h -> out).
inline EncoderParams make_encoder(std::size_t input_dim, std::size_t hidden_dim,
                                  std::size_t output_dim, bool edge_aware,
                                  std::size_t edge_dim, std::uint64_t seed,
                                  std::size_t num_layers = 3) {
  require(input_dim >= 1 && hidden_dim >= 1 && output_dim >= 1 && num_layers >= 1,
          ErrorCategory::Config, "encoder dims must be positive");
  require(!edge_aware || edge_dim >= 1, ErrorCategory::Config,
          "edge-aware encoder needs edge_dim >= 1");
  EncoderParams enc;
  enc.input_dim = input_dim;
  enc.hidden_dim = hidden_dim;
  enc.output_dim = output_dim;
  enc.edge_aware = edge_aware;
  enc.edge_dim = edge_aware ? edge_dim : 0;
  RngStream rng = derive_stream(seed, "nn.init.encoder");
  for (std::size_t l = 0; l < num_layers; ++l) {
    const std::size_t din = l == 0 ? input_dim : hidden_dim;
    const std::size_t dout = l + 1 == num_layers ? output_dim : hidden_dim;
    GinLayerParams layer;
    layer.lin1 = {nn_detail::glorot(din, dout, rng), nn_detail::small_bias(dout, rng)};
    layer.lin2 = {nn_detail::glorot(dout, dout, rng), nn_detail::small_bias(dout, rng)};
    layer.eps = Tensor::scalar(0.0);
    // Edge projections start at zero weight so a warm-started encoder begins
    // close to its pre-trained (edge-free) behavior.
    if (edge_aware)
      layer.edge_proj = {Tensor(edge_dim, din), nn_detail::small_bias(din, rng)};
    enc.layers.push_back(std::move(layer));
  }
  return enc;
}

// --- parameter enumeration (fixed order: optimizer state, checkpoints and
// momentum updates all rely on it) ---

struct ParamRef {
  std::string name;
  Tensor* tensor;
};

inline void collect_params(EncoderParams& enc, const std::string& prefix,
                           std::vector<ParamRef>& out) {
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    GinLayerParams& layer = enc.layers[l];
    const std::string base = prefix + "layer" + std::to_string(l) + ".";
    out.push_back({base + "lin1.w", &layer.lin1.w});
    out.push_back({base + "lin1.b", &layer.lin1.b});
    out.push_back({base + "lin2.w", &layer.lin2.w});
    out.push_back({base + "lin2.b", &layer.lin2.b});
    out.push_back({base + "eps", &layer.eps});
    if (enc.edge_aware) {
      out.push_back({base + "edge.w", &layer.edge_proj.w});
      out.push_back({base + "edge.b", &layer.edge_proj.b});
    }
  }
}

inline std::vector<ParamRef> collect_params(EncoderParams& enc) {
  std::vector<ParamRef> out;
  collect_params(enc, "encoder.", out);
  return out;
}

// One gradient tensor per parameter, same order and shapes.
struct GradientSet {
  std::vector<Tensor> tensors;

  static GradientSet zeros_like(const std::vector<ParamRef>& params) {
    GradientSet g;
    g.tensors.reserve(params.size());
    for (const ParamRef& p : params) g.tensors.emplace_back(p.tensor->rows(), p.tensor->cols());
    return g;
  }

  void accumulate(const GradientSet& other) {
    require(tensors.size() == other.tensors.size(), ErrorCategory::Numeric,
            "gradient set size mismatch");
    for (std::size_t i = 0; i < tensors.size(); ++i)
      tensors[i].add_scaled(other.tensors[i], 1.0);
  }

  void scale(double alpha) {
    for (Tensor& t : tensors) t.scale(alpha);
  }

  void check_finite(const std::vector<ParamRef>& params) const {
    for (std::size_t i = 0; i < tensors.size(); ++i)
      require(tensors[i].all_finite(), ErrorCategory::Numeric,
              "non-finite gradient in " + params[i].name);
  }
};

// --- tape-bound forward passes ---

// Variable ids of one encoder's parameters registered on a tape.
struct TapeEncoder {
  struct LayerVars {
    int w1, b1, w2, b2, eps;
    int ew = -1, eb = -1;
  };
  std::vector<LayerVars> layers;
  const EncoderParams* meta = nullptr;

  static TapeEncoder bind(Tape& tape, const EncoderParams& enc, bool requires_grad) {
    TapeEncoder te;
    te.meta = &enc;
    for (const GinLayerParams& layer : enc.layers) {
      LayerVars lv{tape.input(layer.lin1.w, requires_grad), tape.input(layer.lin1.b, requires_grad),
                   tape.input(layer.lin2.w, requires_grad), tape.input(layer.lin2.b, requires_grad),
                   tape.input(layer.eps, requires_grad)};
      if (enc.edge_aware) {
        lv.ew = tape.input(layer.edge_proj.w, requires_grad);
        lv.eb = tape.input(layer.edge_proj.b, requires_grad);
      }
      te.layers.push_back(lv);
    }
    return te;
  }

  // Gradients in collect_params order; call after tape.backward().
  GradientSet grads(const Tape& tape) const {
    GradientSet g;
    for (const LayerVars& lv : layers) {
      g.tensors.push_back(tape.grad(lv.w1));
      g.tensors.push_back(tape.grad(lv.b1));
      g.tensors.push_back(tape.grad(lv.w2));
      g.tensors.push_back(tape.grad(lv.b2));
      g.tensors.push_back(tape.grad(lv.eps));
      if (lv.ew >= 0) {
        g.tensors.push_back(tape.grad(lv.ew));
        g.tensors.push_back(tape.grad(lv.eb));
      }
    }
    return g;
  }
};

inline int affine_forward(Tape& tape, int w, int b, int x) {
  return tape.add_row(tape.matmul(x, w), b);
}

inline int mlp_forward(Tape& tape, const TapeEncoder::LayerVars& lv, int x,
                       Activation act = Activation::relu) {
  int h = affine_forward(tape, lv.w1, lv.b1, x);
  if (act == Activation::relu) h = tape.relu(h);
  return affine_forward(tape, lv.w2, lv.b2, h);
}

// Eq.-style sum aggregation: MLP((1 + eps) * x_i + sum_{j in N(i)} x_j).
inline int gin_layer_forward(Tape& tape, const TapeEncoder::LayerVars& lv, const SubGraph& sub,
                             int x, Activation act = Activation::relu) {
  const int agg = tape.add(tape.one_plus_scalar_scale(x, lv.eps), tape.neighbor_sum(x, sub));
  return mlp_forward(tape, lv, agg, act);
}

// Edge-aware aggregation: MLP((1 + eps) * x_i + sum_{j} relu(x_j + e_ij)),
// with raw edge features first projected to this layer's input width.
inline int gin_edge_layer_forward(Tape& tape, const TapeEncoder::LayerVars& lv,
                                  const SubGraph& sub, int x, int raw_edge_features,
                                  Activation act = Activation::relu) {
  const int eproj = affine_forward(tape, lv.ew, lv.eb, raw_edge_features);
  const int agg =
      tape.add(tape.one_plus_scalar_scale(x, lv.eps), tape.edge_relu_sum(x, eproj, sub));
  return mlp_forward(tape, lv, agg, act);
}

inline int readout_forward(Tape& tape, int node_embeddings, Readout readout) {
  return readout == Readout::sum ? tape.sum_rows(node_embeddings)
                                 : tape.mean_rows(node_embeddings);
}

// Stacked layers over a subgraph; returns the members x output_dim var.
inline int encoder_nodes_forward(Tape& tape, const TapeEncoder& te, const SubGraph& sub) {
  const EncoderParams& enc = *te.meta;
  require(sub.size() >= 1, ErrorCategory::Validation, "encoder needs a non-empty subgraph");
  require(sub.node_features.cols() == enc.input_dim, ErrorCategory::Validation,
          "subgraph feature dim " + std::to_string(sub.node_features.cols()) +
              " != encoder input dim " + std::to_string(enc.input_dim));
  int x = tape.constant(sub.node_features);
  int eraw = -1;
  if (enc.edge_aware) {
    require(sub.edge_features.cols() == enc.edge_dim || sub.edges.empty(),
            ErrorCategory::Validation, "subgraph edge feature dim mismatch");
    Tensor ef = sub.edge_features;
    if (ef.cols() != enc.edge_dim) ef = Tensor(0, enc.edge_dim);
    eraw = tape.constant(ef);
  }
  for (std::size_t l = 0; l < enc.layers.size(); ++l) {
    x = enc.edge_aware ? gin_edge_layer_forward(tape, te.layers[l], sub, x, eraw)
                       : gin_layer_forward(tape, te.layers[l], sub, x);
  }
  return x;
}

inline int pool_embedding(Tape& tape, int node_embeddings, const SubGraph& sub,
                          EmbeddingMode mode, Readout readout) {
  return mode == EmbeddingMode::node ? tape.select_row(node_embeddings, sub.anchor_index)
                                     : readout_forward(tape, node_embeddings, readout);
}

// Full encoder pass over a subgraph. Returns a 1 x output_dim embedding: the
// anchor row (NE) or the pooled readout (SE).
inline int encoder_forward(Tape& tape, const TapeEncoder& te, const SubGraph& sub,
                           EmbeddingMode mode) {
  const int x = encoder_nodes_forward(tape, te, sub);
  return pool_embedding(tape, x, sub, mode, te.meta->readout);
}

// Convenience non-tape evaluation (prediction, tests).
inline Tensor encoder_eval(const EncoderParams& enc, const SubGraph& sub, EmbeddingMode mode) {
  Tape tape;
  TapeEncoder te = TapeEncoder::bind(tape, enc, false);
  return tape.value(encoder_forward(tape, te, sub, mode));
}

// --- optimizer ---

struct OptimizerConfig {
  enum class Kind { sgd, adam } kind = Kind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(const std::vector<ParamRef>& params, const GradientSet& grads) {
    require(grads.tensors.size() == params.size(), ErrorCategory::Numeric,
            "optimizer gradient count mismatch");
    grads.check_finite(params);
    if (cfg_.kind == OptimizerConfig::Kind::sgd) {
      for (std::size_t i = 0; i < params.size(); ++i)
        params[i].tensor->add_scaled(grads.tensors[i], -cfg_.lr);
      return;
    }
    if (m_.empty()) {
      for (const ParamRef& p : params) {
        m_.emplace_back(p.tensor->rows(), p.tensor->cols());
        v_.emplace_back(p.tensor->rows(), p.tensor->cols());
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor& th = *params[i].tensor;
      const Tensor& g = grads.tensors[i];
      for (std::size_t j = 0; j < th.size(); ++j) {
        double& m = m_[i].at_flat(j);
        double& v = v_[i].at_flat(j);
        const double gj = g.at_flat(j);
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * gj;
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * gj * gj;
        th.at_flat(j) -= cfg_.lr * (m / bc1) / (std::sqrt(v / bc2) + cfg_.eps);
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

// Plain gradient-descent update, kept as a free function for spot checks.
inline void opt_step(const std::vector<ParamRef>& params, const GradientSet& grads, double lr) {
  Optimizer opt({OptimizerConfig::Kind::sgd, lr});
  opt.step(params, grads);
}

// Central-difference gradient check. `loss_fn(grads_out)` evaluates the loss
// at the current parameter values and, when grads_out is non-null, fills the
// analytic gradients. Returns the max relative error over every entry, with
// the denominator floored at 1 so near-zero gradients compare absolutely.
inline double fd_check(const std::vector<ParamRef>& params,
                       const std::function<double(GradientSet*)>& loss_fn, double h = 1e-5) {
  GradientSet analytic = GradientSet::zeros_like(params);
  loss_fn(&analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = *params[i].tensor;
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double saved = t.at_flat(j);
      t.at_flat(j) = saved + h;
      const double up = loss_fn(nullptr);
      t.at_flat(j) = saved - h;
      const double down = loss_fn(nullptr);
      t.at_flat(j) = saved;
      const double fd = (up - down) / (2.0 * h);
      const double ad = analytic.tensors[i].at_flat(j);
      const double rel = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace fraudgnn
