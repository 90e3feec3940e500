#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "fraudgnn/sampling.hpp"
#include "fraudgnn/tensor.hpp"

namespace fraudgnn {

// Reverse-mode tape over dense tensors. One tape per forward pass; nodes are
// replayed in reverse for exact gradients. Summation order is fixed by
// construction order, so training trajectories are bit-reproducible.
//
// Graph ops (neighbor_sum, edge_relu_sum) keep a pointer to their SubGraph:
// the subgraph must outlive every use of the tape, including backward().
class Tape {
  enum class Op {
    leaf,
    matmul,       // out = a * b
    matmul_nt,    // out = a * b^T
    add,          // out = a + b
    add_row,      // out = a + broadcast_rows(b), b is 1 x c
    one_plus_s,   // out = (1 + s) * a, s is 1 x 1
    relu,
    neighbor_sum,   // out_i = sum_{j in N(i)} a_j over sub's local adjacency
    edge_relu_sum,  // out_i = sum_{j in N(i)} relu(a_j + e_{ij})
    sum_rows,       // out = 1 x c
    mean_rows,
    select_row,
    l2_normalize,  // row vector; zero input maps to zero
    scale,         // out = c0 * a
    softmax,       // row vector, max-subtracted
    neg_log_pick,  // out = -log(max(a[i0], clamp))
    softmax_ce,    // out = logsumexp(a) - a[i0]; stable fused cross-entropy
  };

  struct Node {
    Op op;
    int a = -1, b = -1;
    int i0 = 0;
    double c0 = 0.0;
    const SubGraph* sub = nullptr;
    bool track = false;
  };

 public:
  static constexpr double kLogClamp = 1e-12;

  int input(const Tensor& t, bool requires_grad = true) {
    return push({Op::leaf, -1, -1, 0, 0.0, nullptr, requires_grad}, t);
  }
  int constant(const Tensor& t) { return input(t, false); }
  int constant_scalar(double v) { return constant(Tensor::scalar(v)); }

  int matmul(int a, int b) {
    return push({Op::matmul, a, b, 0, 0.0, nullptr, tracks(a) || tracks(b)},
                fraudgnn::matmul(values_[a], values_[b]));
  }

  int matmul_nt(int a, int b) {
    Tensor out(values_[a].rows(), values_[b].rows());
    matmul_nt_accum(values_[a], values_[b], out);
    return push({Op::matmul_nt, a, b, 0, 0.0, nullptr, tracks(a) || tracks(b)}, std::move(out));
  }

  int add(int a, int b) {
    Tensor out = values_[a];
    out.add_scaled(values_[b], 1.0);
    return push({Op::add, a, b, 0, 0.0, nullptr, tracks(a) || tracks(b)}, std::move(out));
  }

  int add_row(int a, int bias) {
    const Tensor& x = values_[a];
    const Tensor& bvec = values_[bias];
    require(bvec.rows() == 1 && bvec.cols() == x.cols(), ErrorCategory::Numeric,
            "bias must be 1 x cols");
    Tensor out = x;
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bvec(0, c);
    return push({Op::add_row, a, bias, 0, 0.0, nullptr, tracks(a) || tracks(bias)},
                std::move(out));
  }

  int one_plus_scalar_scale(int a, int s) {
    require(values_[s].rows() == 1 && values_[s].cols() == 1, ErrorCategory::Numeric,
            "epsilon must be scalar");
    Tensor out = values_[a];
    out.scale(1.0 + values_[s](0, 0));
    return push({Op::one_plus_s, a, s, 0, 0.0, nullptr, tracks(a) || tracks(s)}, std::move(out));
  }

  int relu(int a) {
    Tensor out = values_[a];
    for (double& v : out.data())
      if (v < 0.0) v = 0.0;
    return push({Op::relu, a, -1, 0, 0.0, nullptr, tracks(a)}, std::move(out));
  }

  int neighbor_sum(int a, const SubGraph& sub) {
    const Tensor& x = values_[a];
    require(x.rows() == sub.size(), ErrorCategory::Numeric, "neighbor_sum row mismatch");
    Tensor out(x.rows(), x.cols());
    for (std::uint32_t i = 0; i < sub.size(); ++i) {
      double* orow = out.row(i);
      for (std::uint32_t p = sub.local_offsets[i]; p < sub.local_offsets[i + 1]; ++p) {
        const double* xrow = x.row(sub.local_neighbors[p]);
        for (std::size_t c = 0; c < x.cols(); ++c) orow[c] += xrow[c];
      }
    }
    return push({Op::neighbor_sum, a, -1, 0, 0.0, &sub, tracks(a)}, std::move(out));
  }

  // e holds one projected feature row per undirected local edge; both
  // directions of an edge read the same row.
  int edge_relu_sum(int a, int e, const SubGraph& sub) {
    const Tensor& x = values_[a];
    const Tensor& ef = values_[e];
    require(x.rows() == sub.size() && ef.rows() == sub.edges.size() && ef.cols() == x.cols(),
            ErrorCategory::Numeric, "edge_relu_sum shape mismatch");
    Tensor out(x.rows(), x.cols());
    for (std::uint32_t i = 0; i < sub.size(); ++i) {
      double* orow = out.row(i);
      for (std::uint32_t p = sub.local_offsets[i]; p < sub.local_offsets[i + 1]; ++p) {
        const double* xrow = x.row(sub.local_neighbors[p]);
        const double* erow = ef.row(sub.local_edge[p]);
        for (std::size_t c = 0; c < x.cols(); ++c) {
          const double t = xrow[c] + erow[c];
          if (t > 0.0) orow[c] += t;
        }
      }
    }
    return push({Op::edge_relu_sum, a, e, 0, 0.0, &sub, tracks(a) || tracks(e)}, std::move(out));
  }

  int sum_rows(int a) {
    const Tensor& x = values_[a];
    require(x.rows() >= 1, ErrorCategory::Numeric, "sum_rows on empty input");
    Tensor out(1, x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) out(0, c) += x(r, c);
    return push({Op::sum_rows, a, -1, 0, 0.0, nullptr, tracks(a)}, std::move(out));
  }

  int mean_rows(int a) {
    const Tensor& x = values_[a];
    require(x.rows() >= 1, ErrorCategory::Numeric, "mean_rows on empty input");
    Tensor out(1, x.cols());
    const double inv = 1.0 / static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < x.cols(); ++c) out(0, c) += inv * x(r, c);
    return push({Op::mean_rows, a, -1, 0, 0.0, nullptr, tracks(a)}, std::move(out));
  }

  int select_row(int a, std::size_t row) {
    const Tensor& x = values_[a];
    require(row < x.rows(), ErrorCategory::Numeric, "select_row out of range");
    Tensor out(1, x.cols());
    std::copy(x.row(row), x.row(row) + x.cols(), out.row(0));
    return push({Op::select_row, a, -1, static_cast<int>(row), 0.0, nullptr, tracks(a)},
                std::move(out));
  }

  int l2_normalize(int a) {
    const Tensor& x = values_[a];
    require(x.rows() == 1, ErrorCategory::Numeric, "l2_normalize expects a row vector");
    Tensor out = x;
    const double n = x.l2_norm();
    if (n > 1e-12) out.scale(1.0 / n);
    else out.fill(0.0);
    return push({Op::l2_normalize, a, -1, 0, n, nullptr, tracks(a)}, std::move(out));
  }

  int scale(int a, double c) {
    Tensor out = values_[a];
    out.scale(c);
    return push({Op::scale, a, -1, 0, c, nullptr, tracks(a)}, std::move(out));
  }

  int softmax(int a) {
    const Tensor& x = values_[a];
    require(x.rows() == 1 && x.cols() >= 1, ErrorCategory::Numeric,
            "softmax expects a row vector");
    Tensor out = x;
    double mx = out(0, 0);
    for (std::size_t c = 1; c < out.cols(); ++c) mx = std::max(mx, out(0, c));
    double z = 0.0;
    for (std::size_t c = 0; c < out.cols(); ++c) {
      out(0, c) = std::exp(out(0, c) - mx);
      z += out(0, c);
    }
    for (std::size_t c = 0; c < out.cols(); ++c) out(0, c) /= z;
    return push({Op::softmax, a, -1, 0, 0.0, nullptr, tracks(a)}, std::move(out));
  }

  // -log(p[idx]), with the probability clamped at 1e-12.
  int neg_log_pick(int a, std::size_t idx) {
    const Tensor& p = values_[a];
    require(p.rows() == 1 && idx < p.cols(), ErrorCategory::Numeric, "neg_log_pick index");
    const double v = std::max(p(0, idx), kLogClamp);
    return push({Op::neg_log_pick, a, -1, static_cast<int>(idx), 0.0, nullptr, tracks(a)},
                Tensor::scalar(-std::log(v)));
  }

  // -log softmax(logits)[idx], fused for numerical stability: the gradient
  // (softmax - onehot) stays informative at any confidence level, unlike the
  // clamped probability path.
  int softmax_cross_entropy(int a, std::size_t idx) {
    const Tensor& l = values_[a];
    require(l.rows() == 1 && idx < l.cols(), ErrorCategory::Numeric, "softmax_ce index");
    double mx = l(0, 0);
    for (std::size_t c = 1; c < l.cols(); ++c) mx = std::max(mx, l(0, c));
    double z = 0.0;
    for (std::size_t c = 0; c < l.cols(); ++c) z += std::exp(l(0, c) - mx);
    return push({Op::softmax_ce, a, -1, static_cast<int>(idx), 0.0, nullptr, tracks(a)},
                Tensor::scalar(std::log(z) + mx - l(0, idx)));
  }

  const Tensor& value(int v) const { return values_[v]; }

  void backward(int loss) {
    const Tensor& l = values_[loss];
    require(l.rows() == 1 && l.cols() == 1, ErrorCategory::Numeric,
            "backward expects a scalar loss");
    grads_.assign(values_.size(), Tensor());
    touch(loss);
    grads_[loss](0, 0) = 1.0;
    for (int v = static_cast<int>(nodes_.size()) - 1; v >= 0; --v) {
      const Node& n = nodes_[v];
      if (!n.track || grads_[v].size() == 0) continue;
      propagate(v, n);
    }
  }

  bool has_grad(int v) const {
    return v < static_cast<int>(grads_.size()) && grads_[v].size() > 0;
  }

  // Distance of the forward pass from its nearest non-differentiable point
  // (relu kinks, the normalization origin). Finite-difference checks are only
  // valid at points with a margin comfortably above the probe step.
  double min_nonsmooth_margin() const {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < nodes_.size(); ++v) {
      const Node& n = nodes_[v];
      if (n.op == Op::relu) {
        const Tensor& x = values_[n.a];
        for (std::size_t i = 0; i < x.size(); ++i)
          margin = std::min(margin, std::abs(x.at_flat(i)));
      } else if (n.op == Op::edge_relu_sum) {
        const SubGraph& sub = *n.sub;
        const Tensor& x = values_[n.a];
        const Tensor& ef = values_[n.b];
        for (std::uint32_t i = 0; i < sub.size(); ++i)
          for (std::uint32_t p = sub.local_offsets[i]; p < sub.local_offsets[i + 1]; ++p)
            for (std::size_t c = 0; c < x.cols(); ++c)
              margin = std::min(margin, std::abs(x(sub.local_neighbors[p], c) +
                                                 ef(sub.local_edge[p], c)));
      } else if (n.op == Op::l2_normalize) {
        margin = std::min(margin, n.c0);
      }
    }
    return margin;
  }

  // Gradient of the loss w.r.t. var v (zeros if v never received one).
  Tensor grad(int v) const {
    if (has_grad(v)) return grads_[v];
    return Tensor(values_[v].rows(), values_[v].cols());
  }

 private:
  bool tracks(int v) const { return nodes_[v].track; }

  int push(Node n, Tensor value) {
    nodes_.push_back(n);
    values_.push_back(std::move(value));
    return static_cast<int>(nodes_.size()) - 1;
  }

  void touch(int v) {
    if (grads_[v].size() == 0) grads_[v] = Tensor(values_[v].rows(), values_[v].cols());
  }

  void accumulate(int v, const Tensor& g) {
    if (!tracks(v)) return;
    touch(v);
    grads_[v].add_scaled(g, 1.0);
  }

  void propagate(int v, const Node& n) {
    const Tensor& g = grads_[v];
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul:
        if (tracks(n.a)) {
          touch(n.a);
          matmul_nt_accum(g, values_[n.b], grads_[n.a]);
        }
        if (tracks(n.b)) {
          touch(n.b);
          matmul_tn_accum(values_[n.a], g, grads_[n.b]);
        }
        break;
      case Op::matmul_nt:
        if (tracks(n.a)) {
          touch(n.a);
          matmul_accum(g, values_[n.b], grads_[n.a]);
        }
        if (tracks(n.b)) {
          touch(n.b);
          matmul_tn_accum(g, values_[n.a], grads_[n.b]);
        }
        break;
      case Op::add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::add_row:
        accumulate(n.a, g);
        if (tracks(n.b)) {
          touch(n.b);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) grads_[n.b](0, c) += g(r, c);
        }
        break;
      case Op::one_plus_s: {
        const double f = 1.0 + values_[n.b](0, 0);
        if (tracks(n.a)) {
          touch(n.a);
          grads_[n.a].add_scaled(g, f);
        }
        if (tracks(n.b)) {
          touch(n.b);
          double s = 0.0;
          const Tensor& x = values_[n.a];
          for (std::size_t i = 0; i < x.size(); ++i) s += x.at_flat(i) * g.at_flat(i);
          grads_[n.b](0, 0) += s;
        }
        break;
      }
      case Op::relu:
        if (tracks(n.a)) {
          touch(n.a);
          const Tensor& x = values_[n.a];
          for (std::size_t i = 0; i < x.size(); ++i)
            if (x.at_flat(i) > 0.0) grads_[n.a].at_flat(i) += g.at_flat(i);
        }
        break;
      case Op::neighbor_sum:
        if (tracks(n.a)) {
          touch(n.a);
          const SubGraph& sub = *n.sub;
          for (std::uint32_t i = 0; i < sub.size(); ++i) {
            const double* grow = g.row(i);
            for (std::uint32_t p = sub.local_offsets[i]; p < sub.local_offsets[i + 1]; ++p) {
              double* drow = grads_[n.a].row(sub.local_neighbors[p]);
              for (std::size_t c = 0; c < g.cols(); ++c) drow[c] += grow[c];
            }
          }
        }
        break;
      case Op::edge_relu_sum: {
        const SubGraph& sub = *n.sub;
        const Tensor& x = values_[n.a];
        const Tensor& ef = values_[n.b];
        const bool ta = tracks(n.a), tb = tracks(n.b);
        if (ta) touch(n.a);
        if (tb) touch(n.b);
        for (std::uint32_t i = 0; i < sub.size(); ++i) {
          const double* grow = g.row(i);
          for (std::uint32_t p = sub.local_offsets[i]; p < sub.local_offsets[i + 1]; ++p) {
            const std::uint32_t j = sub.local_neighbors[p];
            const std::uint32_t e = sub.local_edge[p];
            const double* xrow = x.row(j);
            const double* erow = ef.row(e);
            for (std::size_t c = 0; c < g.cols(); ++c) {
              if (xrow[c] + erow[c] > 0.0) {
                if (ta) grads_[n.a](j, c) += grow[c];
                if (tb) grads_[n.b](e, c) += grow[c];
              }
            }
          }
        }
        break;
      }
      case Op::sum_rows:
        if (tracks(n.a)) {
          touch(n.a);
          for (std::size_t r = 0; r < grads_[n.a].rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) grads_[n.a](r, c) += g(0, c);
        }
        break;
      case Op::mean_rows:
        if (tracks(n.a)) {
          touch(n.a);
          const double inv = 1.0 / static_cast<double>(grads_[n.a].rows());
          for (std::size_t r = 0; r < grads_[n.a].rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) grads_[n.a](r, c) += inv * g(0, c);
        }
        break;
      case Op::select_row:
        if (tracks(n.a)) {
          touch(n.a);
          for (std::size_t c = 0; c < g.cols(); ++c)
            grads_[n.a](static_cast<std::size_t>(n.i0), c) += g(0, c);
        }
        break;
      case Op::l2_normalize:
        if (tracks(n.a)) {
          touch(n.a);
          const double norm = n.c0;
          if (norm > 1e-12) {
            const Tensor& y = values_[v];
            double gy = 0.0;
            for (std::size_t c = 0; c < g.cols(); ++c) gy += g(0, c) * y(0, c);
            for (std::size_t c = 0; c < g.cols(); ++c)
              grads_[n.a](0, c) += (g(0, c) - gy * y(0, c)) / norm;
          }
        }
        break;
      case Op::scale:
        if (tracks(n.a)) {
          touch(n.a);
          grads_[n.a].add_scaled(g, n.c0);
        }
        break;
      case Op::softmax:
        if (tracks(n.a)) {
          touch(n.a);
          const Tensor& y = values_[v];
          double gy = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) gy += g(0, c) * y(0, c);
          for (std::size_t c = 0; c < y.cols(); ++c)
            grads_[n.a](0, c) += y(0, c) * (g(0, c) - gy);
        }
        break;
      case Op::neg_log_pick:
        if (tracks(n.a)) {
          touch(n.a);
          const double p = values_[n.a](0, static_cast<std::size_t>(n.i0));
          if (p > kLogClamp)
            grads_[n.a](0, static_cast<std::size_t>(n.i0)) -= g(0, 0) / p;
        }
        break;
      case Op::softmax_ce:
        if (tracks(n.a)) {
          touch(n.a);
          const Tensor& l = values_[n.a];
          double mx = l(0, 0);
          for (std::size_t c = 1; c < l.cols(); ++c) mx = std::max(mx, l(0, c));
          double z = 0.0;
          for (std::size_t c = 0; c < l.cols(); ++c) z += std::exp(l(0, c) - mx);
          for (std::size_t c = 0; c < l.cols(); ++c) {
            const double soft = std::exp(l(0, c) - mx) / z;
            const double onehot = c == static_cast<std::size_t>(n.i0) ? 1.0 : 0.0;
            grads_[n.a](0, c) += g(0, 0) * (soft - onehot);
          }
        }
        break;
    }
  }

  std::vector<Node> nodes_;
  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
};

}  // namespace fraudgnn
