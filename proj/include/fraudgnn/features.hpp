#pragma once

#include <cmath>
#include <string>

#include "fraudgnn/graph.hpp"
#include "fraudgnn/rng.hpp"
#include "fraudgnn/tensor.hpp"

namespace fraudgnn {

// Node feature matrix produced by an initializer; rows follow node ids.
struct FeatureMatrix {
  Tensor values;  // node_count x dim
  std::string method;
  std::string config_echo;

  std::size_t rows() const { return values.rows(); }
  std::size_t dim() const { return values.cols(); }
};

// I.i.d. standard normal features, deterministic in (seed, dim).
inline FeatureMatrix init_random(GraphView g, std::size_t dim, std::uint64_t seed) {
  require(dim >= 1, ErrorCategory::Config, "random feature dim must be >= 1");
  FeatureMatrix f;
  f.values = Tensor(g.node_count, dim);
  RngStream rng = derive_stream(seed, "feat.random");
  f.values.fill_normal(rng);
  f.method = "random";
  f.config_echo = "dim=" + std::to_string(dim) + " seed=" + std::to_string(seed);
  return f;
}

// One-hot degree vector; degrees above the cap are clamped to the last slot.
inline FeatureMatrix init_degree(GraphView g, std::size_t cap = 128) {
  require(cap >= 1, ErrorCategory::Config, "degree cap must be >= 1");
  std::size_t max_degree = 0;
  for (NodeId u = 0; u < g.node_count; ++u) max_degree = std::max(max_degree, g.degree(u));
  const std::size_t top = std::min(max_degree, cap);
  FeatureMatrix f;
  f.values = Tensor(g.node_count, top + 1);
  for (NodeId u = 0; u < g.node_count; ++u)
    f.values(u, std::min(g.degree(u), top)) = 1.0;
  f.method = "degree";
  f.config_echo = "cap=" + std::to_string(cap) + " max_degree=" + std::to_string(max_degree);
  return f;
}

// PageRank via power iteration on the undirected random walk. Dangling mass
// (isolated nodes) is redistributed uniformly, so scores always sum to 1.
inline FeatureMatrix init_pagerank(GraphView g, double damping = 0.85, double tol = 1e-10,
                                   std::size_t max_iter = 200) {
  require(damping > 0.0 && damping < 1.0, ErrorCategory::Config,
          "pagerank damping must be in (0,1)");
  require(tol > 0.0, ErrorCategory::Config, "pagerank tol must be positive");
  const std::size_t n = g.node_count;
  FeatureMatrix f;
  f.values = Tensor(n, 1);
  f.method = "pagerank";
  f.config_echo = "damping=" + std::to_string(damping);
  if (n == 0) return f;

  std::vector<double> p(n, 1.0 / static_cast<double>(n)), next(n);
  double residual = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    double dangling = 0.0;
    for (NodeId u = 0; u < n; ++u)
      if (g.degree(u) == 0) dangling += p[u];
    const double base = (1.0 - damping) / static_cast<double>(n) +
                        damping * dangling / static_cast<double>(n);
    std::fill(next.begin(), next.end(), base);
    for (NodeId u = 0; u < n; ++u) {
      const std::size_t deg = g.degree(u);
      if (deg == 0) continue;
      const double share = damping * p[u] / static_cast<double>(deg);
      for (NodeId v : g.neighbors_of(u)) next[v] += share;
    }
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) residual += std::abs(next[i] - p[i]);
    p.swap(next);
    if (residual < tol) {
      for (NodeId u = 0; u < n; ++u) f.values(u, 0) = p[u];
      return f;
    }
  }
  throw NumericError("pagerank did not converge within " + std::to_string(max_iter) +
                     " iterations (last residual " + std::to_string(residual) + ")");
}

// Per-dimension z-score (population variance); constant columns map to zero.
inline FeatureMatrix normalize_features(const FeatureMatrix& x) {
  FeatureMatrix out = x;
  const std::size_t n = x.rows(), d = x.dim();
  if (n == 0) return out;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x.values(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dvi = x.values(r, c) - mean;
      var += dvi * dvi;
    }
    var /= static_cast<double>(n);
    if (var <= 0.0) {
      for (std::size_t r = 0; r < n; ++r) out.values(r, c) = 0.0;
    } else {
      const double inv = 1.0 / std::sqrt(var);
      for (std::size_t r = 0; r < n; ++r) out.values(r, c) = (x.values(r, c) - mean) * inv;
    }
  }
  out.config_echo = x.config_echo + " normalized=1";
  return out;
}

}  // namespace fraudgnn
