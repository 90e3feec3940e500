#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fraudgnn/features.hpp"
#include "fraudgnn/graph.hpp"
#include "fraudgnn/rng.hpp"
#include "fraudgnn/tensor.hpp"

namespace fraudgnn {

namespace spectral {

// y = D^{-1/2} A D^{-1/2} x; isolated nodes contribute zero rows.
inline void normalized_adjacency_matvec(GraphView g, const std::vector<double>& inv_sqrt_deg,
                                        const double* x, double* y) {
  for (NodeId u = 0; u < g.node_count; ++u) {
    double s = 0.0;
    for (NodeId v : g.neighbors_of(u)) s += inv_sqrt_deg[v] * x[v];
    y[u] = inv_sqrt_deg[u] * s;
  }
}

inline std::vector<double> inv_sqrt_degrees(GraphView g) {
  std::vector<double> d(g.node_count, 0.0);
  for (NodeId u = 0; u < g.node_count; ++u) {
    const std::size_t deg = g.degree(u);
    if (deg > 0) d[u] = 1.0 / std::sqrt(static_cast<double>(deg));
  }
  return d;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix; eigenvectors end up
// in the columns of `vecs`. O(n^3) per sweep, fine for the dense fallback.
inline void jacobi_eigen(Tensor& a, std::vector<double>& values, Tensor& vecs) {
  const std::size_t n = a.rows();
  values.assign(n, 0.0);
  vecs = Tensor(n, n);
  for (std::size_t i = 0; i < n; ++i) vecs(i, i) = 1.0;
  if (n == 0) return;

  const std::size_t max_sweeps = 64;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26 * static_cast<double>(n * n)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a(p, i), aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = vecs(i, p), viq = vecs(i, q);
          vecs(i, p) = c * vip - s * viq;
          vecs(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) values[i] = a(i, i);
}

struct EigenPairs {
  std::vector<double> values;  // descending
  Tensor vectors;              // node_count x k, column j pairs with values[j]
};

// Largest-magnitude entry of each column made positive; magnitude ties break
// to the smallest row index.
inline void apply_sign_convention(Tensor& vectors) {
  for (std::size_t c = 0; c < vectors.cols(); ++c) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < vectors.rows(); ++r) {
      const double m = std::abs(vectors(r, c));
      if (m > best) {
        best = m;
        arg = r;
      }
    }
    if (vectors(arg, c) < 0.0)
      for (std::size_t r = 0; r < vectors.rows(); ++r) vectors(r, c) = -vectors(r, c);
  }
}

inline EigenPairs dense_top_k(GraphView g, std::size_t k) {
  const std::size_t n = g.node_count;
  const auto isd = inv_sqrt_degrees(g);
  Tensor a(n, n);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v : g.neighbors_of(u)) a(u, v) = isd[u] * isd[v];
  std::vector<double> values;
  Tensor vecs;
  jacobi_eigen(a, values, vecs);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });

  EigenPairs out;
  const std::size_t kk = std::min(k, n);
  out.values.resize(kk);
  out.vectors = Tensor(n, kk);
  for (std::size_t j = 0; j < kk; ++j) {
    out.values[j] = values[order[j]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = vecs(i, order[j]);
  }
  return out;
}

// Restarted Lanczos with full reorthogonalization and explicit deflation
// against locked eigenvectors. Degenerate eigenvalues surface one copy per
// restart, which keeps the ordering deterministic.
inline EigenPairs lanczos_top_k(GraphView g, std::size_t k, double tol) {
  const std::size_t n = g.node_count;
  const std::size_t kk = std::min(k, n);
  const auto isd = inv_sqrt_degrees(g);

  std::vector<std::vector<double>> locked;
  std::vector<double> locked_values;

  auto dot = [n](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };
  auto norm = [&](const double* a) { return std::sqrt(dot(a, a)); };

  const std::size_t m_max = std::min(n, std::max<std::size_t>(2 * kk + 16, 32));
  const std::size_t max_restarts = 200;
  RngStream rng = derive_stream(0x5eedULL, "spectral.start");

  std::vector<double> start(n);
  bool have_start = false;

  for (std::size_t restart = 0; restart < max_restarts && locked.size() < kk; ++restart) {
    if (!have_start)
      for (double& v : start) v = rng.next_normal();
    have_start = false;
    // Deflate and normalize the start vector.
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : locked) {
        const double c = dot(start.data(), u.data());
        for (std::size_t i = 0; i < n; ++i) start[i] -= c * u[i];
      }
    double sn = norm(start.data());
    if (sn < 1e-12) continue;
    for (double& v : start) v /= sn;

    std::vector<std::vector<double>> basis;
    basis.push_back(start);
    std::vector<double> alpha, beta;
    std::vector<double> w(n);

    std::size_t m = 0;
    for (std::size_t j = 0; j < m_max; ++j) {
      normalized_adjacency_matvec(g, isd, basis[j].data(), w.data());
      const double a = dot(w.data(), basis[j].data());
      alpha.push_back(a);
      for (std::size_t i = 0; i < n; ++i) w[i] -= a * basis[j][i];
      if (j > 0)
        for (std::size_t i = 0; i < n; ++i) w[i] -= beta[j - 1] * basis[j - 1][i];
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& u : locked) {
          const double c = dot(w.data(), u.data());
          for (std::size_t i = 0; i < n; ++i) w[i] -= c * u[i];
        }
        for (const auto& u : basis) {
          const double c = dot(w.data(), u.data());
          for (std::size_t i = 0; i < n; ++i) w[i] -= c * u[i];
        }
      }
      const double b = norm(w.data());
      m = j + 1;
      if (b < 1e-12 || m == m_max) break;
      beta.push_back(b);
      std::vector<double> next(n);
      for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / b;
      basis.push_back(std::move(next));
    }

    // Ritz pairs of the tridiagonal projection.
    Tensor t(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    std::vector<double> theta;
    Tensor s;
    jacobi_eigen(t, theta, s);
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return theta[x] > theta[y]; });

    for (std::size_t rank = 0; rank < m && locked.size() < kk; ++rank) {
      const std::size_t idx = order[rank];
      std::vector<double> y(n, 0.0);
      for (std::size_t j = 0; j < m; ++j) {
        const double c = s(j, idx);
        if (c == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) y[i] += c * basis[j][i];
      }
      const double yn = norm(y.data());
      if (yn < 1e-12) break;
      for (double& v : y) v /= yn;
      normalized_adjacency_matvec(g, isd, y.data(), w.data());
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = w[i] - theta[idx] * y[i];
        res += r * r;
      }
      res = std::sqrt(res);
      if (res <= tol) {
        locked.push_back(std::move(y));
        locked_values.push_back(theta[idx]);
      } else {
        // Not converged: restart the iteration from this Ritz vector.
        start = y;
        have_start = true;
        break;
      }
    }
  }

  require(locked.size() == kk, ErrorCategory::Numeric,
          "eigensolver did not reach the requested residual tolerance");

  // Locked pairs arrive in convergence order; present them value-descending.
  std::vector<std::size_t> order(kk);
  for (std::size_t i = 0; i < kk; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return locked_values[x] > locked_values[y];
  });
  EigenPairs out;
  out.values.resize(kk);
  out.vectors = Tensor(n, kk);
  for (std::size_t j = 0; j < kk; ++j) {
    out.values[j] = locked_values[order[j]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = locked[order[j]][i];
  }
  return out;
}

// Residual guard shared by both paths.
inline void verify_residuals(GraphView g, const EigenPairs& pairs, double tol) {
  const auto isd = inv_sqrt_degrees(g);
  std::vector<double> x(g.node_count), y(g.node_count);
  for (std::size_t j = 0; j < pairs.values.size(); ++j) {
    for (std::size_t i = 0; i < g.node_count; ++i) x[i] = pairs.vectors(i, j);
    normalized_adjacency_matvec(g, isd, x.data(), y.data());
    double res = 0.0;
    for (std::size_t i = 0; i < g.node_count; ++i) {
      const double r = y[i] - pairs.values[j] * x[i];
      res += r * r;
    }
    require(std::sqrt(res) <= tol, ErrorCategory::Numeric,
            "eigenpair residual " + std::to_string(std::sqrt(res)) +
                " exceeds tolerance");
  }
}

inline EigenPairs top_k_eigenpairs(GraphView g, std::size_t k, double tol = 1e-6,
                                   std::size_t dense_threshold = 2000) {
  EigenPairs pairs = g.node_count < dense_threshold ? dense_top_k(g, std::min(k, g.node_count))
                                                    : lanczos_top_k(g, k, tol * 0.5);
  apply_sign_convention(pairs.vectors);
  verify_residuals(g, pairs, tol);
  return pairs;
}

}  // namespace spectral

// Node features from the top-k eigenpairs of the symmetric normalized
// adjacency: node i gets (v_1[i], ..., v_k[i]). When k exceeds the node
// count, the missing columns are zero.
inline FeatureMatrix init_eigen(GraphView g, std::size_t k, double tol = 1e-6,
                                std::size_t dense_threshold = 2000) {
  require(k >= 1, ErrorCategory::Config, "eigen feature k must be >= 1");
  const auto pairs = spectral::top_k_eigenpairs(g, k, tol, dense_threshold);
  FeatureMatrix f;
  f.values = Tensor(g.node_count, k);
  for (std::size_t j = 0; j < pairs.values.size(); ++j)
    for (std::size_t i = 0; i < g.node_count; ++i) f.values(i, j) = pairs.vectors(i, j);
  f.method = "eigen";
  f.config_echo = "k=" + std::to_string(k);
  return f;
}

}  // namespace fraudgnn
