// Acceptance suite: runs the project's exit criteria and prints one
// [PASS]/[FAIL] line per criterion. Exit status is nonzero if any selected
// criterion fails.
//
//   fraudgnn_acceptance                 run all criteria
//   fraudgnn_acceptance --criterion N   run criterion N only

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "fraudgnn/eval.hpp"
#include "fraudgnn/pipeline.hpp"
#include "fraudgnn/pretrain.hpp"
#include "fraudgnn/spectral.hpp"
#include "fraudgnn/synth.hpp"
#include "fraudgnn/transform.hpp"
#include "test_util.hpp"

using namespace fraudgnn;
namespace fs = std::filesystem;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

std::ostringstream note;

// --- shared helpers ---

Csr random_csr(RngStream& rng, std::size_t n, std::size_t m) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t i = 0; i < m; ++i) {
    NodeId u = static_cast<NodeId>(rng.next_below(n));
    NodeId v = static_cast<NodeId>(rng.next_below(n));
    if (u != v) edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return detail::build_csr(n, edges);
}

SubGraph random_subgraph(RngStream& rng, std::size_t n, std::size_t feat_dim,
                         std::size_t edge_dim) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (rng.next_bernoulli(0.3)) edges.emplace_back(i, j);
  SubGraph sub;
  sub.anchor = 0;
  sub.members.resize(n);
  for (NodeId i = 0; i < n; ++i) sub.members[i] = i;
  sub.anchor_index = 0;
  sub.edges = edges;
  sub.local_offsets.assign(n + 1, 0);
  for (auto [a, b] : edges) {
    sub.local_offsets[a + 1]++;
    sub.local_offsets[b + 1]++;
  }
  for (std::size_t i = 0; i < n; ++i) sub.local_offsets[i + 1] += sub.local_offsets[i];
  sub.local_neighbors.resize(edges.size() * 2);
  sub.local_edge.resize(edges.size() * 2);
  std::vector<std::uint32_t> cursor(sub.local_offsets.begin(), sub.local_offsets.end() - 1);
  for (std::uint32_t e = 0; e < edges.size(); ++e) {
    auto [a, b] = edges[e];
    sub.local_neighbors[cursor[a]] = b;
    sub.local_edge[cursor[a]++] = e;
    sub.local_neighbors[cursor[b]] = a;
    sub.local_edge[cursor[b]++] = e;
  }
  sub.node_features = Tensor(n, feat_dim);
  sub.node_features.fill_normal(rng);
  if (edge_dim > 0) {
    sub.edge_features = Tensor(edges.size(), edge_dim);
    sub.edge_features.fill_normal(rng);
  }
  return sub;
}

// --- criterion 1: transformation oracle ---

bool criterion1() {
  Timer timer;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    RngStream rng = derive_stream(0xACC1, "acc.transform", trial);
    const MultiEntityGraph multi = testutil::random_bipartite(rng, 200, 3);
    TransformOptions opt;
    opt.record_counts = true;
    const SingleEntityGraph s = transform_to_single_entity(multi, opt);
    const auto oracle = testutil::brute_force_transform(multi);
    if (!testutil::matches_oracle(s, oracle, true)) {
      note << "mismatch at trial " << trial;
      return false;
    }
    if (s.node_count() != multi.target_nodes().size()) {
      note << "node conservation violated at trial " << trial;
      return false;
    }
  }
  const double secs = timer.seconds();
  note << "100 graphs exact in " << secs << "s";
  return secs < 10.0;
}

// --- criterion 2: gradient suite ---

// Central differences are only valid at points comfortably away from relu
// kinks, so each random instance is re-drawn (deterministically) until the
// forward pass clears this margin; h = 1e-5 stays far below it.
constexpr double kKinkMargin = 1e-3;

// Runs fd_check on the first generic-position instance produced by `make`,
// which maps a salt to (params, loss_fn); loss_fn reports the forward pass's
// nonsmooth margin through its third capture.
double gated_fd_check(
    const std::function<std::pair<std::vector<ParamRef>, std::function<double(GradientSet*, double*)>>(
        std::uint64_t)>& make) {
  for (std::uint64_t salt = 0; salt < 64; ++salt) {
    auto [params, loss_fn] = make(salt);
    double margin = 0.0;
    loss_fn(nullptr, &margin);
    if (margin < kKinkMargin) continue;
    return fd_check(params, [&](GradientSet* g) { return loss_fn(g, nullptr); }, 1e-5);
  }
  return std::numeric_limits<double>::infinity();  // no generic instance found
}

bool criterion2() {
  Timer timer;
  double worst = 0.0;

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    // instances are owned outside the loss closures
    struct Instance {
      SubGraph plain, edged;
      EncoderParams enc;
      FineTuneModel model;
      Tensor cands{6, 4};
    };
    auto instance = std::make_shared<Instance>();
    auto fresh_subgraphs = [instance, seed](std::uint64_t salt) {
      RngStream rng = derive_stream(0xACC2 + salt, "acc.grad", seed);
      instance->plain = random_subgraph(rng, 9, 4, 0);
      instance->edged = random_subgraph(rng, 9, 4, 3);
    };

    {  // plain MLP
      worst = std::max(worst, gated_fd_check([&](std::uint64_t salt) {
        fresh_subgraphs(salt);
        instance->enc = make_encoder(4, 4, 3, false, 0, seed + salt * 1000, 1);
        auto loss = [instance](GradientSet* g, double* margin) {
          Tape tape;
          TapeEncoder te = TapeEncoder::bind(tape, instance->enc, g != nullptr);
          const int out = mlp_forward(tape, te.layers[0],
                                      tape.constant(instance->plain.node_features));
          const int l = tape.neg_log_pick(tape.softmax(tape.sum_rows(out)), 0);
          if (margin) *margin = tape.min_nonsmooth_margin();
          if (g) {
            tape.backward(l);
            *g = te.grads(tape);
          }
          return tape.value(l)(0, 0);
        };
        return std::make_pair(collect_params(instance->enc),
                              std::function<double(GradientSet*, double*)>(loss));
      }));
    }
    {  // sum-aggregation layer
      worst = std::max(worst, gated_fd_check([&](std::uint64_t salt) {
        fresh_subgraphs(salt);
        instance->enc = make_encoder(4, 4, 3, false, 0, seed + salt * 1000 + 100, 1);
        auto loss = [instance](GradientSet* g, double* margin) {
          Tape tape;
          TapeEncoder te = TapeEncoder::bind(tape, instance->enc, g != nullptr);
          const int out = gin_layer_forward(tape, te.layers[0], instance->plain,
                                            tape.constant(instance->plain.node_features));
          const int l = tape.neg_log_pick(tape.softmax(tape.sum_rows(out)), 1);
          if (margin) *margin = tape.min_nonsmooth_margin();
          if (g) {
            tape.backward(l);
            *g = te.grads(tape);
          }
          return tape.value(l)(0, 0);
        };
        return std::make_pair(collect_params(instance->enc),
                              std::function<double(GradientSet*, double*)>(loss));
      }));
    }
    {  // edge-aware layer
      worst = std::max(worst, gated_fd_check([&](std::uint64_t salt) {
        fresh_subgraphs(salt);
        instance->enc = make_encoder(4, 4, 3, true, 3, seed + salt * 1000 + 200, 1);
        RngStream prng = derive_stream(0xACC2 + salt, "acc.gradp", seed);
        instance->enc.layers[0].edge_proj.w.fill_normal(prng, 0.5);
        auto loss = [instance](GradientSet* g, double* margin) {
          Tape tape;
          TapeEncoder te = TapeEncoder::bind(tape, instance->enc, g != nullptr);
          const int out = gin_edge_layer_forward(tape, te.layers[0], instance->edged,
                                                 tape.constant(instance->edged.node_features),
                                                 tape.constant(instance->edged.edge_features));
          const int l = tape.neg_log_pick(tape.softmax(tape.mean_rows(out)), 2);
          if (margin) *margin = tape.min_nonsmooth_margin();
          if (g) {
            tape.backward(l);
            *g = te.grads(tape);
          }
          return tape.value(l)(0, 0);
        };
        return std::make_pair(collect_params(instance->enc),
                              std::function<double(GradientSet*, double*)>(loss));
      }));
    }
    {  // readout through a full encoder (sum pooling)
      worst = std::max(worst, gated_fd_check([&](std::uint64_t salt) {
        fresh_subgraphs(salt);
        instance->enc = make_encoder(4, 4, 4, false, 0, seed + salt * 1000 + 300);
        auto loss = [instance](GradientSet* g, double* margin) {
          Tape tape;
          TapeEncoder te = TapeEncoder::bind(tape, instance->enc, g != nullptr);
          const int emb = encoder_forward(tape, te, instance->plain, EmbeddingMode::subgraph);
          const int l = tape.neg_log_pick(tape.softmax(emb), 0);
          if (margin) *margin = tape.min_nonsmooth_margin();
          if (g) {
            tape.backward(l);
            *g = te.grads(tape);
          }
          return tape.value(l)(0, 0);
        };
        return std::make_pair(collect_params(instance->enc),
                              std::function<double(GradientSet*, double*)>(loss));
      }));
    }
    {  // InfoNCE composite
      worst = std::max(worst, gated_fd_check([&](std::uint64_t salt) {
        fresh_subgraphs(salt);
        instance->enc = make_encoder(4, 4, 4, false, 0, seed + salt * 1000 + 400);
        RngStream crng = derive_stream(0xACC2 + salt, "acc.cand", seed);
        instance->cands.fill_normal(crng);
        auto loss = [instance](GradientSet* g, double* margin) {
          Tape tape;
          TapeEncoder te = TapeEncoder::bind(tape, instance->enc, g != nullptr);
          const int q = tape.l2_normalize(
              encoder_forward(tape, te, instance->plain, EmbeddingMode::subgraph));
          const int logits =
              tape.scale(tape.matmul_nt(q, tape.constant(instance->cands)), 1.0 / 0.2);
          const int l = tape.neg_log_pick(tape.softmax(logits), 0);
          if (margin) *margin = tape.min_nonsmooth_margin();
          if (g) {
            tape.backward(l);
            *g = te.grads(tape);
          }
          return tape.value(l)(0, 0);
        };
        return std::make_pair(collect_params(instance->enc),
                              std::function<double(GradientSet*, double*)>(loss));
      }));
    }
    {  // cross-entropy composite through encoder + projection + head
      worst = std::max(worst, gated_fd_check([&](std::uint64_t salt) {
        fresh_subgraphs(salt);
        instance->model =
            make_finetune_model(4, 4, 5, 3, EmbeddingMode::subgraph, seed + salt * 1000 + 500);
        auto loss = [instance](GradientSet* g, double* margin) {
          Tape tape;
          TapeFineTune tf = TapeFineTune::bind(tape, instance->model, g != nullptr);
          const int probs = classify_forward(tape, tf, instance->model, instance->edged,
                                             EmbeddingMode::subgraph);
          const int l = tape.neg_log_pick(probs, 1);
          if (margin) *margin = tape.min_nonsmooth_margin();
          if (g) {
            tape.backward(l);
            *g = tf.grads(tape);
          }
          return tape.value(l)(0, 0);
        };
        return std::make_pair(collect_params(instance->model),
                              std::function<double(GradientSet*, double*)>(loss));
      }));
    }
  }
  const double secs = timer.seconds();
  note << "max relative error " << worst << " in " << secs << "s";
  return worst < 1e-4 && secs < 60.0;
}

// --- criterion 3: PageRank ---

bool criterion3() {
  // P3 spot check
  {
    Csr path = detail::build_csr(3, {{0, 1}, {1, 2}});
    const FeatureMatrix f = init_pagerank(view_of(path), 0.85);
    if (std::abs(f.values(0, 0) - 0.2568) > 1e-3 || std::abs(f.values(1, 0) - 0.4865) > 1e-3 ||
        std::abs(f.values(2, 0) - 0.2568) > 1e-3) {
      note << "P3 values off: " << f.values(0, 0) << "," << f.values(1, 0);
      return false;
    }
  }
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    RngStream rng = derive_stream(0xACC3, "acc.pr", trial);
    const std::size_t n = 50 + rng.next_below(451);  // up to 500
    Csr g = random_csr(rng, n, 3 * n);
    const FeatureMatrix f = init_pagerank(view_of(g));

    // dense power-iteration oracle
    std::vector<double> p(n, 1.0 / n), next(n);
    for (int it = 0; it < 400; ++it) {
      double dangling = 0.0;
      for (NodeId u = 0; u < n; ++u)
        if (g.degree(u) == 0) dangling += p[u];
      for (std::size_t v = 0; v < n; ++v) next[v] = 0.15 / n + 0.85 * dangling / n;
      for (NodeId u = 0; u < n; ++u) {
        if (g.degree(u) == 0) continue;
        const double share = 0.85 * p[u] / g.degree(u);
        for (NodeId v : g.neighbors_of(u)) next[v] += share;
      }
      p = next;
    }
    double sum = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += f.values(i, 0);
      l1 += std::abs(f.values(i, 0) - p[i]);
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      note << "mass " << sum << " at trial " << trial;
      return false;
    }
    if (l1 > 1e-8) {
      note << "L1 " << l1 << " at trial " << trial;
      return false;
    }
  }
  note << "10 graphs within L1 1e-8, mass 1 +/- 1e-9, P3 ok";
  return true;
}

// --- criterion 4: eigen features ---

bool criterion4() {
  const auto isd_residual = [](GraphView g, const spectral::EigenPairs& pairs) {
    const auto isd = spectral::inv_sqrt_degrees(g);
    std::vector<double> x(g.node_count), y(g.node_count);
    double worst = 0.0;
    for (std::size_t j = 0; j < pairs.values.size(); ++j) {
      for (std::size_t i = 0; i < g.node_count; ++i) x[i] = pairs.vectors(i, j);
      spectral::normalized_adjacency_matvec(g, isd, x.data(), y.data());
      double res = 0.0;
      for (std::size_t i = 0; i < g.node_count; ++i) {
        const double d = y[i] - pairs.values[j] * x[i];
        res += d * d;
      }
      worst = std::max(worst, std::sqrt(res));
    }
    return worst;
  };

  double worst_res = 0.0, worst_angle = 0.0;
  std::size_t compared = 0;
  for (std::uint64_t trial = 0; trial < 12 && compared < 5; ++trial) {
    RngStream rng = derive_stream(0xACC4, "acc.eig", trial);
    Csr g = random_csr(rng, 50, 120);
    const std::size_t k = 8;
    const auto impl = spectral::top_k_eigenpairs(view_of(g), k + 1);
    worst_res = std::max(worst_res, isd_residual(view_of(g), impl));
    if (impl.values[k - 1] - impl.values[k] < 1e-3) continue;  // unclean cut
    ++compared;

    // dense oracle: shifted power iteration with deflation
    const auto isd = spectral::inv_sqrt_degrees(view_of(g));
    const std::size_t n = 50;
    std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
    for (NodeId u = 0; u < n; ++u) {
      dense[u][u] = 1.0;
      for (NodeId v : g.neighbors_of(u)) dense[u][v] += isd[u] * isd[v];
    }
    RngStream orng = derive_stream(0xACC4, "acc.eig.oracle", trial);
    std::vector<std::vector<double>> found;
    Tensor oracle_vecs(n, k);
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> v(n);
      for (double& x : v) x = orng.next_normal();
      for (int it = 0; it < 6000; ++it) {
        for (const auto& u : found) {
          double c = 0.0;
          for (std::size_t i = 0; i < n; ++i) c += u[i] * v[i];
          for (std::size_t i = 0; i < n; ++i) v[i] -= c * u[i];
        }
        std::vector<double> w(n, 0.0);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t c = 0; c < n; ++c) w[r] += dense[r][c] * v[c];
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
      }
      for (std::size_t i = 0; i < n; ++i) oracle_vecs(i, j) = v[i];
      found.push_back(std::move(v));
    }

    // principal angles between the two k-dimensional subspaces
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<double> proj(n, 0.0);
      for (std::size_t c = 0; c < k; ++c) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += impl.vectors(i, c) * oracle_vecs(i, j);
        for (std::size_t i = 0; i < n; ++i) proj[i] += dot * impl.vectors(i, c);
      }
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = oracle_vecs(i, j) - proj[i];
        res += d * d;
      }
      worst_angle = std::max(worst_angle, std::asin(std::min(1.0, std::sqrt(res))));
    }
  }
  note << "max residual " << worst_res << ", max principal angle " << worst_angle << " over "
         << compared << " comparisons";
  return worst_res <= 1e-6 && worst_angle < 1e-6 && compared >= 5;
}

// --- criterion 5: InfoNCE identities ---

bool criterion5() {
  Tensor e(1, 3);
  e(0, 0) = 1.0;
  for (std::size_t n : {2u, 4u, 64u}) {
    std::vector<Tensor> negs(n - 1, e);
    const double loss = info_nce(e, e, negs, 1.0);
    if (std::abs(loss - std::log(double(n))) > 1e-9) {
      note << "equal-logit ln(n) violated for n=" << n;
      return false;
    }
  }
  RngStream rng = derive_stream(0xACC5, "acc.nce");
  std::size_t tested = 0;
  while (tested < 1000) {
    const std::size_t dim = 4;
    auto random_unit = [&] {
      Tensor t(1, dim);
      t.fill_normal(rng);
      t.scale(1.0 / t.l2_norm());
      return t;
    };
    const Tensor q = random_unit();
    std::vector<Tensor> negs;
    for (std::size_t i = 0; i < 1 + rng.next_below(8); ++i) negs.push_back(random_unit());
    const double tau = 0.1 + rng.next_real();
    Tensor k1 = random_unit();
    Tensor k2 = k1;
    for (std::size_t c = 0; c < dim; ++c) k2(0, c) = 0.6 * k1(0, c) + 0.4 * q(0, c);
    const double n2 = k2.l2_norm();
    if (n2 < 1e-9) continue;
    k2.scale(1.0 / n2);
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      d1 += q(0, c) * k1(0, c);
      d2 += q(0, c) * k2(0, c);
    }
    if (d2 <= d1 + 1e-12) continue;
    const double l1 = info_nce(q, k1, negs, tau);
    const double l2 = info_nce(q, k2, negs, tau);
    if (!(l1 > 0.0) || !(l2 > 0.0) || !(l2 < l1)) {
      note << "monotonicity violated at instance " << tested;
      return false;
    }
    ++tested;
  }
  note << "ln(n) identities and 1000 monotonicity instances ok";
  return true;
}

// --- criterion 6: MoCo closed form + queue FIFO ---

bool criterion6() {
  EncoderParams enc = make_encoder(3, 4, 4, false, 0, 6);
  for (std::size_t t : {1u, 10u, 100u}) {
    MoCoState s = make_moco_state(enc, 0.95, 0.07, 8);
    for (auto& p : collect_params(s.theta_q)) p.tensor->fill(1.5);
    for (auto& p : collect_params(s.theta_k)) p.tensor->fill(-0.5);
    for (std::size_t i = 0; i < t; ++i) momentum_update(s);
    const double mt = std::pow(0.95, double(t));
    const double expected = mt * (-0.5) + (1.0 - mt) * 1.5;
    for (auto& p : collect_params(s.theta_k))
      for (std::size_t i = 0; i < p.tensor->size(); ++i)
        if (std::abs(p.tensor->at_flat(i) - expected) > 1e-9) {
          note << "closed form violated at t=" << t;
          return false;
        }
  }
  for (std::size_t cap : {1u, 8u, 1024u}) {
    MoCoState s = make_moco_state(enc, 0.95, 0.07, cap);
    std::size_t pushed = 0;
    for (std::size_t round = 0; round < 5; ++round) {
      std::vector<std::vector<double>> keys;
      const std::size_t b = std::min<std::size_t>(cap, 3);
      for (std::size_t i = 0; i < b; ++i)
        keys.push_back({double(pushed + i), 0.0, 0.0, 0.0});
      queue_push(s, keys);
      pushed += b;
      if (s.queue.size() > cap) {
        note << "queue overflow at cap " << cap;
        return false;
      }
      // FIFO: the queue must hold exactly the most recent min(cap, pushed)
      // keys in age order
      const std::size_t expect = std::min(cap, pushed);
      if (s.queue.size() != expect) {
        note << "queue size " << s.queue.size() << " != " << expect;
        return false;
      }
      for (std::size_t i = 0; i < expect; ++i)
        if (s.queue[i][0] != double(pushed - expect + i)) {
          note << "FIFO order violated at cap " << cap;
          return false;
        }
    }
  }
  note << "closed form at t in {1,10,100} within 1e-9; FIFO for K in {1,8,1024}";
  return true;
}

// --- criterion 7: method-grid direction check ---

bool criterion7() {
  Timer timer;
  const SynthConfig synth_defaults{};  // n_users already defaults to 10,000
  std::vector<ExperimentResult> results;
  for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
    SynthConfig sc = synth_defaults;
    sc.seed = seed;
    const SynthResult data = generate_synthetic(sc);
    EvalConfig cfg;  // harness defaults
    cfg.seed = seed;
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    results.push_back(run_grid(data.graph, data.labeled, cfg));
    std::cout << "  [seed " << seed << " done at " << timer.seconds() << "s]\n";
  }

  auto mean_cell = [&](const char* graph, const char* feature, bool pt, const char* mode) {
    double sum = 0.0;
    for (const auto& r : results) {
      const CellResult* c = r.find(graph, feature, pt, mode);
      if (!c || !c->error.empty()) return -1.0;
      sum += c->mean;
    }
    return sum / static_cast<double>(results.size());
  };

  const double eigen_pt_se = mean_cell("single", "eigen", true, "SE");
  const double random_se = mean_cell("single", "random", false, "SE");
  const double eigen_se = mean_cell("single", "eigen", false, "SE");
  double best_single = 0.0, best_multi = 0.0;
  for (const std::string& feat : grid_features())
    for (bool pt : {false, true})
      for (const char* mode : {"NE", "SE"}) {
        best_single = std::max(best_single, mean_cell("single", feat.c_str(), pt, mode));
        best_multi = std::max(best_multi, mean_cell("multi", feat.c_str(), pt, mode));
      }

  const double secs = timer.seconds();
  note << "eigen+PT+SE=" << eigen_pt_se << " random-SE=" << random_se
         << " eigen-SE=" << eigen_se << " best_single=" << best_single
         << " best_multi=" << best_multi << " in " << secs << "s";
  const bool a = eigen_pt_se >= random_se + 0.10;
  const bool b = eigen_pt_se >= eigen_se;
  const bool c = best_single >= best_multi;
  if (!a) note << " [a FAILED]";
  if (!b) note << " [b FAILED]";
  if (!c) note << " [c FAILED]";
  return a && b && c && secs < 900.0;
}

// --- criterion 8: micro-F1 identity + fold partitions ---

bool criterion8() {
  RngStream rng = derive_stream(0xACC8, "acc.f1");
  // micro-F1 == accuracy on random prediction vectors (the identity is also
  // asserted inside micro_f1 itself on every call)
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.next_below(200);
    std::vector<std::uint8_t> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<std::uint8_t>(rng.next_below(2));
      truth[i] = static_cast<std::uint8_t>(rng.next_below(2));
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (pred[i] == truth[i]) ++correct;
    const double acc = double(correct) / double(n);
    if (std::abs(micro_f1(pred, truth) - acc) > 1e-12) {
      note << "identity violated at trial " << trial;
      return false;
    }
  }

  // fold partitions: disjoint, covering, stratified
  std::vector<std::pair<NodeId, std::uint8_t>> entries;
  for (NodeId i = 0; i < 173; ++i)
    entries.emplace_back(i, static_cast<std::uint8_t>(i % 3 == 0 ? 1 : 0));
  const LabeledSet labeled(std::move(entries), 173);
  const auto folds = kfold_split(labeled, 5, 42);
  std::set<NodeId> seen;
  const double global_ratio = double(labeled.count_of(1)) / double(labeled.size());
  for (const auto& f : folds) {
    for (const auto& [node, label] : f.test.entries()) {
      (void)label;
      if (!seen.insert(node).second) {
        note << "folds not disjoint";
        return false;
      }
    }
    const double fold_ratio = double(f.test.count_of(1)) / double(f.test.size());
    if (std::abs(fold_ratio - global_ratio) * double(f.test.size()) > 1.0 + 1e-9) {
      note << "stratification off: fold ratio " << fold_ratio << " vs " << global_ratio;
      return false;
    }
  }
  if (seen.size() != labeled.size()) {
    note << "folds not covering";
    return false;
  }
  note << "identity on 200 random evaluations; 5 folds disjoint/covering/stratified";
  return true;
}

// --- criterion 9: pipeline determinism ---

bool criterion9() {
  const fs::path base = fs::temp_directory_path() / "fraudgnn_acc9";
  fs::remove_all(base);
  auto run = [&](const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path cwd = fs::current_path();
    fs::current_path(dir);
    PipelineConfig cfg;
    cfg.seed = 77;
    cfg.paths.out = "out";
    cfg.paths.edges = "out/edges.tsv";
    cfg.paths.node_types = "out/node_types.tsv";
    cfg.paths.labels = "out/labels.tsv";
    cfg.paths.single_graph = "out/single_graph.txt";
    cfg.paths.features = "out/features_eigen.txt";
    cfg.synth.n_users = 400;
    cfg.synth.ring_count = 10;
    cfg.synth.ring_size = 20;
    cfg.synth.label_fraction = 0.5;
    cfg.features.method = "eigen";
    cfg.features.eigen_k = 4;
    cfg.pretrain.epochs = 2;
    cfg.pretrain.batch_size = 50;
    cfg.pretrain.lr = 1e-3;
    cfg.pretrain.dim = 8;
    cfg.pretrain.anchor_cap = 100;
    cfg.finetune.epochs = 3;
    cfg.finetune.batch_size = 50;
    cfg.finetune.lr = 5e-3;
    cfg.finetune.dim = 8;
    cfg.sampler.max_nodes = 24;
    cfg.eval.folds = 3;
    cfg.eval.pretrain_epochs = 1;
    cfg.eval.pretrain_anchor_cap = 60;
    cfg.eval.pretrain_batch = 60;
    cfg.eval.finetune_epochs = 2;
    cfg.eval.finetune_batch = 50;

    cmd_synth(cfg);
    cmd_transform(cfg);
    cmd_featurize(cfg);
    cmd_pretrain(cfg);
    cfg.paths.checkpoint = "out/pretrain.ckpt";
    cmd_finetune(cfg);
    cmd_eval(cfg);
    fs::current_path(cwd);
  };
  run(base / "run_a");
  run(base / "run_b");

  const char* files[] = {"edges.tsv",       "node_types.tsv",     "labels.tsv",
                         "ground_truth.tsv", "single_graph.txt",  "features_eigen.txt",
                         "pretrain.ckpt",   "model.ckpt",         "predictions.tsv",
                         "results.txt",     "results.tsv"};
  for (const char* name : files) {
    std::ifstream fa(base / "run_a" / "out" / name, std::ios::binary);
    std::ifstream fb(base / "run_b" / "out" / name, std::ios::binary);
    if (!fa || !fb) {
      note << name << " missing";
      return false;
    }
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
      note << name << " differs between runs";
      return false;
    }
  }
  note << "11 artifacts bit-identical across two runs";
  return true;
}

// --- criterion 10: pre-training progress ---

bool criterion10() {
  const SynthConfig sc{};  // synthetic default graph
  const SynthResult data = generate_synthetic(sc);
  const SingleEntityGraph single = transform_to_single_entity(data.graph);
  FeatureMatrix f = normalize_features(init_degree(single.view()));
  const SampleSource src = make_source(single, &f, false);

  EncoderParams enc = make_encoder(f.dim(), 16, 16, false, 0, 10);
  MoCoState state = make_moco_state(enc, 0.999, 0.07, 1024);
  PretrainConfig pc;
  pc.batch_size = 200;
  pc.lr = 1e-3;
  Optimizer opt({OptimizerConfig::Kind::adam, pc.lr});
  SamplerConfig sampler;
  sampler.seed = 15;

  std::vector<NodeId> anchors(single.node_count());
  for (NodeId i = 0; i < anchors.size(); ++i) anchors[i] = i;
  RngStream sub = derive_stream(15, "acc10.anchors");
  sub.shuffle(anchors);
  anchors.resize(1500);
  queue_warm_start(src, anchors, state, sampler, pc);

  double first = 0.0, last = 0.0;
  for (std::uint64_t e = 0; e < 10; ++e) {
    const double loss = pretrain_epoch(src, anchors, state, sampler, opt, pc, e);
    if (e == 0) first = loss;
    if (e == 9) last = loss;
  }
  note << "epoch-1 mean " << first << ", epoch-10 mean " << last;
  return last < first;
}

struct Criterion {
  int id;
  const char* description;
  std::function<bool()> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      only = std::atoi(argv[i + 1]);
  }

  const Criterion criteria[] = {
      {1, "transformation matches the brute-force oracle on 100 random graphs", criterion1},
      {2, "gradient suite under 1e-4 relative error (5 seeds, h=1e-5)", criterion2},
      {3, "PageRank matches the dense oracle; mass conserved; P3 values", criterion3},
      {4, "eigen residuals <= 1e-6 and subspace agreement with the dense oracle", criterion4},
      {5, "InfoNCE ln(n) identities and monotonicity on 1000 instances", criterion5},
      {6, "MoCo momentum closed form and strict FIFO queue", criterion6},
      {7, "method-grid direction checks on synthetic data (3 seeds, 5-fold)", criterion7},
      {8, "micro-F1 equals accuracy; folds disjoint/covering/stratified", criterion8},
      {9, "fixed-seed pipeline reruns are bit-identical", criterion9},
      {10, "pre-training mean InfoNCE improves from epoch 1 to epoch 10", criterion10},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    note.str("");
    bool ok = false;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      note << "exception: " << e.what();
    }
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.description
              << " (" << note.str() << ")" << std::endl;
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
