#pragma once

#include <algorithm>
#include <unordered_set>
#include <vector>

#include "fraudgnn/features.hpp"
#include "fraudgnn/graph.hpp"
#include "fraudgnn/rng.hpp"
#include "fraudgnn/tensor.hpp"

namespace fraudgnn {

struct SamplerConfig {
  std::size_t r = 3;          // ego radius
  double restart_prob = 0.8;  // walk restart probability per step
  std::size_t max_nodes = 64; // subgraph size budget
  std::uint64_t seed = 0;

  void validate() const {
    require(r >= 1, ErrorCategory::Config, "sampler radius must be >= 1");
    require(restart_prob > 0.0 && restart_prob < 1.0, ErrorCategory::Config,
            "restart probability must be in (0,1)");
    require(max_nodes >= 1, ErrorCategory::Config, "max_nodes must be >= 1");
  }
};

// Supplies per-edge input features for induced subgraphs: one-hot entity
// types on a single-entity graph, one-hot relation types on a multi-entity
// graph, or nothing (pre-training path).
struct EdgeFeatureProvider {
  enum class Kind { none, single_entity, multi_relation } kind = Kind::none;
  const SingleEntityGraph* single = nullptr;
  const MultiEntityGraph* multi = nullptr;

  std::size_t dim() const {
    switch (kind) {
      case Kind::single_entity: return single->edge_feature_dim();
      case Kind::multi_relation: return multi->relation_count();
      default: return 0;
    }
  }

  void fill(std::uint32_t parent_edge_slot, double* out) const {
    if (kind == Kind::single_entity) {
      const std::uint64_t bits = single->edge_feature_bits(parent_edge_slot);
      for (std::size_t t = 0; t < single->edge_feature_dim(); ++t)
        out[t] = ((bits >> t) & 1) ? 1.0 : 0.0;
    } else if (kind == Kind::multi_relation) {
      for (std::size_t t = 0; t < multi->relation_count(); ++t) out[t] = 0.0;
      out[multi->edge_relation(parent_edge_slot)] = 1.0;
    }
  }
};

// Bundles everything the sampler needs from a parent graph.
struct SampleSource {
  const Csr* adjacency = nullptr;
  const Tensor* node_features = nullptr;  // may be null
  EdgeFeatureProvider edge_features;

  GraphView view() const { return view_of(*adjacency); }
};

inline SampleSource make_source(const SingleEntityGraph& g, const FeatureMatrix* features,
                                bool with_edge_features) {
  SampleSource s;
  s.adjacency = &g.adjacency();
  s.node_features = features ? &features->values : nullptr;
  if (with_edge_features)
    s.edge_features = {EdgeFeatureProvider::Kind::single_entity, &g, nullptr};
  return s;
}

inline SampleSource make_source(const MultiEntityGraph& g, const FeatureMatrix* features,
                                bool with_edge_features) {
  SampleSource s;
  s.adjacency = &g.adjacency();
  s.node_features = features ? &features->values : nullptr;
  if (with_edge_features)
    s.edge_features = {EdgeFeatureProvider::Kind::multi_relation, nullptr, &g};
  return s;
}

// An induced sample of a node's r-ego network; one contrastive instance.
struct SubGraph {
  NodeId anchor = 0;
  std::vector<NodeId> members;  // sorted ascending, contains anchor
  std::size_t anchor_index = 0;
  // Induced adjacency in local indices (flat CSR plus the undirected list).
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // local, u < v
  std::vector<std::uint32_t> local_offsets;
  std::vector<std::uint32_t> local_neighbors;
  std::vector<std::uint32_t> local_edge;  // per neighbor entry: local edge index
  Tensor node_features;  // members x feat_dim (may be empty)
  Tensor edge_features;  // edges x edge_dim (may be empty)

  std::size_t size() const { return members.size(); }
};

// All nodes within hop distance <= r of u, sorted ascending.
inline std::vector<NodeId> ego_network(GraphView g, NodeId u, std::size_t r) {
  require(u < g.node_count, ErrorCategory::Validation, "ego anchor out of range");
  std::vector<NodeId> frontier{u};
  std::unordered_set<NodeId> seen{u};
  for (std::size_t hop = 0; hop < r && !frontier.empty(); ++hop) {
    std::vector<NodeId> next;
    for (NodeId v : frontier)
      for (NodeId w : g.neighbors_of(v))
        if (seen.insert(w).second) next.push_back(w);
    frontier = std::move(next);
  }
  std::vector<NodeId> out(seen.begin(), seen.end());
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

// Induces the subgraph over `members` (sorted) from the parent adjacency.
inline SubGraph induce(const SampleSource& src, NodeId anchor, std::vector<NodeId> members) {
  SubGraph sub;
  sub.anchor = anchor;
  sub.members = std::move(members);
  sub.anchor_index = static_cast<std::size_t>(
      std::lower_bound(sub.members.begin(), sub.members.end(), anchor) - sub.members.begin());

  const Csr& adj = *src.adjacency;
  const std::size_t n = sub.members.size();
  std::vector<std::uint32_t> parent_slot;
  for (std::uint32_t li = 0; li < n; ++li) {
    const NodeId u = sub.members[li];
    const auto nb = adj.neighbors_of(u);
    const auto slots = adj.edge_slots_of(u);
    // Parent lists and member list are both sorted: march in tandem.
    std::size_t mi = 0;
    for (std::size_t p = 0; p < nb.size(); ++p) {
      const NodeId v = nb[p];
      while (mi < n && sub.members[mi] < v) ++mi;
      if (mi == n) break;
      if (sub.members[mi] == v && u < v) {
        sub.edges.emplace_back(li, static_cast<std::uint32_t>(mi));
        parent_slot.push_back(slots[p]);
      }
    }
  }

  sub.local_offsets.assign(n + 1, 0);
  for (const auto& [a, b] : sub.edges) {
    sub.local_offsets[a + 1]++;
    sub.local_offsets[b + 1]++;
  }
  for (std::size_t i = 0; i < n; ++i) sub.local_offsets[i + 1] += sub.local_offsets[i];
  sub.local_neighbors.resize(sub.edges.size() * 2);
  sub.local_edge.resize(sub.edges.size() * 2);
  std::vector<std::uint32_t> cursor(sub.local_offsets.begin(), sub.local_offsets.end() - 1);
  for (std::uint32_t e = 0; e < sub.edges.size(); ++e) {
    const auto [a, b] = sub.edges[e];
    sub.local_neighbors[cursor[a]] = b;
    sub.local_edge[cursor[a]++] = e;
    sub.local_neighbors[cursor[b]] = a;
    sub.local_edge[cursor[b]++] = e;
  }

  if (src.node_features) {
    const Tensor& feats = *src.node_features;
    sub.node_features = Tensor(n, feats.cols());
    for (std::size_t i = 0; i < n; ++i)
      std::copy(feats.row(sub.members[i]), feats.row(sub.members[i]) + feats.cols(),
                sub.node_features.row(i));
  }
  const std::size_t ed = src.edge_features.dim();
  if (ed > 0) {
    sub.edge_features = Tensor(sub.edges.size(), ed);
    for (std::uint32_t e = 0; e < sub.edges.size(); ++e)
      src.edge_features.fill(parent_slot[e], sub.edge_features.row(e));
  }
  return sub;
}

}  // namespace detail

// Stateful sampler: caches each anchor's ego membership so repeated draws
// (epochs, folds, grid cells) pay the BFS once, and keeps stamp arrays for
// O(1) membership tests. One instance per thread; walk randomness comes from
// the caller-provided stream, so the cache never affects results.
class SubgraphSampler {
 public:
  SubgraphSampler(const SampleSource& src, const SamplerConfig& cfg) : src_(src), cfg_(cfg) {
    cfg_.validate();
    stamp_.assign(src_.view().node_count, 0);
  }

  const SamplerConfig& config() const { return cfg_; }
  void set_seed(std::uint64_t seed) { cfg_.seed = seed; }

  // Random walk with restart from u, restricted to u's r-ego network.
  // Collects distinct visited nodes until the size budget is met, the whole
  // ego network is covered, or the walk budget (10 * max_nodes edge
  // traversals, with a hard iteration cap for stalled walks) runs out.
  SubGraph draw_with_stream(NodeId u, RngStream& rng) {
    const GraphView g = src_.view();
    const auto& [ego, ego_tick] = cached_ego(u);
    const std::size_t target = std::min(cfg_.max_nodes, ego.size());

    ++tick_;
    std::vector<NodeId> order{u};
    visited_stamp_.resize(stamp_.size(), 0);
    visited_stamp_[u] = tick_;
    NodeId cur = u;
    const std::size_t move_budget = 10 * cfg_.max_nodes;
    const std::size_t stall_budget = 50 * cfg_.max_nodes;
    std::size_t moves = 0;
    for (std::size_t iter = 0; iter < stall_budget && moves < move_budget &&
                               order.size() < target;
         ++iter) {
      if (rng.next_bernoulli(cfg_.restart_prob)) {
        cur = u;
        continue;
      }
      const auto nb = g.neighbors_of(cur);
      if (nb.empty()) {
        cur = u;
        continue;
      }
      // Uniform over in-ego neighbors via rejection; the ego test is a stamp
      // lookup. A few misses mean the node sits on the ego boundary.
      NodeId next = kInvalidNode;
      for (int attempt = 0; attempt < 8; ++attempt) {
        const NodeId cand = nb[rng.next_below(nb.size())];
        if (stamp_[cand] == ego_tick) {
          next = cand;
          break;
        }
      }
      if (next == kInvalidNode) {
        cur = u;
        continue;
      }
      cur = next;
      ++moves;
      if (visited_stamp_[cur] != tick_) {
        visited_stamp_[cur] = tick_;
        order.push_back(cur);
      }
    }
    std::sort(order.begin(), order.end());
    return detail::induce(src_, u, std::move(order));
  }

  SubGraph draw(NodeId u, std::string_view stream_tag, std::uint64_t salt) {
    RngStream rng = derive_stream(cfg_.seed, stream_tag, u, salt);
    return draw_with_stream(u, rng);
  }

 private:
  // Ego sets are stamped into stamp_ with a per-anchor tick; the cache maps
  // anchor -> (sorted ego nodes, its tick).
  const std::pair<std::vector<NodeId>, std::uint32_t>& cached_ego(NodeId u) {
    auto it = ego_cache_.find(u);
    if (it != ego_cache_.end()) {
      // restamp if another anchor's marks overwrote ours
      auto& [ego, ego_tick] = it->second;
      if (ego.empty() || stamp_[ego[0]] != ego_tick || current_ego_ != u) {
        ego_tick = ++tick_;
        for (NodeId v : ego) stamp_[v] = ego_tick;
        current_ego_ = u;
      }
      return it->second;
    }
    std::vector<NodeId> ego = ego_network(src_.view(), u, cfg_.r);
    const std::uint32_t ego_tick = ++tick_;
    for (NodeId v : ego) stamp_[v] = ego_tick;
    current_ego_ = u;
    return ego_cache_.emplace(u, std::make_pair(std::move(ego), ego_tick)).first->second;
  }

  SampleSource src_;
  SamplerConfig cfg_;
  std::unordered_map<NodeId, std::pair<std::vector<NodeId>, std::uint32_t>> ego_cache_;
  std::vector<std::uint32_t> stamp_;          // ego membership marks
  std::vector<std::uint32_t> visited_stamp_;  // per-draw visited marks
  std::uint32_t tick_ = 0;
  NodeId current_ego_ = kInvalidNode;
};

// One-shot draw; prefer a long-lived SubgraphSampler in loops.
inline SubGraph rwr_subgraph(const SampleSource& src, NodeId u, const SamplerConfig& cfg,
                             RngStream& rng) {
  SubgraphSampler sampler(src, cfg);
  return sampler.draw_with_stream(u, rng);
}

// Two independent RWR draws from the same anchor; the positive pair of the
// contrastive objective. `salt` separates re-draws across epochs.
inline std::pair<SubGraph, SubGraph> positive_pair(const SampleSource& src, NodeId u,
                                                   const SamplerConfig& cfg,
                                                   std::uint64_t salt = 0) {
  RngStream rq = derive_stream(cfg.seed, "rwr.query", u, salt);
  RngStream rk = derive_stream(cfg.seed, "rwr.key", u, salt);
  SubGraph q = rwr_subgraph(src, u, cfg, rq);
  SubGraph k = rwr_subgraph(src, u, cfg, rk);
  return {std::move(q), std::move(k)};
}

// One positive pair per anchor; within a batch the keys of other anchors
// (plus the persistent queue) act as negatives downstream.
inline std::vector<std::pair<SubGraph, SubGraph>> contrastive_batch(
    const SampleSource& src, const std::vector<NodeId>& anchors, const SamplerConfig& cfg,
    std::uint64_t salt = 0) {
  std::unordered_set<NodeId> distinct(anchors.begin(), anchors.end());
  require(distinct.size() == anchors.size(), ErrorCategory::Validation,
          "contrastive batch anchors must be distinct");
  std::vector<std::pair<SubGraph, SubGraph>> out;
  out.reserve(anchors.size());
  for (NodeId u : anchors) out.push_back(positive_pair(src, u, cfg, salt));
  return out;
}

}  // namespace fraudgnn
