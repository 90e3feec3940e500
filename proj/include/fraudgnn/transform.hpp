#pragma once

#include <cstdint>
#include <thread>
#include <unordered_map>
#include <vector>

#include "fraudgnn/graph.hpp"

namespace fraudgnn {

struct TransformOptions {
  // Non-target nodes with more than hub_threshold target neighbors are
  // skipped and reported; 0 means unlimited.
  std::size_t hub_threshold = 0;
  // Record shared-entity counts per (edge, type) as a side channel.
  bool record_counts = false;
  // Worker threads for the accumulation pass; output is byte-identical to
  // the sequential result for any thread count.
  unsigned threads = 1;
};

struct TransformSummary {
  std::size_t target_nodes = 0;
  std::size_t non_target_nodes = 0;
  std::size_t skipped_hubs = 0;
  std::vector<NodeId> skipped_hub_ids;  // sorted ascending
  std::size_t single_edges = 0;
  CompressionRatios ratios;
};

namespace detail {

struct EdgeAccum {
  std::uint64_t bits = 0;
  std::vector<std::uint32_t> counts;
};

using EdgeMap = std::unordered_map<std::uint64_t, EdgeAccum>;

inline std::uint64_t pack_pair(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

// Accumulates projected edges for non-target nodes in [begin, end).
inline void accumulate_range(const MultiEntityGraph& g, const std::vector<NodeId>& to_single,
                             const std::vector<std::uint16_t>& type_dim,
                             const TransformOptions& opt, std::size_t dim, NodeId begin,
                             NodeId end, EdgeMap& map, std::vector<NodeId>& skipped) {
  std::vector<NodeId> targets;
  for (NodeId w = begin; w < end; ++w) {
    if (g.is_target(w)) continue;
    auto nb = g.adjacency().neighbors_of(w);
    if (opt.hub_threshold > 0 && nb.size() > opt.hub_threshold) {
      skipped.push_back(w);
      continue;
    }
    const std::uint16_t t = type_dim[g.node_type(w)];
    targets.assign(nb.begin(), nb.end());  // all neighbors of a non-target are targets
    for (std::size_t i = 0; i < targets.size(); ++i) {
      for (std::size_t j = i + 1; j < targets.size(); ++j) {
        const NodeId su = to_single[targets[i]];
        const NodeId sv = to_single[targets[j]];
        EdgeAccum& acc = map[pack_pair(std::min(su, sv), std::max(su, sv))];
        acc.bits |= 1ull << t;
        if (opt.record_counts) {
          if (acc.counts.empty()) acc.counts.assign(dim, 0);
          acc.counts[t]++;
        }
      }
    }
  }
}

}  // namespace detail

// Collapses all non-target entities into edge features between target
// entities: an edge (u,v) exists iff some non-target node is adjacent to both,
// and bit t of its feature marks a shared entity of non-target type t.
inline SingleEntityGraph transform_to_single_entity(const MultiEntityGraph& g,
                                                    const TransformOptions& opt = {},
                                                    TransformSummary* summary = nullptr) {
  const std::size_t n = g.node_count();

  // Compact target ids, ascending by original id.
  std::vector<NodeId> to_single(n, kInvalidNode);
  std::vector<NodeId> original_ids;
  for (NodeId u = 0; u < n; ++u) {
    if (g.is_target(u)) {
      to_single[u] = static_cast<NodeId>(original_ids.size());
      original_ids.push_back(u);
    }
  }

  // Dimension t = non-target types in node-type-id order.
  std::vector<std::uint16_t> type_dim(g.type_count(), 0);
  std::vector<std::string> dim_names;
  for (TypeId t = 0; t < g.type_count(); ++t) {
    if (t == g.target_type()) continue;
    type_dim[t] = static_cast<std::uint16_t>(dim_names.size());
    dim_names.push_back(g.type_names()[t]);
  }
  require(!dim_names.empty(), ErrorCategory::Validation,
          "graph has no non-target entity types");
  require(dim_names.size() <= kMaxEdgeFeatureDim, ErrorCategory::Validation,
          "more than 64 non-target entity types are not supported");

  const unsigned threads = std::max(1u, opt.threads);
  std::vector<detail::EdgeMap> maps(threads);
  std::vector<std::vector<NodeId>> skipped(threads);
  if (threads == 1) {
    detail::accumulate_range(g, to_single, type_dim, opt, dim_names.size(), 0,
                             static_cast<NodeId>(n), maps[0], skipped[0]);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const NodeId b = static_cast<NodeId>(std::min(n, w * chunk));
      const NodeId e = static_cast<NodeId>(std::min(n, (w + 1) * chunk));
      pool.emplace_back([&, w, b, e] {
        detail::accumulate_range(g, to_single, type_dim, opt, dim_names.size(), b, e,
                                 maps[w], skipped[w]);
      });
    }
    for (auto& t : pool) t.join();
    // Bit-or / count-add are commutative, so the merge order cannot change
    // the result; the canonical edge sort below fixes the layout.
    for (unsigned w = 1; w < threads; ++w) {
      for (auto& [key, acc] : maps[w]) {
        detail::EdgeAccum& dst = maps[0][key];
        dst.bits |= acc.bits;
        if (opt.record_counts) {
          if (dst.counts.empty()) dst.counts.assign(dim_names.size(), 0);
          for (std::size_t i = 0; i < acc.counts.size(); ++i) dst.counts[i] += acc.counts[i];
        }
      }
      for (NodeId id : skipped[w]) skipped[0].push_back(id);
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::uint64_t> bits;
  std::vector<std::vector<std::uint32_t>> counts;
  edges.reserve(maps[0].size());
  for (auto& [key, acc] : maps[0]) {
    edges.emplace_back(static_cast<NodeId>(key >> 32), static_cast<NodeId>(key & 0xffffffffu));
    bits.push_back(acc.bits);
    if (opt.record_counts) counts.push_back(std::move(acc.counts));
  }

  const std::size_t target_count = original_ids.size();
  SingleEntityGraph out(target_count, std::move(edges), std::move(bits), dim_names,
                        std::move(original_ids), std::move(counts));

  if (summary) {
    std::sort(skipped[0].begin(), skipped[0].end());
    summary->target_nodes = out.node_count();
    summary->non_target_nodes = n - out.node_count();
    summary->skipped_hubs = skipped[0].size();
    summary->skipped_hub_ids = std::move(skipped[0]);
    summary->single_edges = out.edge_count();
    summary->ratios = compression_ratios(g, out);
  }
  return out;
}

}  // namespace fraudgnn
