#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fraudgnn/common.hpp"

namespace fraudgnn {

// Undirected CSR adjacency. Neighbor lists are sorted ascending; both
// directions of an edge carry the same payload index.
struct Csr {
  std::size_t node_count = 0;
  std::vector<EdgeIndex> offsets;        // node_count + 1
  std::vector<NodeId> neighbors;         // 2 * edge_count
  std::vector<std::uint32_t> edge_slot;  // per entry: index of the undirected edge

  std::size_t degree(NodeId u) const { return offsets[u + 1] - offsets[u]; }
  std::span<const NodeId> neighbors_of(NodeId u) const {
    return {neighbors.data() + offsets[u], degree(u)};
  }
  std::span<const std::uint32_t> edge_slots_of(NodeId u) const {
    return {edge_slot.data() + offsets[u], degree(u)};
  }
  std::size_t edge_count() const { return neighbors.size() / 2; }

  bool has_edge(NodeId u, NodeId v) const {
    auto nb = neighbors_of(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }
};

// Non-owning view shared by algorithms that run on either graph kind.
struct GraphView {
  std::size_t node_count = 0;
  const EdgeIndex* offsets = nullptr;
  const NodeId* neighbors = nullptr;

  std::size_t degree(NodeId u) const { return offsets[u + 1] - offsets[u]; }
  std::span<const NodeId> neighbors_of(NodeId u) const {
    return {neighbors + offsets[u], degree(u)};
  }
  std::size_t edge_count() const {
    return node_count == 0 ? 0 : static_cast<std::size_t>(offsets[node_count]) / 2;
  }
};

inline GraphView view_of(const Csr& csr) {
  return {csr.node_count, csr.offsets.data(), csr.neighbors.data()};
}

namespace detail {

// Builds a CSR from an undirected edge list that is already deduplicated and
// canonical (u < v). Edge i gets payload slot i on both directions.
inline Csr build_csr(std::size_t node_count,
                     const std::vector<std::pair<NodeId, NodeId>>& edges) {
  Csr csr;
  csr.node_count = node_count;
  csr.offsets.assign(node_count + 1, 0);
  for (const auto& [u, v] : edges) {
    csr.offsets[u + 1]++;
    csr.offsets[v + 1]++;
  }
  for (std::size_t i = 0; i < node_count; ++i) csr.offsets[i + 1] += csr.offsets[i];
  csr.neighbors.resize(edges.size() * 2);
  csr.edge_slot.resize(edges.size() * 2);
  std::vector<EdgeIndex> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto [u, v] = edges[i];
    csr.neighbors[cursor[u]] = v;
    csr.edge_slot[cursor[u]++] = static_cast<std::uint32_t>(i);
    csr.neighbors[cursor[v]] = u;
    csr.edge_slot[cursor[v]++] = static_cast<std::uint32_t>(i);
  }
  // Canonical edge lists are sorted by (u, v), so insertion order per node is
  // ascending for the v side but not the u side; sort each list with its slots.
  for (NodeId u = 0; u < node_count; ++u) {
    const EdgeIndex b = csr.offsets[u], e = csr.offsets[u + 1];
    std::vector<std::pair<NodeId, std::uint32_t>> tmp;
    tmp.reserve(e - b);
    for (EdgeIndex i = b; i < e; ++i) tmp.emplace_back(csr.neighbors[i], csr.edge_slot[i]);
    std::sort(tmp.begin(), tmp.end());
    for (EdgeIndex i = b; i < e; ++i) {
      csr.neighbors[i] = tmp[i - b].first;
      csr.edge_slot[i] = tmp[i - b].second;
    }
  }
  return csr;
}

}  // namespace detail

// Heterogeneous graph of one target entity type plus auxiliary entity types.
// Every edge joins a target node to a non-target node.
class MultiEntityGraph {
 public:
  MultiEntityGraph() = default;

  // `edges` may contain duplicates; they are deduplicated by node pair,
  // keeping the first relation id seen.
  MultiEntityGraph(std::vector<TypeId> node_types, std::vector<std::string> type_names,
                   TypeId target_type,
                   std::vector<std::pair<NodeId, NodeId>> edges,
                   std::vector<TypeId> edge_relations, TypeId relation_count)
      : node_types_(std::move(node_types)),
        type_names_(std::move(type_names)),
        target_type_(target_type),
        relation_count_(relation_count) {
    const std::size_t n = node_types_.size();
    require(target_type_ < type_names_.size(), ErrorCategory::Validation,
            "target type id out of range");
    require(edges.size() == edge_relations.size(), ErrorCategory::Validation,
            "edge/relation length mismatch");

    struct Rec {
      NodeId u, v;
      TypeId rel;
    };
    std::vector<Rec> recs;
    recs.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      auto [a, b] = edges[i];
      require(a < n && b < n, ErrorCategory::Validation,
              "edge endpoint " + std::to_string(std::max(a, b)) + " out of range");
      require(a != b, ErrorCategory::Validation,
              "self-loop on node " + std::to_string(a) + " violates target/non-target bipartiteness");
      const bool a_target = node_types_[a] == target_type_;
      const bool b_target = node_types_[b] == target_type_;
      require(a_target != b_target, ErrorCategory::Validation,
              "edge (" + std::to_string(a) + "," + std::to_string(b) +
                  ") joins two " + (a_target ? "target" : "non-target") + " nodes");
      require(edge_relations[i] < relation_count_, ErrorCategory::Validation,
              "relation id out of range");
      if (a > b) std::swap(a, b);
      recs.push_back({a, b, edge_relations[i]});
    }
    std::stable_sort(recs.begin(), recs.end(),
                     [](const Rec& x, const Rec& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
    std::vector<std::pair<NodeId, NodeId>> uniq;
    uniq.reserve(recs.size());
    edge_relation_.clear();
    for (const Rec& r : recs) {
      if (!uniq.empty() && uniq.back().first == r.u && uniq.back().second == r.v) continue;
      uniq.emplace_back(r.u, r.v);
      edge_relation_.push_back(r.rel);
    }
    csr_ = detail::build_csr(n, uniq);

    for (TypeId t : node_types_)
      require(t < type_names_.size(), ErrorCategory::Validation, "node type id out of range");
  }

  std::size_t node_count() const { return node_types_.size(); }
  std::size_t edge_count() const { return csr_.edge_count(); }
  TypeId node_type(NodeId u) const { return node_types_[u]; }
  const std::vector<TypeId>& node_types() const { return node_types_; }
  const std::vector<std::string>& type_names() const { return type_names_; }
  std::size_t type_count() const { return type_names_.size(); }
  TypeId target_type() const { return target_type_; }
  TypeId relation_count() const { return relation_count_; }
  bool is_target(NodeId u) const { return node_types_[u] == target_type_; }

  // Relation id of the undirected edge with payload slot `e`.
  TypeId edge_relation(std::uint32_t e) const { return edge_relation_[e]; }

  const Csr& adjacency() const { return csr_; }
  GraphView view() const { return view_of(csr_); }

  std::vector<NodeId> target_nodes() const {
    std::vector<NodeId> out;
    for (NodeId u = 0; u < node_types_.size(); ++u)
      if (is_target(u)) out.push_back(u);
    return out;
  }

 private:
  std::vector<TypeId> node_types_;
  std::vector<std::string> type_names_;
  TypeId target_type_ = 0;
  TypeId relation_count_ = 0;
  Csr csr_;
  std::vector<TypeId> edge_relation_;  // per undirected edge
};

// Maximum number of non-target entity types the one-hot edge feature supports.
constexpr std::size_t kMaxEdgeFeatureDim = 64;

// Target-entity-only graph. Each undirected edge carries a d-bit feature:
// bit t is set iff the endpoints share at least one non-target entity of
// type t. Shared-entity counts are kept as an optional side channel; they are
// never fed to the edge-aware aggregation by default.
class SingleEntityGraph {
 public:
  SingleEntityGraph() = default;

  SingleEntityGraph(std::size_t node_count,
                    std::vector<std::pair<NodeId, NodeId>> edges,
                    std::vector<std::uint64_t> edge_bits,
                    std::vector<std::string> feature_type_names,
                    std::vector<NodeId> original_ids,
                    std::vector<std::vector<std::uint32_t>> edge_counts = {})
      : edge_bits_(std::move(edge_bits)),
        edge_counts_(std::move(edge_counts)),
        feature_type_names_(std::move(feature_type_names)),
        original_ids_(std::move(original_ids)) {
    require(feature_type_names_.size() >= 1 &&
                feature_type_names_.size() <= kMaxEdgeFeatureDim,
            ErrorCategory::Validation, "edge feature dimension out of range");
    require(edges.size() == edge_bits_.size(), ErrorCategory::Validation,
            "edge/feature length mismatch");
    require(original_ids_.empty() || original_ids_.size() == node_count,
            ErrorCategory::Validation, "original id map size mismatch");
    const std::uint64_t dim_mask =
        feature_type_names_.size() == 64 ? ~0ull : ((1ull << feature_type_names_.size()) - 1);
    struct Rec {
      NodeId u, v;
      std::size_t idx;
    };
    std::vector<Rec> recs;
    recs.reserve(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      auto [a, b] = edges[i];
      require(a < node_count && b < node_count && a != b, ErrorCategory::Validation,
              "invalid single-entity edge");
      require(edge_bits_[i] != 0 && (edge_bits_[i] & ~dim_mask) == 0,
              ErrorCategory::Validation, "edge feature must have >=1 set bit within dim");
      if (a > b) std::swap(a, b);
      recs.push_back({a, b, i});
    }
    std::sort(recs.begin(), recs.end(),
              [](const Rec& x, const Rec& y) { return std::tie(x.u, x.v) < std::tie(y.u, y.v); });
    for (std::size_t i = 1; i < recs.size(); ++i)
      require(std::tie(recs[i].u, recs[i].v) != std::tie(recs[i - 1].u, recs[i - 1].v),
              ErrorCategory::Validation, "duplicate single-entity edge");
    std::vector<std::pair<NodeId, NodeId>> uniq(recs.size());
    std::vector<std::uint64_t> bits(recs.size());
    std::vector<std::vector<std::uint32_t>> counts(edge_counts_.empty() ? 0 : recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      uniq[i] = {recs[i].u, recs[i].v};
      bits[i] = edge_bits_[recs[i].idx];
      if (!edge_counts_.empty()) counts[i] = std::move(edge_counts_[recs[i].idx]);
    }
    edges_ = std::move(uniq);
    edge_bits_ = std::move(bits);
    edge_counts_ = std::move(counts);
    csr_ = detail::build_csr(node_count, edges_);
  }

  std::size_t node_count() const { return csr_.node_count; }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t edge_feature_dim() const { return feature_type_names_.size(); }
  const std::vector<std::string>& feature_type_names() const { return feature_type_names_; }
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  std::uint64_t edge_feature_bits(std::uint32_t e) const { return edge_bits_[e]; }
  bool has_counts() const { return !edge_counts_.empty(); }
  const std::vector<std::uint32_t>& edge_shared_counts(std::uint32_t e) const {
    return edge_counts_[e];
  }
  // Original multi-entity node id of single-entity node u (identity if absent).
  NodeId original_id(NodeId u) const {
    return original_ids_.empty() ? u : original_ids_[u];
  }
  const std::vector<NodeId>& original_ids() const { return original_ids_; }

  const Csr& adjacency() const { return csr_; }
  GraphView view() const { return view_of(csr_); }

 private:
  Csr csr_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::uint64_t> edge_bits_;
  std::vector<std::vector<std::uint32_t>> edge_counts_;
  std::vector<std::string> feature_type_names_;
  std::vector<NodeId> original_ids_;
};

// Partially annotated ground truth; label 0 = benign, 1 = suspicious.
class LabeledSet {
 public:
  LabeledSet() = default;
  LabeledSet(std::vector<std::pair<NodeId, std::uint8_t>> entries, std::size_t node_count)
      : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      require(entries_[i].first < node_count, ErrorCategory::Validation,
              "label references unknown node " + std::to_string(entries_[i].first));
      require(entries_[i].second <= 1, ErrorCategory::Validation, "label must be 0 or 1");
      require(i == 0 || entries_[i].first != entries_[i - 1].first, ErrorCategory::Validation,
              "duplicate label for node " + std::to_string(entries_[i].first));
    }
  }

  const std::vector<std::pair<NodeId, std::uint8_t>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t count_of(std::uint8_t label) const {
    std::size_t c = 0;
    for (const auto& [_, y] : entries_)
      if (y == label) ++c;
    return c;
  }

 private:
  std::vector<std::pair<NodeId, std::uint8_t>> entries_;
};

struct GraphStats {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::size_t max_degree = 0;
  std::map<std::string, std::size_t> type_counts;  // per node type name
};

inline GraphStats graph_stats(const MultiEntityGraph& g) {
  GraphStats s;
  s.node_count = g.node_count();
  s.edge_count = g.edge_count();
  for (NodeId u = 0; u < g.node_count(); ++u) {
    s.max_degree = std::max(s.max_degree, g.adjacency().degree(u));
    s.type_counts[g.type_names()[g.node_type(u)]]++;
  }
  return s;
}

inline GraphStats graph_stats(const SingleEntityGraph& g) {
  GraphStats s;
  s.node_count = g.node_count();
  s.edge_count = g.edge_count();
  for (NodeId u = 0; u < g.node_count(); ++u)
    s.max_degree = std::max(s.max_degree, g.adjacency().degree(u));
  return s;
}

// Node/edge compression ratios of a transformation pair, as reported for
// dataset statistics tables.
struct CompressionRatios {
  double node_ratio = 0.0;
  double edge_ratio = 0.0;
};

inline CompressionRatios compression_ratios(const MultiEntityGraph& multi,
                                            const SingleEntityGraph& single) {
  CompressionRatios r;
  if (single.node_count() > 0)
    r.node_ratio = static_cast<double>(multi.node_count()) / static_cast<double>(single.node_count());
  if (single.edge_count() > 0)
    r.edge_ratio = static_cast<double>(multi.edge_count()) / static_cast<double>(single.edge_count());
  return r;
}

}  // namespace fraudgnn
