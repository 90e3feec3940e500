#pragma once

#include <string>
#include <vector>

#include "fraudgnn/graph.hpp"
#include "fraudgnn/rng.hpp"

namespace fraudgnn {

// Planted-fraud generator. Fraud rings co-use per-ring shared entities and,
// beyond that, common infrastructure ("farms": device/IP pools serving many
// rings), which welds the rings into one globally coherent community. Benign
// users mostly create private entities, occasionally touch a common pool,
// and share a couple of entity types within households, so locally a fraud
// neighborhood resembles a benign pool clique; the class signal lives at
// community scale. Ground truth is ring membership.
struct SynthConfig {
  std::size_t n_users = 10000;
  std::vector<std::string> non_target_types = {"device", "ip", "address", "phone", "email"};
  std::size_t ring_count = 500;
  std::size_t ring_size = 10;
  double share_rate_fraud = 0.9;   // ring member -> each ring pool entity
  double share_rate_benign = 0.6;  // background attachment -> common pool
  std::size_t ring_pool_per_type = 1;
  std::size_t ring_types = 2;      // entity types one ring coordinates on
  double farm_rate = 0.7;          // ring member -> one shared farm entity
  std::size_t farm_pool_size = 0;  // per type; 0: max(4, ring_count / 6)
  // Synthetic accounts have thin ordinary footprints: a fraud user's chance
  // of touching the common pools is share_rate_benign * this factor.
  double fraud_background_factor = 0.15;
  std::size_t common_pool_size = 0;  // 0: max(8, n_users / 22)
  double household_rate = 0.5;     // fraction of users living in a household
  std::size_t household_size = 3;
  std::size_t household_types = 2;  // entity types one household shares
  double household_share = 0.9;
  // Scarce labels are the regime the pipeline targets; 0.002 approximates
  // the industrial-scale scarcity reported for this problem class.
  double label_fraction = 0.03;
  std::uint64_t seed = 7;

  std::size_t effective_common_pool() const {
    return common_pool_size > 0 ? common_pool_size
                                : std::max<std::size_t>(8, n_users / 12);
  }

  std::size_t effective_farm_pool() const {
    return farm_pool_size > 0 ? farm_pool_size
                              : std::max<std::size_t>(4, ring_count / 3);
  }

  void validate() const {
    require(n_users >= 2, ErrorCategory::Config, "need at least 2 users");
    require(!non_target_types.empty(), ErrorCategory::Config,
            "need at least one non-target entity type");
    require(ring_count * ring_size <= n_users, ErrorCategory::Config,
            "infeasible config: ring_count * ring_size exceeds n_users");
    require(share_rate_fraud > share_rate_benign, ErrorCategory::Config,
            "share_rate_fraud must exceed share_rate_benign");
    require(share_rate_fraud > 0.0 && share_rate_fraud <= 1.0, ErrorCategory::Config,
            "share_rate_fraud must be in (0,1]");
    require(share_rate_benign >= 0.0 && share_rate_benign < 1.0, ErrorCategory::Config,
            "share_rate_benign must be in [0,1)");
    require(label_fraction > 0.0 && label_fraction <= 1.0, ErrorCategory::Config,
            "label_fraction must be in (0,1]");
  }
};

struct SynthResult {
  MultiEntityGraph graph;
  LabeledSet labeled;                      // exposed subset, stratified by class
  std::vector<std::uint8_t> ground_truth;  // per user id
};

inline SynthResult generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n_types = cfg.non_target_types.size();
  const std::size_t n_users = cfg.n_users;

  // Ring membership over a shuffled user list, so ring ids are scattered.
  std::vector<NodeId> users(n_users);
  for (std::size_t i = 0; i < n_users; ++i) users[i] = static_cast<NodeId>(i);
  RngStream ring_rng = derive_stream(cfg.seed, "synth.rings");
  ring_rng.shuffle(users);
  std::vector<std::uint8_t> truth(n_users, 0);
  std::vector<std::vector<NodeId>> rings(cfg.ring_count);
  for (std::size_t r = 0; r < cfg.ring_count; ++r) {
    for (std::size_t j = 0; j < cfg.ring_size; ++j) {
      const NodeId u = users[r * cfg.ring_size + j];
      rings[r].push_back(u);
      truth[u] = 1;
    }
  }

  // Entities get ids after all users; allocation order is deterministic.
  NodeId next_id = static_cast<NodeId>(n_users);
  std::vector<TypeId> node_types(n_users, 0);  // type 0 = user
  auto new_entity = [&](std::size_t type_index) {
    node_types.push_back(static_cast<TypeId>(1 + type_index));
    return next_id++;
  };

  const std::size_t pool_size = cfg.effective_common_pool();
  std::vector<std::vector<NodeId>> common_pool(n_types);
  for (std::size_t t = 0; t < n_types; ++t)
    for (std::size_t i = 0; i < pool_size; ++i) common_pool[t].push_back(new_entity(t));

  // Each ring coordinates on a subset of entity types, so its edge features
  // are not trivially distinguishable from ordinary co-occurrences.
  RngStream ring_type_rng = derive_stream(cfg.seed, "synth.ring_types");
  const std::size_t types_per_ring = std::min(std::max<std::size_t>(1, cfg.ring_types), n_types);
  std::vector<std::vector<std::size_t>> ring_type_choice(cfg.ring_count);
  std::vector<std::vector<std::vector<NodeId>>> ring_pool(cfg.ring_count);
  for (std::size_t r = 0; r < cfg.ring_count; ++r) {
    std::vector<std::size_t> ts(n_types);
    for (std::size_t t = 0; t < n_types; ++t) ts[t] = t;
    ring_type_rng.shuffle(ts);
    ts.resize(types_per_ring);
    ring_type_choice[r] = ts;
    ring_pool[r].resize(n_types);
    for (std::size_t t : ts)
      for (std::size_t i = 0; i < cfg.ring_pool_per_type; ++i)
        ring_pool[r][t].push_back(new_entity(t));
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<TypeId> relations;
  auto add_edge = [&](NodeId u, NodeId e, std::size_t t) {
    edges.emplace_back(u, e);
    relations.push_back(static_cast<TypeId>(t));
  };

  // Background behavior: every user owns one attachment per entity type,
  // shared from the common pool with probability share_rate_benign and
  // private otherwise. Ring members touch the common pools less.
  RngStream bg_rng = derive_stream(cfg.seed, "synth.background");
  for (NodeId u = 0; u < n_users; ++u) {
    const double share =
        cfg.share_rate_benign * (truth[u] ? cfg.fraud_background_factor : 1.0);
    for (std::size_t t = 0; t < n_types; ++t) {
      if (bg_rng.next_bernoulli(share)) {
        add_edge(u, common_pool[t][bg_rng.next_below(pool_size)], t);
      } else {
        add_edge(u, new_entity(t), t);
      }
    }
  }

  // Households: small label-independent groups sharing a couple of entity
  // types (e.g. one address + one IP for the people living together).
  if (cfg.household_rate > 0.0 && cfg.household_size >= 2) {
    RngStream hh_rng = derive_stream(cfg.seed, "synth.households");
    std::vector<NodeId> pool_users(n_users);
    for (std::size_t i = 0; i < n_users; ++i) pool_users[i] = static_cast<NodeId>(i);
    hh_rng.shuffle(pool_users);
    const std::size_t in_households =
        static_cast<std::size_t>(cfg.household_rate * static_cast<double>(n_users));
    const std::size_t types_per_household = std::min(cfg.household_types, n_types);
    for (std::size_t start = 0; start + cfg.household_size <= in_households;
         start += cfg.household_size) {
      // pick the shared types for this household
      std::vector<std::size_t> ts(n_types);
      for (std::size_t t = 0; t < n_types; ++t) ts[t] = t;
      hh_rng.shuffle(ts);
      for (std::size_t k = 0; k < types_per_household; ++k) {
        const NodeId shared = new_entity(ts[k]);
        for (std::size_t j = 0; j < cfg.household_size; ++j) {
          if (hh_rng.next_bernoulli(cfg.household_share))
            add_edge(pool_users[start + j], shared, ts[k]);
        }
      }
    }
  }

  // Coordinated behavior: ring members hit their ring's shared pool.
  RngStream ring_edge_rng = derive_stream(cfg.seed, "synth.ring_edges");
  for (std::size_t r = 0; r < cfg.ring_count; ++r) {
    for (NodeId u : rings[r]) {
      for (std::size_t t : ring_type_choice[r]) {
        for (NodeId e : ring_pool[r][t]) {
          if (ring_edge_rng.next_bernoulli(cfg.share_rate_fraud)) add_edge(u, e, t);
        }
      }
    }
  }

  // Shared infrastructure: farm entities serve members of many rings and tie
  // the rings together into one community.
  if (cfg.farm_rate > 0.0 && cfg.ring_count > 0) {
    std::vector<std::size_t> farm_types;
    {
      std::vector<bool> used(n_types, false);
      for (const auto& ts : ring_type_choice)
        for (std::size_t t : ts) used[t] = true;
      for (std::size_t t = 0; t < n_types; ++t)
        if (used[t]) farm_types.push_back(t);
    }
    const std::size_t farm_pool = cfg.effective_farm_pool();
    std::vector<std::vector<NodeId>> farms(farm_types.size());
    for (std::size_t i = 0; i < farm_types.size(); ++i)
      for (std::size_t j = 0; j < farm_pool; ++j) farms[i].push_back(new_entity(farm_types[i]));
    RngStream farm_rng = derive_stream(cfg.seed, "synth.farms");
    for (std::size_t r = 0; r < cfg.ring_count; ++r) {
      for (NodeId u : rings[r]) {
        if (!farm_rng.next_bernoulli(cfg.farm_rate)) continue;
        const std::size_t i = farm_rng.next_below(farm_types.size());
        add_edge(u, farms[i][farm_rng.next_below(farm_pool)], farm_types[i]);
      }
    }
  }

  std::vector<std::string> type_names{"user"};
  for (const std::string& t : cfg.non_target_types) type_names.push_back(t);

  SynthResult out{
      MultiEntityGraph(std::move(node_types), std::move(type_names), 0, std::move(edges),
                       std::move(relations), static_cast<TypeId>(n_types)),
      LabeledSet(), std::move(truth)};

  // Stratified label exposure.
  std::vector<NodeId> benign, fraud;
  for (NodeId u = 0; u < n_users; ++u) (out.ground_truth[u] ? fraud : benign).push_back(u);
  RngStream label_rng = derive_stream(cfg.seed, "synth.labels");
  label_rng.shuffle(benign);
  label_rng.shuffle(fraud);
  auto take = [&](std::size_t n) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(
                                        std::llround(cfg.label_fraction * static_cast<double>(n))));
  };
  std::vector<std::pair<NodeId, std::uint8_t>> exposed;
  for (std::size_t i = 0; i < std::min(benign.size(), take(benign.size())); ++i)
    exposed.emplace_back(benign[i], 0);
  for (std::size_t i = 0; i < std::min(fraud.size(), take(fraud.size())); ++i)
    exposed.emplace_back(fraud[i], 1);
  out.labeled = LabeledSet(std::move(exposed), out.graph.node_count());
  return out;
}

}  // namespace fraudgnn
