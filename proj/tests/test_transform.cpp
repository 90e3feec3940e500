#include <doctest.h>

#include "fraudgnn/transform.hpp"
#include "test_util.hpp"

using namespace fraudgnn;

TEST_CASE("transform: worked example with two entity types") {
  // users u1,u2,u3 (0,1,2); device d1 (3) adjacent to u1,u2; address a1 (4)
  // adjacent to u2,u3; type order [device, address].
  auto multi = testutil::make_multi({0, 0, 0, 1, 2}, {"user", "device", "address"},
                                    {{0, 3}, {1, 3}, {1, 4}, {2, 4}});
  const SingleEntityGraph s = transform_to_single_entity(multi);
  CHECK(s.node_count() == 3);
  CHECK(s.edge_count() == 2);
  CHECK(s.feature_type_names() == std::vector<std::string>{"device", "address"});
  REQUIRE(s.edges()[0] == std::pair<NodeId, NodeId>{0, 1});
  CHECK(s.edge_feature_bits(0) == 0b01);  // shared device
  REQUIRE(s.edges()[1] == std::pair<NodeId, NodeId>{1, 2});
  CHECK(s.edge_feature_bits(1) == 0b10);  // shared address
}

TEST_CASE("transform: entities with fewer than two target neighbors produce no edges") {
  auto multi = testutil::make_multi({0, 0, 1, 1}, {"user", "device"}, {{0, 2}, {1, 3}});
  const SingleEntityGraph s = transform_to_single_entity(multi);
  CHECK(s.node_count() == 2);
  CHECK(s.edge_count() == 0);
}

TEST_CASE("transform: binary indicator, not count") {
  // two shared devices between the same pair still set one bit
  auto multi = testutil::make_multi({0, 0, 1, 1}, {"user", "device"},
                                    {{0, 2}, {1, 2}, {0, 3}, {1, 3}});
  TransformOptions opt;
  opt.record_counts = true;
  const SingleEntityGraph s = transform_to_single_entity(multi, opt);
  REQUIRE(s.edge_count() == 1);
  CHECK(s.edge_feature_bits(0) == 0b1);
  REQUIRE(s.has_counts());
  CHECK(s.edge_shared_counts(0) == std::vector<std::uint32_t>{2});
}

TEST_CASE("transform: equals brute-force oracle on random bipartite graphs") {
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    RngStream rng = derive_stream(1234, "transform.test", trial);
    auto multi = testutil::random_bipartite(rng);
    TransformOptions opt;
    opt.record_counts = true;
    const SingleEntityGraph s = transform_to_single_entity(multi, opt);
    const auto oracle = testutil::brute_force_transform(multi);
    CHECK(testutil::matches_oracle(s, oracle, true));
    // node conservation
    CHECK(s.node_count() == multi.target_nodes().size());
  }
}

TEST_CASE("transform: parallel output identical to sequential") {
  RngStream rng = derive_stream(99, "transform.par");
  auto multi = testutil::random_bipartite(rng, 200);
  TransformOptions seq;
  seq.record_counts = true;
  TransformOptions par = seq;
  par.threads = 4;
  const SingleEntityGraph a = transform_to_single_entity(multi, seq);
  const SingleEntityGraph b = transform_to_single_entity(multi, par);
  REQUIRE(a.edge_count() == b.edge_count());
  for (std::uint32_t e = 0; e < a.edge_count(); ++e) {
    CHECK(a.edges()[e] == b.edges()[e]);
    CHECK(a.edge_feature_bits(e) == b.edge_feature_bits(e));
    CHECK(a.edge_shared_counts(e) == b.edge_shared_counts(e));
  }
}

TEST_CASE("transform: monotonicity under edge additions") {
  RngStream rng = derive_stream(7, "transform.mono");
  for (int trial = 0; trial < 10; ++trial) {
    auto base_edges = std::vector<std::pair<NodeId, NodeId>>{{0, 4}, {1, 4}, {2, 5}};
    std::vector<TypeId> types{0, 0, 0, 0, 1, 2};
    auto before = testutil::make_multi(types, {"user", "device", "address"}, base_edges);
    // add one random target-entity edge
    base_edges.emplace_back(static_cast<NodeId>(rng.next_below(4)),
                            static_cast<NodeId>(4 + rng.next_below(2)));
    auto after = testutil::make_multi(types, {"user", "device", "address"}, base_edges);
    const SingleEntityGraph sb = transform_to_single_entity(before);
    const SingleEntityGraph sa = transform_to_single_entity(after);
    for (std::uint32_t e = 0; e < sb.edge_count(); ++e) {
      bool found = false;
      for (std::uint32_t f = 0; f < sa.edge_count(); ++f) {
        if (sa.edges()[f] == sb.edges()[e]) {
          found = true;
          // no feature bit may be cleared
          CHECK((sa.edge_feature_bits(f) & sb.edge_feature_bits(e)) == sb.edge_feature_bits(e));
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("transform: relabeling non-target ids leaves the result unchanged") {
  // same structure, entity ids permuted
  auto a = testutil::make_multi({0, 0, 0, 1, 2}, {"user", "device", "address"},
                                {{0, 3}, {1, 3}, {1, 4}, {2, 4}});
  auto b = testutil::make_multi({0, 0, 0, 2, 1}, {"user", "device", "address"},
                                {{0, 4}, {1, 4}, {1, 3}, {2, 3}});
  const SingleEntityGraph sa = transform_to_single_entity(a);
  const SingleEntityGraph sb = transform_to_single_entity(b);
  REQUIRE(sa.edge_count() == sb.edge_count());
  for (std::uint32_t e = 0; e < sa.edge_count(); ++e) {
    CHECK(sa.edges()[e] == sb.edges()[e]);
    CHECK(sa.edge_feature_bits(e) == sb.edge_feature_bits(e));
  }
}

TEST_CASE("transform: hub threshold skips and reports, never silently") {
  // hub device connected to 4 users, plus a small device pair
  auto multi = testutil::make_multi({0, 0, 0, 0, 1, 1}, {"user", "device"},
                                    {{0, 4}, {1, 4}, {2, 4}, {3, 4}, {0, 5}, {1, 5}});
  TransformOptions opt;
  opt.hub_threshold = 3;
  TransformSummary summary;
  const SingleEntityGraph s = transform_to_single_entity(multi, opt, &summary);
  CHECK(s.edge_count() == 1);  // only the small device survives
  CHECK(summary.skipped_hubs == 1);
  REQUIRE(summary.skipped_hub_ids.size() == 1);
  CHECK(summary.skipped_hub_ids[0] == 4);
  // matches oracle with the same threshold
  CHECK(testutil::matches_oracle(s, testutil::brute_force_transform(multi, 3)));

  // unlimited by default
  TransformSummary s2;
  const SingleEntityGraph full = transform_to_single_entity(multi, {}, &s2);
  CHECK(full.edge_count() == 6);  // C(4,2) from the hub, merged with the pair edge
  CHECK(s2.skipped_hubs == 0);
}
