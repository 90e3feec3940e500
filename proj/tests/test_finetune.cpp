#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fraudgnn/checkpoint.hpp"
#include "fraudgnn/finetune.hpp"
#include "test_util.hpp"

using namespace fraudgnn;

namespace {

struct PlainGraph {
  Csr csr;
  PlainGraph(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    csr = detail::build_csr(n, edges);
  }
};

SubGraph one_node_sub(const Tensor& features) {
  SubGraph sub;
  sub.anchor = 0;
  sub.members = {0};
  sub.anchor_index = 0;
  sub.local_offsets = {0, 0};
  sub.node_features = features;
  sub.edge_features = Tensor(0, 1);
  return sub;
}

// Two separable communities wired through distinct devices; labels follow
// community membership.
struct ToySetup {
  MultiEntityGraph multi;
  SingleEntityGraph single;
  FeatureMatrix features;
  LabeledSet labels;
};

ToySetup make_toy() {
  // users 0..5; users 0-2 share device 6, users 3-5 share device 7
  auto multi = testutil::make_multi({0, 0, 0, 0, 0, 0, 1, 1}, {"user", "device"},
                                    {{0, 6}, {1, 6}, {2, 6}, {3, 7}, {4, 7}, {5, 7}});
  SingleEntityGraph single = transform_to_single_entity(multi);
  FeatureMatrix f;
  f.values = Tensor(6, 2);
  for (NodeId u = 0; u < 6; ++u) {
    f.values(u, 0) = u < 3 ? 1.0 : -1.0;
    f.values(u, 1) = 0.5;
  }
  LabeledSet labels({{0, 0}, {1, 0}, {2, 0}, {3, 1}, {4, 1}, {5, 1}}, 6);
  return {std::move(multi), std::move(single), std::move(f), std::move(labels)};
}

}  // namespace

TEST_CASE("classify_forward: zero head gives [0.5, 0.5]; probabilities sum to 1") {
  FineTuneModel m = make_finetune_model(2, 3, 4, 1, EmbeddingMode::node, 1);
  m.head2.w.fill(0.0);
  m.head2.b.fill(0.0);
  Tensor x(1, 2);
  x(0, 0) = 0.7;
  x(0, 1) = -0.4;
  const Tensor probs = classify_eval(m, one_node_sub(x), EmbeddingMode::node);
  CHECK(probs(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(probs(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  RngStream rng = derive_stream(60, "ft.probs");
  for (int trial = 0; trial < 20; ++trial) {
    FineTuneModel r = make_finetune_model(2, 3, 4, 1, EmbeddingMode::node, trial + 2);
    Tensor rf(1, 2);
    rf.fill_normal(rng);
    const Tensor p = classify_eval(r, one_node_sub(rf), EmbeddingMode::node);
    CHECK(p(0, 0) > 0.0);
    CHECK(p(0, 1) > 0.0);
    CHECK(p(0, 0) + p(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("classify_forward: hand-composed single-node evaluation matches") {
  FineTuneModel m = make_finetune_model(2, 2, 3, 1, EmbeddingMode::node, 7);
  Tensor x(1, 2);
  x(0, 0) = 0.3;
  x(0, 1) = -0.8;
  const Tensor probs = classify_eval(m, one_node_sub(x), EmbeddingMode::node);

  // manual composition: 3 edge-aware layers degenerate to MLP((1+eps)x) on a
  // single node, then projection, head1+relu, head2, softmax
  Tensor h = x;
  for (const GinLayerParams& l : m.encoder.layers) {
    Tensor agg = h;
    agg.scale(1.0 + l.eps(0, 0));
    Tensor a1(1, l.lin1.w.cols());
    for (std::size_t o = 0; o < a1.cols(); ++o) {
      double s = l.lin1.b(0, o);
      for (std::size_t c = 0; c < agg.cols(); ++c) s += agg(0, c) * l.lin1.w(c, o);
      a1(0, o) = std::max(0.0, s);
    }
    Tensor a2(1, l.lin2.w.cols());
    for (std::size_t o = 0; o < a2.cols(); ++o) {
      double s = l.lin2.b(0, o);
      for (std::size_t c = 0; c < a1.cols(); ++c) s += a1(0, c) * l.lin2.w(c, o);
      a2(0, o) = s;
    }
    h = a2;
  }
  Tensor proj(1, m.projection.w.cols());
  for (std::size_t o = 0; o < proj.cols(); ++o) {
    double s = m.projection.b(0, o);
    for (std::size_t c = 0; c < h.cols(); ++c) s += h(0, c) * m.projection.w(c, o);
    proj(0, o) = s;
  }
  Tensor h1(1, m.head1.w.cols());
  for (std::size_t o = 0; o < h1.cols(); ++o) {
    double s = m.head1.b(0, o);
    for (std::size_t c = 0; c < proj.cols(); ++c) s += proj(0, c) * m.head1.w(c, o);
    h1(0, o) = std::max(0.0, s);
  }
  double logits[2];
  for (int o = 0; o < 2; ++o) {
    double s = m.head2.b(0, o);
    for (std::size_t c = 0; c < h1.cols(); ++c) s += h1(0, c) * m.head2.w(c, o);
    logits[o] = s;
  }
  const double mx = std::max(logits[0], logits[1]);
  const double z = std::exp(logits[0] - mx) + std::exp(logits[1] - mx);
  CHECK(probs(0, 0) == doctest::Approx(std::exp(logits[0] - mx) / z).epsilon(1e-12));
  CHECK(probs(0, 1) == doctest::Approx(std::exp(logits[1] - mx) / z).epsilon(1e-12));
}

TEST_CASE("cross_entropy: spot values and batch sum") {
  Tensor perfect(1, 2);
  perfect(0, 1) = 1.0;
  CHECK(cross_entropy(perfect, 1) == doctest::Approx(0.0).epsilon(1e-12));

  Tensor even(1, 2, 0.5);
  CHECK(cross_entropy(even, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(cross_entropy(even, 0) == doctest::Approx(0.6931).epsilon(1e-4));

  Tensor a(1, 2);
  a(0, 0) = 0.1;
  a(0, 1) = 0.9;
  Tensor b(1, 2);
  b(0, 0) = 0.25;
  b(0, 1) = 0.75;
  const double batch = cross_entropy(a, 1) + cross_entropy(b, 0);
  CHECK(batch == doctest::Approx(-std::log(0.9) - std::log(0.25)).epsilon(1e-12));
  CHECK(batch == doctest::Approx(1.4917).epsilon(1e-3));

  // log clamp keeps zero probabilities finite
  Tensor zero(1, 2);
  zero(0, 1) = 1.0;
  CHECK(std::isfinite(cross_entropy(zero, 0)));
}

TEST_CASE("finetune_fit: configuration errors") {
  ToySetup toy = make_toy();
  const SampleSource src = make_source(toy.single, &toy.features, true);
  SamplerConfig sampler;
  FineTuneModel m = make_finetune_model(2, 3, 4, 1, EmbeddingMode::subgraph, 1);

  LabeledSet empty;
  CHECK_THROWS_AS(finetune_fit(m, src, empty, sampler, {}), ConfigError);
  LabeledSet one_class({{0, 1}, {1, 1}}, 6);
  CHECK_THROWS_AS(finetune_fit(m, src, one_class, sampler, {}), ConfigError);
}

TEST_CASE("finetune_fit: lr=0 leaves the model unchanged") {
  ToySetup toy = make_toy();
  const SampleSource src = make_source(toy.single, &toy.features, true);
  SamplerConfig sampler;
  sampler.seed = 5;
  FineTuneModel m = make_finetune_model(2, 3, 4, 1, EmbeddingMode::subgraph, 2);
  FineTuneModel before = m;
  FineTuneConfig fc;
  fc.epochs = 3;
  fc.lr = 0.0;
  fc.optimizer = OptimizerConfig::Kind::sgd;
  finetune_fit(m, src, toy.labels, sampler, fc);
  auto pa = collect_params(m);
  auto pb = collect_params(before);
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t j = 0; j < pa[i].tensor->size(); ++j)
      CHECK(pa[i].tensor->at_flat(j) == pb[i].tensor->at_flat(j));
}

TEST_CASE("finetune_fit: converges on a separable toy set, deterministically") {
  ToySetup toy = make_toy();
  const SampleSource src = make_source(toy.single, &toy.features, true);
  SamplerConfig sampler;
  sampler.seed = 5;

  FineTuneConfig fc;
  fc.epochs = 60;
  fc.batch_size = 6;
  fc.lr = 2e-2;
  fc.fresh_subgraphs = false;  // frozen samples keep the trajectory smooth

  FineTuneModel m1 = make_finetune_model(2, 3, 4, 1, EmbeddingMode::subgraph, 3);
  const auto losses = finetune_fit(m1, src, toy.labels, sampler, fc);
  for (std::size_t e = 1; e < losses.size(); ++e) CHECK(losses[e] <= losses[e - 1] + 1e-9);
  CHECK(losses.back() < 0.01);

  // 100% training accuracy after convergence
  std::vector<NodeId> nodes{0, 1, 2, 3, 4, 5};
  const Prediction pred = predict(m1, src, nodes, sampler, EmbeddingMode::subgraph);
  for (std::size_t i = 0; i < nodes.size(); ++i)
    CHECK(pred.labels[i] == toy.labels.entries()[i].second);
  // argmax consistent with the reported probability
  for (std::size_t i = 0; i < nodes.size(); ++i)
    CHECK(pred.labels[i] == (pred.p_fraud[i] > 0.5 ? 1 : 0));

  // identical seed, identical final parameters
  FineTuneModel m2 = make_finetune_model(2, 3, 4, 1, EmbeddingMode::subgraph, 3);
  finetune_fit(m2, src, toy.labels, sampler, fc);
  auto p1 = collect_params(m1);
  auto p2 = collect_params(m2);
  for (std::size_t i = 0; i < p1.size(); ++i)
    for (std::size_t j = 0; j < p1[i].tensor->size(); ++j)
      CHECK(p1[i].tensor->at_flat(j) == p2[i].tensor->at_flat(j));
}

TEST_CASE("predict: zero head ties break to class 0") {
  ToySetup toy = make_toy();
  const SampleSource src = make_source(toy.single, &toy.features, true);
  SamplerConfig sampler;
  FineTuneModel m = make_finetune_model(2, 3, 4, 1, EmbeddingMode::node, 4);
  m.head2.w.fill(0.0);
  m.head2.b.fill(0.0);
  const Prediction pred = predict(m, src, {0, 3, 5}, sampler, EmbeddingMode::node);
  for (std::size_t i = 0; i < pred.labels.size(); ++i) {
    CHECK(pred.labels[i] == 0);
    CHECK(pred.p_fraud[i] == doctest::Approx(0.5));
  }
}

TEST_CASE("finetune: cross-entropy composite gradient passes fd_check") {
  ToySetup toy = make_toy();
  const SampleSource src = make_source(toy.single, &toy.features, true);
  SamplerConfig sampler;
  sampler.seed = 11;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    FineTuneModel m = make_finetune_model(2, 3, 4, 1, EmbeddingMode::subgraph, seed + 20);
    RngStream walk = derive_stream(seed, "ft.fd");
    const SubGraph sub = rwr_subgraph(src, static_cast<NodeId>(seed % 6), sampler, walk);
    auto params = collect_params(m);
    const double err = fd_check(params, [&](GradientSet* grads) {
      Tape tape;
      TapeFineTune tf = TapeFineTune::bind(tape, m, grads != nullptr);
      const int probs = classify_forward(tape, tf, m, sub, EmbeddingMode::subgraph);
      const int loss = tape.neg_log_pick(probs, 1);
      if (grads) {
        tape.backward(loss);
        *grads = tf.grads(tape);
      }
      return tape.value(loss)(0, 0);
    });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("checkpoint: finetune warm start from a pretrain checkpoint") {
  EncoderParams pre = make_encoder(2, 3, 3, false, 0, 9);
  const auto dir = std::filesystem::temp_directory_path() / "fraudgnn_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "pre.ckpt").string();
  {
    auto params = collect_params(pre);
    save_checkpoint(path, params, "echo=1");
  }
  const Checkpoint ckpt = load_checkpoint(path);
  CHECK(ckpt.config_echo == "echo=1");

  FineTuneModel m = make_finetune_model(2, 3, 4, 1, EmbeddingMode::node, 10);
  auto enc_params = collect_params(m.encoder);
  restore_params(ckpt, enc_params, /*allow_missing=*/true);
  CHECK(m.encoder.layers[0].lin1.w.data() == pre.layers[0].lin1.w.data());

  // strict restore rejects missing tensors (edge projections not in ckpt)
  CHECK_THROWS_AS(restore_params(ckpt, enc_params, false), ValidationError);
}
