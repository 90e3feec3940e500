#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "fraudgnn/common.hpp"
#include "fraudgnn/eval.hpp"
#include "fraudgnn/finetune.hpp"
#include "fraudgnn/pretrain.hpp"
#include "fraudgnn/sampling.hpp"
#include "fraudgnn/synth.hpp"
#include "fraudgnn/transform.hpp"

namespace fraudgnn {

inline const char* kVersionString = "fraudgnn 0.1.0";

// Everything a pipeline run needs, read from one sectioned key=value file.
// Unknown sections or keys are rejected by name.
struct PipelineConfig {
  std::uint64_t seed = 7;
  unsigned threads = 1;

  struct Paths {
    std::string edges;
    std::string node_types;
    std::string labels;
    std::string single_graph;
    std::string features;
    std::string checkpoint;
    std::string out = "out";
    std::string target_type = "user";
  } paths;

  TransformOptions transform;

  struct Features {
    std::string method = "eigen";  // random | degree | pagerank | eigen
    std::string graph = "single";  // single | multi
    std::size_t random_dim = 16;
    std::size_t degree_cap = 128;
    std::size_t eigen_k = 8;
    double pagerank_damping = 0.85;
    double pagerank_tol = 1e-10;
    std::size_t pagerank_max_iter = 200;
    bool normalize = true;
  } features;

  SamplerConfig sampler;

  struct Pretrain {
    std::size_t epochs = 5;
    std::size_t batch_size = 200;  // paper setting
    double lr = 1e-6;              // paper setting
    std::size_t dim = 16;          // paper setting
    double tau = 0.07;
    double momentum = 0.999;
    std::size_t queue_capacity = 1024;
    std::string mode = "SE";
    std::size_t anchor_cap = 0;  // 0 = all anchors every epoch
  } pretrain;

  struct Finetune {
    std::size_t epochs = 30;
    std::size_t batch_size = 100;  // paper setting
    double lr = 1e-5;              // paper setting
    std::size_t dim = 32;          // paper setting
    std::string mode = "SE";
    bool fresh_subgraphs = true;
  } finetune;

  SynthConfig synth;

  struct Eval {
    std::size_t folds = 5;
    std::size_t pretrain_epochs = 3;
    std::size_t pretrain_anchor_cap = 2000;
    std::size_t pretrain_batch = 200;
    double pretrain_lr = 1e-3;
    std::size_t finetune_epochs = 10;
    std::size_t finetune_batch = 100;
    double finetune_lr = 5e-3;
  } eval;

  // Canonical dump: one sorted "section.key=value" per line. Feeds both the
  // manifest and the config hash.
  std::string canonical() const;
  std::string config_hash() const {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
  }

  EvalConfig eval_config() const {
    EvalConfig c;
    c.folds = eval.folds;
    c.seed = seed;
    c.threads = threads;
    c.random_dim = features.random_dim;
    c.degree_cap = features.degree_cap;
    c.eigen_k = features.eigen_k;
    c.pagerank_damping = features.pagerank_damping;
    c.pagerank_tol = features.pagerank_tol;
    c.pagerank_max_iter = features.pagerank_max_iter;
    c.normalize = features.normalize;
    c.sampler = sampler;
    c.transform = transform;
    c.pretrain_dim = pretrain.dim;
    c.finetune_dim = finetune.dim;
    c.pretrain_epochs = eval.pretrain_epochs;
    c.pretrain_anchor_cap = eval.pretrain_anchor_cap;
    c.pretrain_batch = eval.pretrain_batch;
    c.pretrain_lr = eval.pretrain_lr;
    c.finetune_epochs = eval.finetune_epochs;
    c.finetune_batch = eval.finetune_batch;
    c.finetune_lr = eval.finetune_lr;
    return c;
  }
};

namespace config_detail {

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class KvReader {
 public:
  explicit KvReader(std::map<std::string, std::string> kv, std::string section)
      : kv_(std::move(kv)), section_(std::move(section)) {}

  bool has(const std::string& key) const { return kv_.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  std::uint64_t uint(const std::string& key, std::uint64_t fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    require(end && *end == '\0', ErrorCategory::Config,
            "config key " + section_ + "." + key + " expects an integer, got '" + it->second +
                "'");
    kv_.erase(it);
    return v;
  }

  double real(const std::string& key, double fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    require(end && *end == '\0', ErrorCategory::Config,
            "config key " + section_ + "." + key + " expects a number, got '" + it->second + "'");
    kv_.erase(it);
    return v;
  }

  bool flag(const std::string& key, bool fallback) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    require(it->second == "0" || it->second == "1", ErrorCategory::Config,
            "config key " + section_ + "." + key + " expects 0 or 1");
    const bool v = it->second == "1";
    kv_.erase(it);
    return v;
  }

  void finish() const {
    if (!kv_.empty())
      throw ConfigError("unknown config key '" + section_ + "." + kv_.begin()->first + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
  std::string section_;
};

inline std::map<std::string, std::map<std::string, std::string>> parse_ini(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::map<std::string, std::map<std::string, std::string>> out;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      require(t.back() == ']', ErrorCategory::Config,
              path + ":" + std::to_string(line_no) + ": unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    require(eq != std::string::npos, ErrorCategory::Config,
            path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    require(!key.empty(), ErrorCategory::Config,
            path + ":" + std::to_string(line_no) + ": empty key");
    require(out[section].emplace(key, value).second, ErrorCategory::Config,
            path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
  }
  return out;
}

}  // namespace config_detail

inline PipelineConfig load_pipeline_config(const std::string& path) {
  auto sections = config_detail::parse_ini(path);
  PipelineConfig cfg;

  auto take = [&](const std::string& name) {
    config_detail::KvReader r(sections.count(name) ? sections[name]
                                                   : std::map<std::string, std::string>{},
                              name.empty() ? "(top)" : name);
    sections.erase(name);
    return r;
  };

  {
    auto r = take("");
    cfg.seed = r.uint("seed", cfg.seed);
    cfg.threads = static_cast<unsigned>(r.uint("threads", cfg.threads));
    r.finish();
  }
  {
    auto r = take("paths");
    cfg.paths.edges = r.str("edges", cfg.paths.edges);
    cfg.paths.node_types = r.str("node_types", cfg.paths.node_types);
    cfg.paths.labels = r.str("labels", cfg.paths.labels);
    cfg.paths.single_graph = r.str("single_graph", cfg.paths.single_graph);
    cfg.paths.features = r.str("features", cfg.paths.features);
    cfg.paths.checkpoint = r.str("checkpoint", cfg.paths.checkpoint);
    cfg.paths.out = r.str("out", cfg.paths.out);
    cfg.paths.target_type = r.str("target_type", cfg.paths.target_type);
    r.finish();
  }
  {
    auto r = take("transform");
    cfg.transform.hub_threshold = r.uint("hub_threshold", cfg.transform.hub_threshold);
    cfg.transform.record_counts = r.flag("record_counts", cfg.transform.record_counts);
    r.finish();
  }
  {
    auto r = take("features");
    cfg.features.method = r.str("method", cfg.features.method);
    cfg.features.graph = r.str("graph", cfg.features.graph);
    cfg.features.random_dim = r.uint("random_dim", cfg.features.random_dim);
    cfg.features.degree_cap = r.uint("degree_cap", cfg.features.degree_cap);
    cfg.features.eigen_k = r.uint("eigen_k", cfg.features.eigen_k);
    cfg.features.pagerank_damping = r.real("pagerank_damping", cfg.features.pagerank_damping);
    cfg.features.pagerank_tol = r.real("pagerank_tol", cfg.features.pagerank_tol);
    cfg.features.pagerank_max_iter = r.uint("pagerank_max_iter", cfg.features.pagerank_max_iter);
    cfg.features.normalize = r.flag("normalize", cfg.features.normalize);
    r.finish();
  }
  {
    auto r = take("sampler");
    cfg.sampler.r = r.uint("r", cfg.sampler.r);
    cfg.sampler.restart_prob = r.real("restart_prob", cfg.sampler.restart_prob);
    cfg.sampler.max_nodes = r.uint("max_nodes", cfg.sampler.max_nodes);
    r.finish();
  }
  {
    auto r = take("pretrain");
    cfg.pretrain.epochs = r.uint("epochs", cfg.pretrain.epochs);
    cfg.pretrain.batch_size = r.uint("batch_size", cfg.pretrain.batch_size);
    cfg.pretrain.lr = r.real("lr", cfg.pretrain.lr);
    cfg.pretrain.dim = r.uint("dim", cfg.pretrain.dim);
    cfg.pretrain.tau = r.real("tau", cfg.pretrain.tau);
    cfg.pretrain.momentum = r.real("momentum", cfg.pretrain.momentum);
    cfg.pretrain.queue_capacity = r.uint("queue_capacity", cfg.pretrain.queue_capacity);
    cfg.pretrain.mode = r.str("mode", cfg.pretrain.mode);
    cfg.pretrain.anchor_cap = r.uint("anchor_cap", cfg.pretrain.anchor_cap);
    r.finish();
  }
  {
    auto r = take("finetune");
    cfg.finetune.epochs = r.uint("epochs", cfg.finetune.epochs);
    cfg.finetune.batch_size = r.uint("batch_size", cfg.finetune.batch_size);
    cfg.finetune.lr = r.real("lr", cfg.finetune.lr);
    cfg.finetune.dim = r.uint("dim", cfg.finetune.dim);
    cfg.finetune.mode = r.str("mode", cfg.finetune.mode);
    cfg.finetune.fresh_subgraphs = r.flag("fresh_subgraphs", cfg.finetune.fresh_subgraphs);
    r.finish();
  }
  {
    auto r = take("synth");
    cfg.synth.n_users = r.uint("n_users", cfg.synth.n_users);
    if (r.has("types")) {
      const auto parts = split(r.str("types", ""), ',');
      cfg.synth.non_target_types.clear();
      for (const auto& p : parts)
        if (!trim(p).empty()) cfg.synth.non_target_types.push_back(trim(p));
    }
    cfg.synth.ring_count = r.uint("ring_count", cfg.synth.ring_count);
    cfg.synth.ring_size = r.uint("ring_size", cfg.synth.ring_size);
    cfg.synth.share_rate_fraud = r.real("share_rate_fraud", cfg.synth.share_rate_fraud);
    cfg.synth.share_rate_benign = r.real("share_rate_benign", cfg.synth.share_rate_benign);
    cfg.synth.ring_pool_per_type = r.uint("ring_pool_per_type", cfg.synth.ring_pool_per_type);
    cfg.synth.ring_types = r.uint("ring_types", cfg.synth.ring_types);
    cfg.synth.farm_rate = r.real("farm_rate", cfg.synth.farm_rate);
    cfg.synth.farm_pool_size = r.uint("farm_pool_size", cfg.synth.farm_pool_size);
    cfg.synth.fraud_background_factor =
        r.real("fraud_background_factor", cfg.synth.fraud_background_factor);
    cfg.synth.common_pool_size = r.uint("common_pool_size", cfg.synth.common_pool_size);
    cfg.synth.household_rate = r.real("household_rate", cfg.synth.household_rate);
    cfg.synth.household_size = r.uint("household_size", cfg.synth.household_size);
    cfg.synth.household_types = r.uint("household_types", cfg.synth.household_types);
    cfg.synth.household_share = r.real("household_share", cfg.synth.household_share);
    cfg.synth.label_fraction = r.real("label_fraction", cfg.synth.label_fraction);
    r.finish();
  }
  {
    auto r = take("eval");
    cfg.eval.folds = r.uint("folds", cfg.eval.folds);
    cfg.eval.pretrain_epochs = r.uint("pretrain_epochs", cfg.eval.pretrain_epochs);
    cfg.eval.pretrain_anchor_cap = r.uint("pretrain_anchor_cap", cfg.eval.pretrain_anchor_cap);
    cfg.eval.pretrain_batch = r.uint("pretrain_batch", cfg.eval.pretrain_batch);
    cfg.eval.pretrain_lr = r.real("pretrain_lr", cfg.eval.pretrain_lr);
    cfg.eval.finetune_epochs = r.uint("finetune_epochs", cfg.eval.finetune_epochs);
    cfg.eval.finetune_batch = r.uint("finetune_batch", cfg.eval.finetune_batch);
    cfg.eval.finetune_lr = r.real("finetune_lr", cfg.eval.finetune_lr);
    r.finish();
  }
  if (!sections.empty())
    throw ConfigError("unknown config section '[" + sections.begin()->first + "]'");
  return cfg;
}

inline std::string PipelineConfig::canonical() const {
  using config_detail::fmt_g;
  std::ostringstream os;
  os << "eval.finetune_batch=" << eval.finetune_batch << '\n'
     << "eval.finetune_epochs=" << eval.finetune_epochs << '\n'
     << "eval.finetune_lr=" << fmt_g(eval.finetune_lr) << '\n'
     << "eval.folds=" << eval.folds << '\n'
     << "eval.pretrain_anchor_cap=" << eval.pretrain_anchor_cap << '\n'
     << "eval.pretrain_batch=" << eval.pretrain_batch << '\n'
     << "eval.pretrain_epochs=" << eval.pretrain_epochs << '\n'
     << "eval.pretrain_lr=" << fmt_g(eval.pretrain_lr) << '\n'
     << "features.degree_cap=" << features.degree_cap << '\n'
     << "features.eigen_k=" << features.eigen_k << '\n'
     << "features.graph=" << features.graph << '\n'
     << "features.method=" << features.method << '\n'
     << "features.normalize=" << (features.normalize ? 1 : 0) << '\n'
     << "features.pagerank_damping=" << fmt_g(features.pagerank_damping) << '\n'
     << "features.pagerank_max_iter=" << features.pagerank_max_iter << '\n'
     << "features.pagerank_tol=" << fmt_g(features.pagerank_tol) << '\n'
     << "features.random_dim=" << features.random_dim << '\n'
     << "finetune.batch_size=" << finetune.batch_size << '\n'
     << "finetune.dim=" << finetune.dim << '\n'
     << "finetune.epochs=" << finetune.epochs << '\n'
     << "finetune.fresh_subgraphs=" << (finetune.fresh_subgraphs ? 1 : 0) << '\n'
     << "finetune.lr=" << fmt_g(finetune.lr) << '\n'
     << "finetune.mode=" << finetune.mode << '\n'
     << "paths.checkpoint=" << paths.checkpoint << '\n'
     << "paths.edges=" << paths.edges << '\n'
     << "paths.features=" << paths.features << '\n'
     << "paths.labels=" << paths.labels << '\n'
     << "paths.node_types=" << paths.node_types << '\n'
     << "paths.out=" << paths.out << '\n'
     << "paths.single_graph=" << paths.single_graph << '\n'
     << "paths.target_type=" << paths.target_type << '\n'
     << "pretrain.anchor_cap=" << pretrain.anchor_cap << '\n'
     << "pretrain.batch_size=" << pretrain.batch_size << '\n'
     << "pretrain.dim=" << pretrain.dim << '\n'
     << "pretrain.epochs=" << pretrain.epochs << '\n'
     << "pretrain.lr=" << fmt_g(pretrain.lr) << '\n'
     << "pretrain.mode=" << pretrain.mode << '\n'
     << "pretrain.momentum=" << fmt_g(pretrain.momentum) << '\n'
     << "pretrain.queue_capacity=" << pretrain.queue_capacity << '\n'
     << "pretrain.tau=" << fmt_g(pretrain.tau) << '\n'
     << "sampler.max_nodes=" << sampler.max_nodes << '\n'
     << "sampler.r=" << sampler.r << '\n'
     << "sampler.restart_prob=" << fmt_g(sampler.restart_prob) << '\n'
     << "seed=" << seed << '\n';
  os << "synth.common_pool_size=" << synth.common_pool_size << '\n'
     << "synth.household_rate=" << fmt_g(synth.household_rate) << '\n'
     << "synth.household_share=" << fmt_g(synth.household_share) << '\n'
     << "synth.household_size=" << synth.household_size << '\n'
     << "synth.household_types=" << synth.household_types << '\n'
     << "synth.label_fraction=" << fmt_g(synth.label_fraction) << '\n'
     << "synth.n_users=" << synth.n_users << '\n'
     << "synth.ring_count=" << synth.ring_count << '\n'
     << "synth.ring_pool_per_type=" << synth.ring_pool_per_type << '\n'
     << "synth.ring_types=" << synth.ring_types << '\n'
     << "synth.farm_rate=" << fmt_g(synth.farm_rate) << '\n'
     << "synth.farm_pool_size=" << synth.farm_pool_size << '\n'
     << "synth.fraud_background_factor=" << fmt_g(synth.fraud_background_factor) << '\n'
     << "synth.ring_size=" << synth.ring_size << '\n'
     << "synth.share_rate_benign=" << fmt_g(synth.share_rate_benign) << '\n'
     << "synth.share_rate_fraud=" << fmt_g(synth.share_rate_fraud) << '\n';
  os << "synth.types=";
  for (std::size_t i = 0; i < synth.non_target_types.size(); ++i)
    os << (i ? "," : "") << synth.non_target_types[i];
  os << '\n';
  // `threads` is an execution knob that never changes results, so it stays
  // out of the canonical form and the config hash.
  os << "transform.hub_threshold=" << transform.hub_threshold << '\n'
     << "transform.record_counts=" << (transform.record_counts ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace fraudgnn
