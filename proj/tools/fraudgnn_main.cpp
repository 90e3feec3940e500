// Command-line front end for the fraud-detection pipeline. Each subcommand
// runs one pipeline stage from a shared config file and writes its artifacts
// plus a run manifest into the output directory.

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "fraudgnn/pipeline.hpp"

namespace {

const char* category_name(fraudgnn::ErrorCategory cat) {
  switch (cat) {
    case fraudgnn::ErrorCategory::Config: return "config";
    case fraudgnn::ErrorCategory::Io: return "io";
    case fraudgnn::ErrorCategory::Numeric: return "numeric";
    case fraudgnn::ErrorCategory::Validation: return "validation";
  }
  return "unknown";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fraud detection on non-attributed graphs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  unsigned threads_override = 0;

  app.add_option("--config", config_path, "pipeline config file (key = value, sectioned)");
  app.add_option("--out", out_override, "output directory (overrides paths.out)");
  app.add_option("--seed", seed_override, "global seed (overrides config)")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--threads", threads_override, "worker threads (overrides config)");

  const char* names[] = {"synth", "transform", "featurize", "pretrain",
                         "finetune", "eval", "export"};
  const char* descs[] = {"generate a synthetic planted-fraud dataset",
                         "multi-entity to single-entity transformation",
                         "initialize node features",
                         "contrastive pre-training of the encoder",
                         "supervised fine-tuning and prediction",
                         "full method-grid evaluation",
                         "export embeddings for visualization"};
  for (int i = 0; i < 7; ++i) app.add_subcommand(names[i], descs[i]);

  CLI11_PARSE(app, argc, argv);

  try {
    fraudgnn::PipelineConfig cfg;
    if (!config_path.empty()) cfg = fraudgnn::load_pipeline_config(config_path);
    if (seed_set) cfg.seed = seed_override;
    if (!out_override.empty()) cfg.paths.out = out_override;
    if (threads_override > 0) cfg.threads = threads_override;

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "synth") fraudgnn::cmd_synth(cfg);
    else if (cmd == "transform") fraudgnn::cmd_transform(cfg);
    else if (cmd == "featurize") fraudgnn::cmd_featurize(cfg);
    else if (cmd == "pretrain") fraudgnn::cmd_pretrain(cfg);
    else if (cmd == "finetune") fraudgnn::cmd_finetune(cfg);
    else if (cmd == "eval") fraudgnn::cmd_eval(cfg);
    else if (cmd == "export") fraudgnn::cmd_export(cfg);
    return 0;
  } catch (const fraudgnn::Error& e) {
    std::cerr << "error (" << category_name(e.category()) << "): " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
