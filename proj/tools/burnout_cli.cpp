// Command-line front end: one subcommand per pipeline stage plus `all`.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "burnout/errors.hpp"
#include "burnout/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kMissingArtifact = 2, kConfig = 3, kData = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace burnout;
  namespace fs = std::filesystem;

  CLI::App app{"Clinician burnout signal pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::string scores;
  std::string emit_sentences;
  bool quiet = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--out", out_dir, "artifact directory")->capture_default_str();
  app.add_flag("-q,--quiet", quiet, "do not print warnings");

  std::vector<std::pair<CLI::App*, std::optional<pipeline::Stage>>> commands;
  for (auto stage : {pipeline::Stage::Synth, pipeline::Stage::Ingest, pipeline::Stage::Score,
                     pipeline::Stage::Features, pipeline::Stage::Train, pipeline::Stage::Evaluate,
                     pipeline::Stage::Report}) {
    commands.emplace_back(app.add_subcommand(pipeline::stage_name(stage)), stage);
  }
  commands[2].first->description("score sentences (baseline or external score file)");
  commands[2].first->add_option("--scores", scores, "external sentence score JSONL");
  commands[2].first->add_option("--emit-sentences", emit_sentences, "write sentence boundary JSONL here");
  CLI::App* all = app.add_subcommand("all", "ingest through report");
  all->add_option("--scores", scores, "external sentence score JSONL");
  commands.emplace_back(all, std::nullopt);

  CLI11_PARSE(app, argc, argv);

  try {
    pipeline::PipelineConfig config;
    if (!config_path.empty()) {
      config = pipeline::PipelineConfig::load(config_path);
    } else {
      config.finalize();
    }
    if (seed) {
      config.seed = *seed;
      config.finalize();
    }
    pipeline::StageOptions options{scores, emit_sentences};

    pipeline::StageResult result;
    for (const auto& [cmd, stage] : commands) {
      if (!cmd->parsed()) continue;
      result = stage ? pipeline::run_stage(*stage, config, out_dir, options)
                     : pipeline::run_all(config, out_dir, options);
    }
    if (!quiet) {
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    }
    return kOk;
  } catch (const MissingArtifactError& e) {
    std::cerr << "error: missing artifact from stage '" << e.stage() << "': " << e.what() << '\n';
    return kMissingArtifact;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  }
}
