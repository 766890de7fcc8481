#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "burnout/classifier.hpp"
#include "burnout/provider_features.hpp"
#include "burnout/synthgen.hpp"

namespace burnout::pipeline {

inline constexpr std::string_view kVersion = "0.1.0";

struct PipelineConfig {
  std::uint64_t seed = 42;
  std::filesystem::path data_dir = BURNOUT_DEFAULT_DATA_DIR;

  struct Input {
    std::filesystem::path notes;  // empty: <out>/corpus/...
    std::filesystem::path admissions;
    std::filesystem::path labevents;
    std::filesystem::path procedureevents;
    std::filesystem::path ground_truth;  // optional
  } input;

  synthgen::GenConfig synth;

  struct Preprocess {
    std::filesystem::path stopwords;
    std::filesystem::path lemma_exceptions;
    std::filesystem::path outcome_terms;
    bool remove_outcome_terms = true;
  } preprocess;

  std::filesystem::path specialty_map;

  struct Sentiment {
    double tau_sent = 0.75;
    double temperature = 0.1;
    std::filesystem::path negative_cues;
    std::filesystem::path positive_cues;
    std::filesystem::path scores;  // external score file; empty = baseline
  } sentiment;

  std::filesystem::path stress_lexicon;

  struct Topics {
    int k = 5;
    double alpha = 0.1;
    double beta = 0.01;
    int iterations = 1000;
    std::size_t vocab_top_k = 2000;
    std::size_t min_df = 5;
    bool tune = false;
    std::size_t coherence_top_m = 10;
  } topics;

  features::LabelRule label;
  bool include_label_inputs = false;

  struct Classifier {
    double lambda = 1.0;
    int max_epochs = 1000;
    double tol = 1e-6;
    double test_fraction = 0.2;
    double threshold = 0.5;
  } classifier;

  features::MbiMapping mbi = features::MbiMapping::default_mapping();

  struct Report {
    std::size_t top_n = 10;
    std::map<int, std::string> topic_labels;
  } report;

  /// Parses a JSON config. Unknown keys and bad values throw ConfigError.
  /// Relative paths resolve against `base_dir`.
  static PipelineConfig from_json(std::string_view json_text, const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);

  /// Fills empty data-file paths from data_dir and checks parameter ranges.
  void finalize();

  /// Canonical JSON rendering, used for stage metadata digests.
  std::string to_json() const;
};

enum class Stage { Synth, Ingest, Score, Features, Train, Evaluate, Report };

const char* stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

/// Stages run by `all`, in order.
const std::vector<Stage>& full_chain();

struct StageOptions {
  std::filesystem::path scores;          // overrides config.sentiment.scores
  std::filesystem::path emit_sentences;  // score stage: sentence boundary file
};

struct StageResult {
  Warnings warnings;
};

/// Runs one stage, reading upstream artifacts from and writing into `out`.
/// Throws MissingArtifactError, ConfigError or DataError.
StageResult run_stage(Stage stage, const PipelineConfig& config, const std::filesystem::path& out,
                      const StageOptions& options = {});

/// Every stage of full_chain() in order.
StageResult run_all(const PipelineConfig& config, const std::filesystem::path& out,
                    const StageOptions& options = {});

/// Sentence-boundary JSONL for the external scorer: one row per retained
/// sentence {note_id, sentence_index, start, end, text}.
std::string sentence_boundaries_jsonl(const std::vector<std::pair<std::string, std::string>>& notes,
                                      const std::vector<preprocess::CleanNote>& clean);

}  // namespace burnout::pipeline
