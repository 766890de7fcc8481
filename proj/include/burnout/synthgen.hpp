#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "burnout/topics.hpp"

namespace burnout::synthgen {

/// Generator parameters. Rates are expressed as integer per-mille values so
/// the whole sampling path stays in integer arithmetic.
struct GenConfig {
  std::uint64_t seed = 42;
  int n_providers = 200;
  int min_notes = 3;
  int max_notes = 30;
  double burnout_rate = 0.05;
  int planted_topics = 3;
  int planted_vocab = 60;

  int min_sentences = 6;
  int max_sentences = 14;
  int min_words = 5;
  int max_words = 9;

  // Normal providers: chance per note of one negative / positive sentence
  // and of one stress-lexicon mention.
  int normal_negative_permille = 100;
  int normal_positive_permille = 50;
  int normal_stress_permille = 80;

  // Burnout providers: per-note ranges, and a floor on their note count.
  int burnout_min_negative = 3;
  int burnout_max_negative = 5;
  int burnout_min_stress = 2;
  int burnout_max_stress = 3;
  int burnout_min_notes = 6;

  int missing_workload_permille = 50;
  int workload_only_providers = 2;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// Planted topic-word distributions with integer weights.
struct PlantedTopics {
  std::vector<std::string> vocabulary;
  std::vector<std::vector<std::uint32_t>> weights;  // K x V

  Eigen::MatrixXd distribution() const;  // rows normalized
};

/// Fixed pseudo-word vocabulary; words survive normalization unchanged.
std::vector<std::string> pseudo_words(int count);

PlantedTopics planted_topics(std::uint64_t seed, int topics, int vocab);

struct PlantedCorpus {
  PlantedTopics topics;
  std::vector<topics::Document> docs;
};

/// Bag-of-words documents drawn directly from planted topics (no text).
PlantedCorpus planted_topic_corpus(std::uint64_t seed, int topics, int vocab, int n_docs,
                                   int min_len = 60, int max_len = 120);

struct Corpus {
  std::string notes_jsonl;
  std::string admissions_csv;
  std::string labevents_csv;
  std::string procedureevents_csv;
  std::string ground_truth_csv;
  std::string manifest_json;

  std::vector<std::string> providers;  // note-authoring providers, sorted
  std::map<std::string, bool> ground_truth;
  std::size_t note_count = 0;
};

Corpus generate(const GenConfig& config);

/// notes.jsonl, admissions.csv, labevents.csv, procedureevents.csv,
/// ground_truth.csv and manifest.json under `dir`.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

}  // namespace burnout::synthgen
