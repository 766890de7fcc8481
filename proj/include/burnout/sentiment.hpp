#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "burnout/errors.hpp"
#include "burnout/preprocess.hpp"

namespace burnout::sentiment {

/// Declaration order is the tie-break order: negative wins over neutral,
/// neutral over positive.
enum class Label { Negative = 0, Neutral = 1, Positive = 2 };

const char* label_name(Label label);

struct SentimentScore {
  double p_neg = 0.0;
  double p_neu = 1.0;
  double p_pos = 0.0;
  Label label = Label::Neutral;
  double confidence = 1.0;

  /// Builds a score from a probability triple, filling label and confidence.
  static SentimentScore from_probabilities(double p_neg, double p_neu, double p_pos);
  bool operator==(const SentimentScore&) const = default;
};

struct NoteSentiment {
  std::string note_id;
  std::vector<SentimentScore> sentence_scores;
  double doc_confidence = 0.0;
  Label doc_label = Label::Neutral;
  std::size_t high_conf_neg_sentences = 0;
  bool operator==(const NoteSentiment&) const = default;
};

inline constexpr double kNeutralLogit = 0.15;

struct ScorerConfig {
  double tau_sent = 0.75;
  double temperature = 1.0;
  std::set<std::string> negative_cues;
  std::set<std::string> positive_cues;

  /// Throws ConfigError unless 1/3 < tau_sent <= 1 and temperature > 0.
  void validate() const;

  /// Reads cue files (one token per line). Each entry is stored both as
  /// written and lemmatized so raw and normalized tokens match.
  static ScorerConfig load(const std::filesystem::path& negative_cues,
                           const std::filesystem::path& positive_cues,
                           const std::map<std::string, std::string>& lemma_exceptions);
};

/// Cue-count softmax: logits (neg/len, kNeutralLogit, pos/len) / temperature.
SentimentScore score_sentence_baseline(const std::vector<std::string>& tokens,
                                       const ScorerConfig& config);

/// Document-level fold: max sentence confidence (earliest on ties) and the
/// count of negative sentences at or above tau_sent.
NoteSentiment summarize_note(std::string note_id, std::vector<SentimentScore> scores,
                             double tau_sent);

NoteSentiment score_note_baseline(const preprocess::CleanNote& note, const ScorerConfig& config);

struct ExternalScores {
  std::map<std::string, NoteSentiment> notes;
  std::size_t rejected_rows = 0;
  std::size_t fallback_notes = 0;
};

/// Reads a score JSONL file ({note_id, sentence_index, p_neg, p_neu, p_pos};
/// '#' lines are comments). Notes without rows are scored by the baseline.
ExternalScores load_external_scores(const std::filesystem::path& path,
                                    const std::vector<preprocess::CleanNote>& notes,
                                    const ScorerConfig& config, Warnings* warnings = nullptr);

ExternalScores parse_external_scores(std::string_view jsonl,
                                     const std::vector<preprocess::CleanNote>& notes,
                                     const ScorerConfig& config, Warnings* warnings = nullptr);

struct ProviderSentiment {
  double mean_doc_confidence = 0.0;
  double neg_note_fraction = 0.0;
  std::size_t total_high_conf_neg_sentences = 0;
  /// Notes labelled negative with doc_confidence >= tau_sent.
  std::size_t high_severity_notes = 0;
  std::size_t note_count = 0;
  bool operator==(const ProviderSentiment&) const = default;
};

bool is_high_severity(const NoteSentiment& note, double tau_sent);

/// Per-provider fold. `provider_of` maps note_id to provider_id; notes
/// missing from it are an error.
std::map<std::string, ProviderSentiment> aggregate_provider_sentiment(
    const std::vector<NoteSentiment>& notes, const std::map<std::string, std::string>& provider_of,
    double tau_sent);

struct Distribution {
  double positive = 0.0;
  double neutral = 0.0;
  double negative = 0.0;
};

/// Fractions of notes by doc_label. Throws DataError on an empty corpus.
Distribution corpus_sentiment_distribution(const std::vector<NoteSentiment>& notes);

}  // namespace burnout::sentiment
