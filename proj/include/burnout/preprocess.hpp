#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace burnout::preprocess {

/// Character span [begin, end) into the original note text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct Sentence {
  std::size_t index = 0;
  std::vector<std::string> tokens;
  Span raw_span;
  bool operator==(const Sentence&) const = default;
};

struct LinguisticMetrics {
  std::size_t word_count = 0;
  std::size_t sentence_count = 0;
  double avg_token_length = 0.0;
  double type_token_ratio = 0.0;
  double first_person_freq = 0.0;
  double third_person_freq = 0.0;
  bool operator==(const LinguisticMetrics&) const = default;
};

struct CleanNote {
  std::string note_id;
  std::vector<Sentence> sentences;  // only sentences with at least one token
  std::vector<std::string> all_tokens;
  LinguisticMetrics metrics;
  bool operator==(const CleanNote&) const = default;
};

/// Word lists driving normalization. Loaded from the shipped data files.
struct PreprocessConfig {
  std::set<std::string> stopwords;
  std::map<std::string, std::string> lemma_exceptions;
  std::set<std::string> outcome_terms;
  bool remove_outcome_terms = true;

  /// stopwords.txt, lemma_exceptions.csv and outcome_terms.txt from a directory.
  static PreprocessConfig load(const std::filesystem::path& data_dir);
  static PreprocessConfig load(const std::filesystem::path& stopwords,
                               const std::filesystem::path& lemma_exceptions,
                               const std::filesystem::path& outcome_terms);
};

inline constexpr std::string_view kNumberToken = "<num>";

const std::set<std::string>& first_person_pronouns();
const std::set<std::string>& third_person_pronouns();

/// Sentence spans over `text` on '.', '!', '?' and newline runs; clinical
/// abbreviations ("dr.", "e.g.", "mg.", ...) do not terminate. Spans are
/// trimmed of surrounding whitespace and include the terminator.
std::vector<Span> split_sentences(std::string_view text);

/// Placeholder removal, lowercasing and alphanumeric splitting. Digit runs
/// become "<num>". This is the stream pronouns and word counts are taken from.
std::vector<std::string> raw_tokens(std::string_view text);

/// Full normalization: raw_tokens, then outcome-term and stop-word removal,
/// then lemmatization.
std::vector<std::string> normalize_tokens(std::string_view sentence, const PreprocessConfig& config);

/// Table lookup, then suffix rules (ies, sses, s, ing, ed, d).
std::string lemmatize(std::string_view token, const std::map<std::string, std::string>& exceptions);

LinguisticMetrics compute_metrics(const CleanNote& note, std::string_view raw_text);

/// Sentence split, normalization and metrics for one note.
CleanNote clean_note(std::string note_id, std::string_view text, const PreprocessConfig& config);

}  // namespace burnout::preprocess
