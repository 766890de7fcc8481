#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "burnout/preprocess.hpp"

namespace burnout::stress {

inline constexpr std::size_t kCategoryCount = 7;

/// Fixed category order; also the column order of every stress output.
const std::array<std::string, kCategoryCount>& category_names();

/// One lexicon entry, compiled to a sequence of word matchers. Pattern
/// syntax: space-separated words; "word*" matches any word with that
/// prefix, a lone "*" matches exactly one arbitrary word.
struct Pattern {
  enum class Kind { Literal, Prefix, AnyWord };
  struct Element {
    Kind kind;
    std::string text;
  };
  std::string source;
  std::size_t category = 0;
  std::vector<Element> elements;

  /// Matched word count at `words[pos]`, or 0 for no match.
  std::size_t match_at(const std::vector<std::string>& words, std::size_t pos) const;
};

class StressLexicon {
 public:
  /// Throws ConfigError for unknown categories or patterns without a
  /// literal anchor (those could match anything or nothing).
  void add(std::string_view category, std::string_view pattern);

  const std::vector<Pattern>& patterns() const { return patterns_; }

  /// Every category must have at least one pattern.
  void validate() const;

  static StressLexicon load(const std::filesystem::path& csv_path);

 private:
  std::vector<Pattern> patterns_;
};

struct StressCounts {
  std::string note_id;
  std::array<std::size_t, kCategoryCount> per_category{};
  std::size_t total = 0;
  std::array<double, kCategoryCount> normalized{};  // mentions per 1000 tokens
  bool operator==(const StressCounts&) const = default;
};

/// Lowercase, punctuation to spaces (hyphens between word characters
/// survive), split on whitespace.
std::vector<std::string> lexicon_words(std::string_view sentence);

/// Leftmost-longest, non-overlapping pattern matches within one sentence.
/// Ties in length go to the earlier lexicon entry.
std::array<std::size_t, kCategoryCount> match_sentence(std::string_view sentence,
                                                       const StressLexicon& lexicon);

/// Per-sentence counts summed over the note; normalized by metrics.word_count.
StressCounts match_note(const preprocess::CleanNote& note, std::string_view raw_text,
                        const StressLexicon& lexicon);

struct ProviderStress {
  std::size_t total_mentions = 0;
  std::array<double, kCategoryCount> mean_normalized{};
  std::size_t note_count = 0;
  bool operator==(const ProviderStress&) const = default;
};

std::map<std::string, ProviderStress> aggregate_provider_stress(
    const std::vector<StressCounts>& counts, const std::map<std::string, std::string>& provider_of);

}  // namespace burnout::stress
