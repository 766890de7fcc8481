#include <gtest/gtest.h>

#include <algorithm>

#include "burnout/errors.hpp"
#include "burnout/preprocess.hpp"
#include "burnout/rng.hpp"
#include "burnout/stress_lexicon.hpp"
#include "test_util.hpp"

using namespace burnout;
using namespace burnout::stress;

namespace {

const StressLexicon& shipped() {
  static const StressLexicon lexicon = StressLexicon::load(burnout::testing::data_dir() / "stress_lexicon.csv");
  return lexicon;
}

const preprocess::PreprocessConfig& pp() {
  static const auto config = preprocess::PreprocessConfig::load(burnout::testing::data_dir());
  return config;
}

std::size_t category(const std::string& name) {
  const auto& names = category_names();
  return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
}

StressCounts match_text(const std::string& text) {
  return match_note(preprocess::clean_note("n", text, pp()), text, shipped());
}

std::size_t match_text_with(const StressLexicon& lex, const std::string& text) {
  return match_note(preprocess::clean_note("n", text, pp()), text, lex).total;
}

}  // namespace

TEST(StressLexicon, ShippedFileHasSevenCategories) {
  std::set<std::size_t> seen;
  for (const auto& p : shipped().patterns()) seen.insert(p.category);
  EXPECT_EQ(seen.size(), kCategoryCount);
  EXPECT_NO_THROW(shipped().validate());
}

TEST(StressLexicon, BadPatternsRejected) {
  StressLexicon lex;
  EXPECT_THROW(lex.add("long_hours", ""), ConfigError);
  EXPECT_THROW(lex.add("long_hours", "   "), ConfigError);
  EXPECT_THROW(lex.add("not_a_category", "overtime"), ConfigError);
  lex.add("long_hours", "overtime");
  EXPECT_THROW(lex.validate(), ConfigError);  // other categories empty
}

TEST(MatchNote, TwoLiteralHits) {
  const auto c = match_text("worked overtime again. overtime noted.");
  EXPECT_EQ(c.per_category[category("long_hours")], 2u);
  EXPECT_EQ(c.total, 2u);
}

TEST(MatchNote, EmptyText) {
  const auto c = match_text("");
  EXPECT_EQ(c.total, 0u);
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    EXPECT_EQ(c.per_category[i], 0u);
    EXPECT_EQ(c.normalized[i], 0.0);
  }
}

TEST(MatchNote, HyphenatedPhraseAndNormalization) {
  const std::string text = "short-staffed unit; documentation backlog";
  auto note = preprocess::clean_note("n", text, pp());
  note.metrics.word_count = 8;
  const auto c = match_note(note, text, shipped());
  EXPECT_EQ(c.per_category[category("staffing_shortage")], 1u);
  EXPECT_EQ(c.per_category[category("documentation_burden")], 1u);
  EXPECT_DOUBLE_EQ(c.normalized[category("staffing_shortage")], 125.0);
  EXPECT_DOUBLE_EQ(c.normalized[category("documentation_burden")], 125.0);
}

TEST(MatchSentence, LeftmostLongestNonOverlapping) {
  StressLexicon lex;
  lex.add("long_hours", "double shift");
  lex.add("workload_pressure", "shift");
  lex.add("sleep_deprivation", "double shift night");
  // The longest match starting at "double" wins; "shift" inside it is consumed.
  auto c = match_sentence("double shift night again", lex);
  EXPECT_EQ(c[category("sleep_deprivation")], 1u);
  EXPECT_EQ(c[category("long_hours")], 0u);
  EXPECT_EQ(c[category("workload_pressure")], 0u);
  c = match_sentence("double shift then shift", lex);
  EXPECT_EQ(c[category("long_hours")], 1u);
  EXPECT_EQ(c[category("workload_pressure")], 1u);
}

TEST(MatchSentence, WildcardsAndCase) {
  StressLexicon lex;
  lex.add("staffing_shortage", "short * staff");
  lex.add("sleep_deprivation", "sleep-depriv*");
  EXPECT_EQ(match_sentence("We were SHORT of staff", lex)[category("staffing_shortage")], 1u);
  EXPECT_EQ(match_sentence("short staff", lex)[category("staffing_shortage")], 0u);
  EXPECT_EQ(match_sentence("Sleep-deprived, again", lex)[category("sleep_deprivation")], 1u);
}

TEST(MatchNote, NoMatchAcrossSentenceBoundary) {
  StressLexicon lex;
  lex.add("long_hours", "long hours");
  EXPECT_EQ(match_text_with(lex, "It was long. Hours passed."), 0u);
}

TEST(MatchNote, DoublingTextDoublesCounts) {
  for (const std::string text :
       {"Worked overtime again. Short-staffed unit; documentation backlog.",
        "I feel exhausted after a double shift. Charting backlog is huge. No beds available."}) {
    const auto once = match_text(text);
    const auto twice = match_text(text + " " + text);
    for (std::size_t i = 0; i < kCategoryCount; ++i) {
      EXPECT_EQ(twice.per_category[i], 2 * once.per_category[i]);
      EXPECT_DOUBLE_EQ(twice.normalized[i], once.normalized[i]);
    }
    EXPECT_GT(once.total, 0u);
  }
}

TEST(ProviderStress, Examples) {
  StressCounts a, b;
  a.note_id = "a";
  a.total = 3;
  a.per_category[0] = 3;
  a.normalized[0] = 30.0;
  b.note_id = "b";
  b.total = 4;
  b.per_category[1] = 4;
  b.normalized[1] = 40.0;
  const auto agg = aggregate_provider_stress({a, b}, {{"a", "P"}, {"b", "P"}});
  EXPECT_EQ(agg.at("P").total_mentions, 7u);
  EXPECT_DOUBLE_EQ(agg.at("P").mean_normalized[0], 15.0);
  EXPECT_DOUBLE_EQ(agg.at("P").mean_normalized[1], 20.0);

  const auto single = aggregate_provider_stress({a}, {{"a", "P"}});
  EXPECT_EQ(single.at("P").mean_normalized, a.normalized);

  StressCounts zero;
  zero.note_id = "z";
  const auto zeros = aggregate_provider_stress({zero, zero}, {{"z", "Z"}});
  EXPECT_EQ(zeros.at("Z").total_mentions, 0u);
  for (double v : zeros.at("Z").mean_normalized) EXPECT_EQ(v, 0.0);
}

TEST(ProviderStress, OrderIndependent) {
  Rng rng(4);
  std::vector<StressCounts> counts;
  std::map<std::string, std::string> provider_of;
  for (int i = 0; i < 60; ++i) {
    StressCounts c;
    c.note_id = "n" + std::to_string(i);
    for (std::size_t k = 0; k < kCategoryCount; ++k) {
      c.per_category[k] = rng.index(4);
      c.total += c.per_category[k];
      c.normalized[k] = static_cast<double>(c.per_category[k]) * 1000.0 / 37.0;
    }
    provider_of[c.note_id] = "P" + std::to_string(rng.index(5));
    counts.push_back(c);
  }
  const auto forward = aggregate_provider_stress(counts, provider_of);
  std::reverse(counts.begin(), counts.end());
  EXPECT_EQ(aggregate_provider_stress(counts, provider_of), forward);
}
