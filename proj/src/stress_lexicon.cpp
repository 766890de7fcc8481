#include "burnout/stress_lexicon.hpp"

#include <algorithm>
#include <cctype>

#include "burnout/errors.hpp"
#include "burnout/text_io.hpp"

namespace burnout::stress {

const std::array<std::string, kCategoryCount>& category_names() {
  static const std::array<std::string, kCategoryCount> names = {
      "long_hours",        "staffing_shortage", "documentation_burden", "emotional_strain",
      "workload_pressure", "sleep_deprivation", "resource_constraints"};
  return names;
}

std::size_t Pattern::match_at(const std::vector<std::string>& words, std::size_t pos) const {
  if (pos + elements.size() > words.size()) return 0;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string& w = words[pos + i];
    const Element& e = elements[i];
    switch (e.kind) {
      case Kind::Literal:
        if (w != e.text) return 0;
        break;
      case Kind::Prefix:
        if (w.compare(0, e.text.size(), e.text) != 0) return 0;
        break;
      case Kind::AnyWord:
        break;
    }
  }
  return elements.size();
}

void StressLexicon::add(std::string_view category, std::string_view pattern) {
  const auto& names = category_names();
  const std::string cat = trim(category);
  const auto it = std::find(names.begin(), names.end(), cat);
  if (it == names.end()) throw ConfigError("stress lexicon: unknown category '" + cat + "'");

  Pattern p;
  p.source = trim(pattern);
  p.category = static_cast<std::size_t>(it - names.begin());
  bool anchored = false;
  // Split the pattern on whitespace; '*' is significant here so the raw
  // text is split rather than run through lexicon_words.
  for (const std::string& raw : split(to_lower(p.source), ' ')) {
    if (raw.empty()) continue;
    if (raw == "*") {
      p.elements.push_back({Pattern::Kind::AnyWord, ""});
      continue;
    }
    const bool prefix = raw.back() == '*';
    const std::string body = prefix ? raw.substr(0, raw.size() - 1) : raw;
    if (body.empty() || body.find('*') != std::string::npos) {
      throw ConfigError("stress lexicon: bad wildcard in pattern '" + p.source + "'");
    }
    const auto words = lexicon_words(body);
    if (words.size() != 1 || words.front() != body) {
      throw ConfigError("stress lexicon: pattern '" + p.source +
                        "' contains characters removed by normalization");
    }
    p.elements.push_back({prefix ? Pattern::Kind::Prefix : Pattern::Kind::Literal, body});
    anchored = true;
  }
  if (!anchored) throw ConfigError("stress lexicon: pattern '" + p.source + "' has no literal word");
  patterns_.push_back(std::move(p));
}

void StressLexicon::validate() const {
  std::array<bool, kCategoryCount> seen{};
  for (const auto& p : patterns_) seen[p.category] = true;
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    if (!seen[c]) throw ConfigError("stress lexicon: category '" + category_names()[c] + "' is empty");
  }
}

StressLexicon StressLexicon::load(const std::filesystem::path& csv_path) {
  const CsvTable table = read_csv(csv_path);
  const auto cat = table.column("category");
  const auto pat = table.column("pattern");
  if (!cat || !pat) throw ConfigError(csv_path.string() + ": expected header category,pattern");
  StressLexicon lexicon;
  for (const auto& [line, row] : table.rows) {
    if (row.size() != table.header.size()) {
      throw ConfigError(csv_path.string() + ":" + std::to_string(line) + ": wrong field count");
    }
    lexicon.add(row[*cat], row[*pat]);
  }
  lexicon.validate();
  return lexicon;
}

std::vector<std::string> lexicon_words(std::string_view sentence) {
  const auto word_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  std::string text = to_lower(sentence);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (word_char(c)) continue;
    const bool inner_hyphen = c == '-' && i > 0 && i + 1 < text.size() && word_char(text[i - 1]) &&
                              word_char(text[i + 1]);
    if (!inner_hyphen) text[i] = ' ';
  }
  std::vector<std::string> words;
  for (std::string& w : split(text, ' ')) {
    if (!w.empty()) words.push_back(std::move(w));
  }
  return words;
}

std::array<std::size_t, kCategoryCount> match_sentence(std::string_view sentence,
                                                       const StressLexicon& lexicon) {
  std::array<std::size_t, kCategoryCount> counts{};
  const auto words = lexicon_words(sentence);
  std::size_t pos = 0;
  while (pos < words.size()) {
    std::size_t best_len = 0;
    std::size_t best_cat = 0;
    for (const auto& p : lexicon.patterns()) {
      const std::size_t len = p.match_at(words, pos);
      if (len > best_len) {
        best_len = len;
        best_cat = p.category;
      }
    }
    if (best_len == 0) {
      ++pos;
    } else {
      ++counts[best_cat];
      pos += best_len;
    }
  }
  return counts;
}

StressCounts match_note(const preprocess::CleanNote& note, std::string_view raw_text,
                        const StressLexicon& lexicon) {
  StressCounts out;
  out.note_id = note.note_id;
  for (const auto& sentence : note.sentences) {
    const auto span = sentence.raw_span;
    const auto counts = match_sentence(raw_text.substr(span.begin, span.end - span.begin), lexicon);
    for (std::size_t c = 0; c < kCategoryCount; ++c) out.per_category[c] += counts[c];
  }
  const double tokens = static_cast<double>(note.metrics.word_count);
  for (std::size_t c = 0; c < kCategoryCount; ++c) {
    out.total += out.per_category[c];
    out.normalized[c] = tokens > 0.0 ? 1000.0 * static_cast<double>(out.per_category[c]) / tokens : 0.0;
  }
  return out;
}

std::map<std::string, ProviderStress> aggregate_provider_stress(
    const std::vector<StressCounts>& counts, const std::map<std::string, std::string>& provider_of) {
  std::map<std::string, std::vector<const StressCounts*>> grouped;
  for (const auto& c : counts) {
    const auto it = provider_of.find(c.note_id);
    if (it == provider_of.end()) throw DataError("note '" + c.note_id + "' has no provider");
    grouped[it->second].push_back(&c);
  }
  std::map<std::string, ProviderStress> out;
  for (auto& [provider, group] : grouped) {
    std::sort(group.begin(), group.end(),
              [](const StressCounts* a, const StressCounts* b) { return a->note_id < b->note_id; });
    ProviderStress ps;
    ps.note_count = group.size();
    for (const StressCounts* c : group) {
      ps.total_mentions += c->total;
      for (std::size_t k = 0; k < kCategoryCount; ++k) ps.mean_normalized[k] += c->normalized[k];
    }
    for (double& v : ps.mean_normalized) v /= static_cast<double>(group.size());
    out.emplace(provider, ps);
  }
  return out;
}

}  // namespace burnout::stress
