#include "burnout/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "burnout/errors.hpp"
#include "burnout/text_io.hpp"

namespace burnout::preprocess {

namespace {

constexpr std::array<std::string_view, 8> kAbbreviations = {"dr.", "mr.",  "mrs.", "vs.",
                                                            "e.g.", "i.e.", "mg.", "ml."};

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Whether the '.' at `pos` belongs to one of the non-terminating abbreviations.
bool abbreviation_period(std::string_view text, std::size_t pos) {
  std::size_t start = pos;
  while (start > 0 && (is_alpha(text[start - 1]) || text[start - 1] == '.')) --start;
  for (std::string_view abbr : kAbbreviations) {
    // The abbreviation may begin at any '.'-separated piece inside the run.
    for (std::size_t s = start; s <= pos; ++s) {
      if (s != start && text[s - 1] != '.') continue;
      if (s + abbr.size() > text.size() || pos >= s + abbr.size()) continue;
      bool match = true;
      for (std::size_t i = 0; i < abbr.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[s + i])) != abbr[i]) {
          match = false;
          break;
        }
      }
      if (!match) continue;
      const std::size_t after = s + abbr.size();
      if (after < text.size() && is_alpha(text[after])) continue;
      return true;
    }
  }
  return false;
}

std::set<std::string> read_word_set(const std::filesystem::path& path) {
  std::set<std::string> words;
  for (const auto& line : read_lines(path)) {
    const std::string w = to_lower(trim(line));
    if (!w.empty() && w.front() != '#') words.insert(w);
  }
  return words;
}

// Underscore runs of 3+ and "[** ... **]" spans are replaced by spaces so
// they can never produce tokens or join neighbouring words.
std::string strip_placeholders(std::string_view text) {
  std::string out(text);
  std::size_t pos = 0;
  while ((pos = out.find("[**", pos)) != std::string::npos) {
    const std::size_t close = out.find("**]", pos + 3);
    if (close == std::string::npos) break;
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(pos),
              out.begin() + static_cast<std::ptrdiff_t>(close + 3), ' ');
    pos = close + 3;
  }
  for (std::size_t i = 0; i < out.size();) {
    if (out[i] != '_') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < out.size() && out[j] == '_') ++j;
    if (j - i >= 3) std::fill(out.begin() + static_cast<std::ptrdiff_t>(i),
                              out.begin() + static_cast<std::ptrdiff_t>(j), ' ');
    i = j;
  }
  return out;
}

}  // namespace

PreprocessConfig PreprocessConfig::load(const std::filesystem::path& data_dir) {
  return load(data_dir / "stopwords.txt", data_dir / "lemma_exceptions.csv",
              data_dir / "outcome_terms.txt");
}

PreprocessConfig PreprocessConfig::load(const std::filesystem::path& stopwords,
                                        const std::filesystem::path& lemma_exceptions,
                                        const std::filesystem::path& outcome_terms) {
  PreprocessConfig config;
  config.stopwords = read_word_set(stopwords);
  config.outcome_terms = read_word_set(outcome_terms);
  const CsvTable table = read_csv(lemma_exceptions);
  const auto form = table.column("form");
  const auto lemma = table.column("lemma");
  if (!form || !lemma) {
    throw ConfigError(lemma_exceptions.string() + ": expected header form,lemma");
  }
  for (const auto& [line, row] : table.rows) {
    if (row.size() != table.header.size() || row[*form].empty() || row[*lemma].empty()) {
      throw ConfigError(lemma_exceptions.string() + ":" + std::to_string(line) + ": bad row");
    }
    config.lemma_exceptions[to_lower(row[*form])] = to_lower(row[*lemma]);
  }
  return config;
}

const std::set<std::string>& first_person_pronouns() {
  static const std::set<std::string> words = {"i",  "me",  "my",   "mine", "myself",
                                              "we", "us",  "our",  "ours", "ourselves"};
  return words;
}

const std::set<std::string>& third_person_pronouns() {
  static const std::set<std::string> words = {
      "he",   "him",  "his",   "himself", "she",    "her",        "hers", "herself",
      "they", "them", "their", "theirs",  "themselves", "it",       "its",  "itself"};
  return words;
}

std::vector<Span> split_sentences(std::string_view text) {
  std::vector<Span> spans;
  const auto emit = [&](std::size_t begin, std::size_t end) {
    while (begin < end && is_space(text[begin])) ++begin;
    while (end > begin && is_space(text[end - 1])) --end;
    if (end > begin) spans.push_back(Span{begin, end});
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      emit(start, i);
      while (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      start = i + 1;
    } else if (c == '!' || c == '?' || (c == '.' && !abbreviation_period(text, i))) {
      emit(start, i + 1);
      start = i + 1;
    }
  }
  emit(start, text.size());
  return spans;
}

std::vector<std::string> raw_tokens(std::string_view text) {
  const std::string cleaned = to_lower(strip_placeholders(text));
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    if (!is_alnum(cleaned[i])) {
      ++i;
      continue;
    }
    const bool digits = is_digit(cleaned[i]);
    std::size_t j = i;
    while (j < cleaned.size() && is_alnum(cleaned[j]) && is_digit(cleaned[j]) == digits) ++j;
    if (digits) {
      tokens.emplace_back(kNumberToken);
    } else {
      tokens.emplace_back(cleaned.substr(i, j - i));
    }
    i = j;
  }
  return tokens;
}

std::string lemmatize(std::string_view token, const std::map<std::string, std::string>& exceptions) {
  const std::string word(token);
  if (const auto it = exceptions.find(word); it != exceptions.end()) return it->second;
  const std::size_t n = word.size();
  if (ends_with(word, "ies") && n > 3) return word.substr(0, n - 3) + "y";
  if (ends_with(word, "sses")) return word.substr(0, n - 2);
  if (ends_with(word, "s") && !ends_with(word, "ss") && !ends_with(word, "us") && n > 1) {
    return word.substr(0, n - 1);
  }
  if (ends_with(word, "ing") && n - 3 >= 3) return word.substr(0, n - 3);
  if (ends_with(word, "ed")) {
    const std::string stem = word.substr(0, n - 2);
    // Stems that need their silent 'e' back ("received" -> "receive") drop only the 'd'.
    if (!stem.empty() && std::string_view("vczu").find(stem.back()) != std::string_view::npos &&
        n - 1 >= 3) {
      return word.substr(0, n - 1);
    }
    if (stem.size() >= 3) return stem;
  }
  return word;
}

std::vector<std::string> normalize_tokens(std::string_view sentence, const PreprocessConfig& config) {
  std::vector<std::string> out;
  for (std::string& token : raw_tokens(sentence)) {
    if (token == kNumberToken) {
      out.push_back(std::move(token));
      continue;
    }
    if (config.remove_outcome_terms && config.outcome_terms.count(token) > 0) continue;
    if (config.stopwords.count(token) > 0) continue;
    std::string lemma = lemmatize(token, config.lemma_exceptions);
    // A lemma can collide with a filtered word ("wills" -> "will").
    if (config.stopwords.count(lemma) > 0) continue;
    if (config.remove_outcome_terms && config.outcome_terms.count(lemma) > 0) continue;
    out.push_back(std::move(lemma));
  }
  return out;
}

LinguisticMetrics compute_metrics(const CleanNote& note, std::string_view raw_text) {
  LinguisticMetrics m;
  const std::vector<std::string> words = raw_tokens(raw_text);
  m.word_count = words.size();
  m.sentence_count = split_sentences(raw_text).size();
  if (!words.empty()) {
    std::size_t first = 0;
    std::size_t third = 0;
    for (const auto& w : words) {
      first += first_person_pronouns().count(w);
      third += third_person_pronouns().count(w);
    }
    m.first_person_freq = static_cast<double>(first) / static_cast<double>(words.size());
    m.third_person_freq = static_cast<double>(third) / static_cast<double>(words.size());
  }
  const auto& tokens = note.all_tokens;
  if (!tokens.empty()) {
    const std::set<std::string> distinct(tokens.begin(), tokens.end());
    m.type_token_ratio = static_cast<double>(distinct.size()) / static_cast<double>(tokens.size());
  }
  std::size_t chars = 0;
  std::size_t counted = 0;
  for (const auto& t : tokens) {
    if (t == kNumberToken) continue;
    chars += t.size();
    ++counted;
  }
  if (counted > 0) m.avg_token_length = static_cast<double>(chars) / static_cast<double>(counted);
  return m;
}

CleanNote clean_note(std::string note_id, std::string_view text, const PreprocessConfig& config) {
  CleanNote note;
  note.note_id = std::move(note_id);
  for (const Span& span : split_sentences(text)) {
    auto tokens = normalize_tokens(text.substr(span.begin, span.end - span.begin), config);
    if (tokens.empty()) continue;
    note.all_tokens.insert(note.all_tokens.end(), tokens.begin(), tokens.end());
    note.sentences.push_back(Sentence{note.sentences.size(), std::move(tokens), span});
  }
  note.metrics = compute_metrics(note, text);
  return note;
}

}  // namespace burnout::preprocess
