#include "burnout/sentiment.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "burnout/text_io.hpp"

namespace burnout::sentiment {

const char* label_name(Label label) {
  switch (label) {
    case Label::Negative: return "negative";
    case Label::Neutral: return "neutral";
    case Label::Positive: return "positive";
  }
  return "neutral";
}

SentimentScore SentimentScore::from_probabilities(double p_neg, double p_neu, double p_pos) {
  SentimentScore s;
  s.p_neg = p_neg;
  s.p_neu = p_neu;
  s.p_pos = p_pos;
  if (p_neg >= p_neu && p_neg >= p_pos) {
    s.label = Label::Negative;
    s.confidence = p_neg;
  } else if (p_neu >= p_pos) {
    s.label = Label::Neutral;
    s.confidence = p_neu;
  } else {
    s.label = Label::Positive;
    s.confidence = p_pos;
  }
  return s;
}

void ScorerConfig::validate() const {
  if (!(tau_sent > 1.0 / 3.0 && tau_sent <= 1.0)) {
    throw ConfigError("sentiment.tau_sent must lie in (1/3, 1], got " + format_double(tau_sent));
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("sentiment.temperature must be positive, got " + format_double(temperature));
  }
}

ScorerConfig ScorerConfig::load(const std::filesystem::path& negative_cues,
                                const std::filesystem::path& positive_cues,
                                const std::map<std::string, std::string>& lemma_exceptions) {
  ScorerConfig config;
  const auto read = [&](const std::filesystem::path& path, std::set<std::string>& out) {
    for (const auto& line : read_lines(path)) {
      const std::string w = to_lower(trim(line));
      if (w.empty() || w.front() == '#') continue;
      out.insert(w);
      out.insert(preprocess::lemmatize(w, lemma_exceptions));
    }
  };
  read(negative_cues, config.negative_cues);
  read(positive_cues, config.positive_cues);
  return config;
}

SentimentScore score_sentence_baseline(const std::vector<std::string>& tokens,
                                       const ScorerConfig& config) {
  if (tokens.empty()) return SentimentScore::from_probabilities(0.0, 1.0, 0.0);
  std::size_t neg = 0;
  std::size_t pos = 0;
  for (const auto& t : tokens) {
    neg += config.negative_cues.count(t);
    pos += config.positive_cues.count(t);
  }
  const double len = static_cast<double>(tokens.size());
  const double z[3] = {static_cast<double>(neg) / len / config.temperature,
                       kNeutralLogit / config.temperature,
                       static_cast<double>(pos) / len / config.temperature};
  const double zmax = std::max({z[0], z[1], z[2]});
  const double e[3] = {std::exp(z[0] - zmax), std::exp(z[1] - zmax), std::exp(z[2] - zmax)};
  const double total = e[0] + e[1] + e[2];
  return SentimentScore::from_probabilities(e[0] / total, e[1] / total, e[2] / total);
}

NoteSentiment summarize_note(std::string note_id, std::vector<SentimentScore> scores,
                             double tau_sent) {
  NoteSentiment out;
  out.note_id = std::move(note_id);
  out.sentence_scores = std::move(scores);
  bool first = true;
  for (const auto& s : out.sentence_scores) {
    if (first || s.confidence > out.doc_confidence) {
      out.doc_confidence = s.confidence;
      out.doc_label = s.label;
      first = false;
    }
    if (s.label == Label::Negative && s.confidence >= tau_sent) ++out.high_conf_neg_sentences;
  }
  return out;
}

NoteSentiment score_note_baseline(const preprocess::CleanNote& note, const ScorerConfig& config) {
  std::vector<SentimentScore> scores;
  scores.reserve(note.sentences.size());
  for (const auto& sentence : note.sentences) {
    scores.push_back(score_sentence_baseline(sentence.tokens, config));
  }
  return summarize_note(note.note_id, std::move(scores), config.tau_sent);
}

ExternalScores parse_external_scores(std::string_view jsonl,
                                     const std::vector<preprocess::CleanNote>& notes,
                                     const ScorerConfig& config, Warnings* warnings) {
  std::map<std::string, const preprocess::CleanNote*> by_id;
  for (const auto& n : notes) by_id[n.note_id] = &n;

  ExternalScores result;
  std::map<std::string, std::map<std::size_t, SentimentScore>> rows;
  std::size_t line_no = 0;
  for (std::string line : split(jsonl, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto reject = [&](const std::string& why) {
      ++result.rejected_rows;
      warn(warnings, "scores line " + std::to_string(line_no) + ": " + why);
    };

    const auto obj = nlohmann::json::parse(t, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      reject("not a JSON object");
      continue;
    }
    const auto has_number = [&](const char* key) {
      return obj.contains(key) && obj[key].is_number();
    };
    if (!obj.contains("note_id") || !obj["note_id"].is_string() ||
        !obj.contains("sentence_index") || !obj["sentence_index"].is_number_integer() ||
        !has_number("p_neg") || !has_number("p_neu") || !has_number("p_pos")) {
      reject("missing or mistyped field");
      continue;
    }
    const std::string note_id = obj["note_id"].get<std::string>();
    const auto it = by_id.find(note_id);
    if (it == by_id.end()) {
      reject("unknown note_id '" + note_id + "'");
      continue;
    }
    const auto index = obj["sentence_index"].get<std::int64_t>();
    if (index < 0 || static_cast<std::size_t>(index) >= it->second->sentences.size()) {
      reject("sentence_index " + std::to_string(index) + " out of range for note '" + note_id + "'");
      continue;
    }
    double p[3] = {obj["p_neg"].get<double>(), obj["p_neu"].get<double>(),
                   obj["p_pos"].get<double>()};
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]) || p[0] < 0.0 ||
        p[1] < 0.0 || p[2] < 0.0) {
      reject("negative or non-finite probability");
      continue;
    }
    const double sum = p[0] + p[1] + p[2];
    if (sum <= 0.0) {
      reject("probabilities sum to zero");
      continue;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      warn(warnings, "scores line " + std::to_string(line_no) + ": probabilities sum to " +
                         format_double(sum) + ", renormalized");
      for (double& x : p) x /= sum;
    }
    auto& note_rows = rows[note_id];
    if (note_rows.count(static_cast<std::size_t>(index)) > 0) {
      reject("duplicate row for note '" + note_id + "' sentence " + std::to_string(index));
      continue;
    }
    note_rows.emplace(static_cast<std::size_t>(index),
                      SentimentScore::from_probabilities(p[0], p[1], p[2]));
  }

  for (const auto& note : notes) {
    const auto it = rows.find(note.note_id);
    if (it == rows.end()) {
      ++result.fallback_notes;
      warn(warnings, "note '" + note.note_id + "' absent from score file, baseline scorer used");
      result.notes.emplace(note.note_id, score_note_baseline(note, config));
      continue;
    }
    std::vector<SentimentScore> scores;
    scores.reserve(note.sentences.size());
    for (const auto& sentence : note.sentences) {
      const auto found = it->second.find(sentence.index);
      if (found != it->second.end()) {
        scores.push_back(found->second);
      } else {
        warn(warnings, "note '" + note.note_id + "' sentence " + std::to_string(sentence.index) +
                           " absent from score file, baseline scorer used");
        scores.push_back(score_sentence_baseline(sentence.tokens, config));
      }
    }
    result.notes.emplace(note.note_id, summarize_note(note.note_id, std::move(scores), config.tau_sent));
  }
  return result;
}

ExternalScores load_external_scores(const std::filesystem::path& path,
                                    const std::vector<preprocess::CleanNote>& notes,
                                    const ScorerConfig& config, Warnings* warnings) {
  return parse_external_scores(read_file(path), notes, config, warnings);
}

bool is_high_severity(const NoteSentiment& note, double tau_sent) {
  return note.doc_label == Label::Negative && note.doc_confidence >= tau_sent;
}

std::map<std::string, ProviderSentiment> aggregate_provider_sentiment(
    const std::vector<NoteSentiment>& notes, const std::map<std::string, std::string>& provider_of,
    double tau_sent) {
  std::map<std::string, std::vector<const NoteSentiment*>> grouped;
  for (const auto& note : notes) {
    const auto it = provider_of.find(note.note_id);
    if (it == provider_of.end()) throw DataError("note '" + note.note_id + "' has no provider");
    grouped[it->second].push_back(&note);
  }
  std::map<std::string, ProviderSentiment> out;
  for (auto& [provider, group] : grouped) {
    // Fold in note_id order so the floating-point sum is input-order independent.
    std::sort(group.begin(), group.end(),
              [](const NoteSentiment* a, const NoteSentiment* b) { return a->note_id < b->note_id; });
    ProviderSentiment ps;
    double sum = 0.0;
    std::size_t negative = 0;
    for (const NoteSentiment* n : group) {
      sum += n->doc_confidence;
      negative += n->doc_label == Label::Negative ? 1 : 0;
      ps.total_high_conf_neg_sentences += n->high_conf_neg_sentences;
      ps.high_severity_notes += is_high_severity(*n, tau_sent) ? 1 : 0;
    }
    ps.note_count = group.size();
    ps.mean_doc_confidence = sum / static_cast<double>(group.size());
    ps.neg_note_fraction = static_cast<double>(negative) / static_cast<double>(group.size());
    out.emplace(provider, ps);
  }
  return out;
}

Distribution corpus_sentiment_distribution(const std::vector<NoteSentiment>& notes) {
  if (notes.empty()) throw DataError("sentiment distribution of an empty corpus");
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& n : notes) ++counts[static_cast<int>(n.doc_label)];
  const double total = static_cast<double>(notes.size());
  Distribution d;
  d.negative = static_cast<double>(counts[0]) / total;
  d.neutral = static_cast<double>(counts[1]) / total;
  d.positive = static_cast<double>(counts[2]) / total;
  return d;
}

}  // namespace burnout::sentiment
