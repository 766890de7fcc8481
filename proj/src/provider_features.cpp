#include "burnout/provider_features.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "burnout/text_io.hpp"

namespace burnout::features {

std::vector<std::string> feature_names(int topic_count) {
  std::vector<std::string> names = {"note_count",           "mean_doc_confidence",
                                    "neg_note_fraction",    "high_conf_neg_sentences",
                                    "high_severity_notes",  "stress_total_mentions"};
  for (const auto& c : stress::category_names()) names.push_back("stress_" + c);
  for (int k = 0; k < topic_count; ++k) names.push_back("topic_" + std::to_string(k));
  for (const char* n : {"lab_order_count", "procedure_count", "admission_count", "mortality_count",
                        "mortality_rate", "los_mean_days", "los_median_days", "workload_missing",
                        "word_count", "sentence_count", "avg_token_length", "type_token_ratio",
                        "first_person_freq", "third_person_freq"}) {
    names.emplace_back(n);
  }
  return names;
}

const std::vector<std::string>& label_input_features() {
  static const std::vector<std::string> names = {"high_conf_neg_sentences", "high_severity_notes",
                                                 "stress_total_mentions"};
  return names;
}

std::vector<std::string> classifier_feature_names(int topic_count, bool include_label_inputs) {
  std::vector<std::string> names = feature_names(topic_count);
  if (!include_label_inputs) {
    const auto& drop = label_input_features();
    names.erase(std::remove_if(names.begin(), names.end(),
                               [&](const std::string& n) {
                                 return std::find(drop.begin(), drop.end(), n) != drop.end();
                               }),
                names.end());
  }
  return names;
}

Eigen::VectorXd feature_vector(const ProviderProfile& p) {
  std::vector<double> v = {static_cast<double>(p.note_count),
                           p.sentiment.mean_doc_confidence,
                           p.sentiment.neg_note_fraction,
                           static_cast<double>(p.sentiment.total_high_conf_neg_sentences),
                           static_cast<double>(p.sentiment.high_severity_notes),
                           static_cast<double>(p.stress.total_mentions)};
  for (double x : p.stress.mean_normalized) v.push_back(x);
  for (Eigen::Index k = 0; k < p.topic_weights.size(); ++k) v.push_back(p.topic_weights(k));
  const auto& w = p.workload;
  for (double x : {static_cast<double>(w.lab_order_count), static_cast<double>(w.procedure_count),
                   static_cast<double>(w.admission_count), static_cast<double>(w.mortality_count),
                   w.mortality_rate, w.los_mean_days, w.los_median_days,
                   p.workload_missing ? 1.0 : 0.0}) {
    v.push_back(x);
  }
  const auto& l = p.linguistic;
  for (double x : {l.word_count, l.sentence_count, l.avg_token_length, l.type_token_ratio,
                   l.first_person_freq, l.third_person_freq}) {
    v.push_back(x);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

namespace {

std::vector<Eigen::Index> column_indices(const std::vector<std::string>& all,
                                         const std::vector<std::string>& subset) {
  std::vector<Eigen::Index> idx;
  for (const auto& name : subset) {
    const auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw ConfigError("unknown feature '" + name + "'");
    idx.push_back(static_cast<Eigen::Index>(it - all.begin()));
  }
  return idx;
}

}  // namespace

Eigen::MatrixXd feature_matrix(const std::vector<ProviderProfile>& profiles,
                               const std::vector<std::string>& names) {
  const int k = profiles.empty() ? 0 : static_cast<int>(profiles.front().topic_weights.size());
  const auto idx = column_indices(feature_names(k), names);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(profiles.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const Eigen::VectorXd v = feature_vector(profiles[i]);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v(idx[j]);
    }
  }
  return m;
}

FuseResult fuse(const FuseInputs& inputs, Warnings* warnings) {
  std::map<std::string, std::vector<const NoteRecord*>> by_provider;
  for (const auto& n : inputs.notes) by_provider[n.provider_id].push_back(&n);
  std::map<std::string, const topics::ProviderTopicProfile*> topic_of;
  for (const auto& t : inputs.topics) topic_of[t.provider_id] = &t;

  FuseResult result;
  for (auto& [provider, notes] : by_provider) {
    std::sort(notes.begin(), notes.end(),
              [](const NoteRecord* a, const NoteRecord* b) { return a->note_id < b->note_id; });
    ProviderProfile p;
    p.provider_id = provider;
    p.note_count = notes.size();

    std::map<std::string, std::size_t> specialty_counts;
    for (const NoteRecord* n : notes) ++specialty_counts[n->specialty];
    std::size_t best = 0;
    for (const auto& [name, count] : specialty_counts) {
      if (count > best) {  // map order: alphabetical first on ties
        best = count;
        p.specialty = name;
      }
    }

    if (auto it = inputs.sentiment.find(provider); it != inputs.sentiment.end()) {
      p.sentiment = it->second;
    } else {
      warn(warnings, "provider '" + provider + "' has no sentiment aggregate");
    }
    if (auto it = inputs.stress.find(provider); it != inputs.stress.end()) {
      p.stress = it->second;
    } else {
      warn(warnings, "provider '" + provider + "' has no stress aggregate");
    }
    if (auto it = topic_of.find(provider); it != topic_of.end()) {
      p.topic_weights = it->second->mean_theta;
    } else {
      p.topic_weights = Eigen::VectorXd::Constant(inputs.topic_count, 1.0 / inputs.topic_count);
    }
    if (p.topic_weights.size() != inputs.topic_count) {
      throw DataError("provider '" + provider + "' topic profile has the wrong length");
    }
    p.top2 = topics::top_two(p.topic_weights);

    if (auto it = inputs.workload.find(provider); it != inputs.workload.end()) {
      p.workload = it->second;
    } else {
      p.workload.provider_id = provider;
      p.workload_missing = true;
    }

    auto& l = p.linguistic;
    for (const NoteRecord* n : notes) {
      l.word_count += static_cast<double>(n->metrics.word_count);
      l.sentence_count += static_cast<double>(n->metrics.sentence_count);
      l.avg_token_length += n->metrics.avg_token_length;
      l.type_token_ratio += n->metrics.type_token_ratio;
      l.first_person_freq += n->metrics.first_person_freq;
      l.third_person_freq += n->metrics.third_person_freq;
    }
    const double count = static_cast<double>(notes.size());
    for (double* x : {&l.word_count, &l.sentence_count, &l.avg_token_length, &l.type_token_ratio,
                      &l.first_person_freq, &l.third_person_freq}) {
      *x /= count;
    }
    result.profiles.push_back(std::move(p));
  }

  for (const auto& [provider, record] : inputs.workload) {
    if (by_provider.count(provider) == 0) result.workload_only.push_back(provider);
  }
  if (!result.workload_only.empty()) {
    warn(warnings, std::to_string(result.workload_only.size()) +
                       " provider(s) have workload rows but no notes; excluded");
  }
  return result;
}

bool silver_label(const ProviderProfile& profile, const LabelRule& rule) {
  const std::size_t negatives = rule.unit == LabelUnit::Sentences
                                    ? profile.sentiment.total_high_conf_neg_sentences
                                    : profile.sentiment.high_severity_notes;
  return negatives >= rule.t_sentences && profile.stress.total_mentions >= rule.t_mentions;
}

LabelSummary label_corpus(std::vector<ProviderProfile>& profiles, const LabelRule& rule) {
  if (profiles.empty()) throw DataError("cannot label an empty provider list");
  LabelSummary summary;
  for (auto& p : profiles) {
    p.silver_label = silver_label(p, rule);
    if (p.silver_label) summary.flagged.push_back(p.provider_id);
  }
  summary.flag_rate = static_cast<double>(summary.flagged.size()) / static_cast<double>(profiles.size());
  return summary;
}

MbiMapping MbiMapping::default_mapping() {
  MbiMapping m;
  m.dimensions = {
      {"Emotional Exhaustion", {"neg_note_fraction", "first_person_freq"}},
      {"Depersonalization", {"stress_total_mentions", "word_count"}},
      {"Reduced Personal Accomplishment", {std::string(kFlaggedTopicsToken), "type_token_ratio"}},
  };
  return m;
}

MbiMapping resolve_mapping(const MbiMapping& mapping, const std::vector<ProviderProfile>& profiles,
                           int topic_count) {
  const auto schema = feature_names(topic_count);
  MbiMapping out;
  std::set<std::string> used;
  for (const auto& [dimension, names] : mapping.dimensions) {
    std::vector<std::string> resolved;
    for (const auto& name : names) {
      if (name == kFlaggedTopicsToken) {
        // Mean topic weights over flagged providers (all providers if none are flagged).
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(topic_count);
        std::size_t n = 0;
        const bool any_flagged = std::any_of(profiles.begin(), profiles.end(),
                                             [](const ProviderProfile& p) { return p.silver_label; });
        for (const auto& p : profiles) {
          if (any_flagged && !p.silver_label) continue;
          mean += p.topic_weights;
          ++n;
        }
        if (n > 0) mean /= static_cast<double>(n);
        for (const auto& [k, w] : topics::top_two(mean)) resolved.push_back("topic_" + std::to_string(k));
        continue;
      }
      if (std::find(schema.begin(), schema.end(), name) == schema.end()) {
        throw ConfigError("mbi_mapping: unknown feature '" + name + "' in dimension '" + dimension + "'");
      }
      resolved.push_back(name);
    }
    for (const auto& name : resolved) {
      if (!used.insert(name).second) {
        throw ConfigError("mbi_mapping: feature '" + name + "' appears in more than one dimension");
      }
    }
    out.dimensions.emplace_back(dimension, std::move(resolved));
  }
  return out;
}

MbiReport mbi_report(const std::vector<ProviderProfile>& profiles, const MbiMapping& mapping,
                     int topic_count) {
  MbiReport report;
  report.mapping = resolve_mapping(mapping, profiles, topic_count);
  const auto schema = feature_names(topic_count);

  for (const auto& [dimension, names] : report.mapping.dimensions) {
    const auto idx = column_indices(schema, names);
    for (std::size_t j = 0; j < names.size(); ++j) {
      MbiSummaryRow row{dimension, names[j], 0.0, 0.0, 0.0};
      std::size_t flagged = 0;
      for (const auto& p : profiles) {
        const double v = feature_vector(p)(idx[j]);
        row.mean_all += v;
        if (p.silver_label) {
          row.mean_flagged += v;
          ++flagged;
        } else {
          row.mean_unflagged += v;
        }
      }
      const std::size_t unflagged = profiles.size() - flagged;
      if (!profiles.empty()) row.mean_all /= static_cast<double>(profiles.size());
      if (flagged > 0) row.mean_flagged /= static_cast<double>(flagged);
      if (unflagged > 0) row.mean_unflagged /= static_cast<double>(unflagged);
      report.summary.push_back(row);
    }
  }
  for (const auto& p : profiles) {
    const Eigen::VectorXd v = feature_vector(p);
    auto& dims = report.provider_values[p.provider_id];
    for (const auto& [dimension, names] : report.mapping.dimensions) {
      std::vector<double> values;
      for (Eigen::Index i : column_indices(schema, names)) values.push_back(v(i));
      dims.push_back(std::move(values));
    }
  }
  return report;
}

std::string profiles_csv(const std::vector<ProviderProfile>& profiles, int topic_count) {
  std::ostringstream out;
  out << "provider_id,specialty";
  for (const auto& n : feature_names(topic_count)) out << ',' << n;
  out << ",top1_topic,top1_weight,top2_topic,top2_weight,silver_label\n";
  for (const auto& p : profiles) {
    out << p.provider_id << ',' << p.specialty;
    const Eigen::VectorXd v = feature_vector(p);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
    for (std::size_t t = 0; t < 2; ++t) {
      if (t < p.top2.size()) {
        out << ',' << p.top2[t].first << ',' << format_double(p.top2[t].second);
      } else {
        out << ",,";
      }
    }
    out << ',' << (p.silver_label ? 1 : 0) << '\n';
  }
  return out.str();
}

Eigen::MatrixXd ProfileTable::columns(const std::vector<std::string>& subset) const {
  const auto idx = column_indices(names, subset);
  Eigen::MatrixXd m(values.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = values.col(idx[j]);
  return m;
}

ProfileTable parse_profiles_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  if (table.header.size() < 8 || table.header[0] != "provider_id" || table.header[1] != "specialty") {
    throw DataError("profiles.csv: unexpected header");
  }
  ProfileTable out;
  const std::size_t first = 2;
  const std::size_t last = table.header.size() - 5;  // trailing topic/label columns
  out.names.assign(table.header.begin() + static_cast<std::ptrdiff_t>(first),
                   table.header.begin() + static_cast<std::ptrdiff_t>(last));
  out.values.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(out.names.size()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& [line, row] = table.rows[r];
    if (row.size() != table.header.size()) {
      throw DataError("profiles.csv line " + std::to_string(line) + ": wrong field count");
    }
    out.provider_ids.push_back(row[0]);
    out.specialties.push_back(row[1]);
    for (std::size_t c = first; c < last; ++c) {
      const auto v = parse_double(row[c]);
      if (!v) throw DataError("profiles.csv line " + std::to_string(line) + ": bad number");
      out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - first)) = *v;
    }
  }
  return out;
}

}  // namespace burnout::features
