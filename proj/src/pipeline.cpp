#include "burnout/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "burnout/errors.hpp"
#include "burnout/ingestion.hpp"
#include "burnout/preprocess.hpp"
#include "burnout/rng.hpp"
#include "burnout/sentiment.hpp"
#include "burnout/stress_lexicon.hpp"
#include "burnout/text_io.hpp"
#include "burnout/topics.hpp"

namespace burnout::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Walks one JSON object, remembering which keys were read so that anything
// left over can be reported as unknown.
class Section {
 public:
  Section(const ojson& obj, std::string where, fs::path base)
      : obj_(obj), where_(std::move(where)), base_(std::move(base)) {
    if (!obj_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  const ojson* find(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const char* key, double& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
  void integer(const char* key, Int& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->get<std::int64_t>() < 0 && !v->is_number_unsigned()) fail(key, "must be non-negative");
      }
      out = v->get<Int>();
    }
  }

  void boolean(const char* key, bool& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const char* key, std::string& out) {
    if (const ojson* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  void path(const char* key, fs::path& out) {
    std::string s;
    if (!find(key)) return;
    string(key, s);
    out = s.empty() ? fs::path{} : resolve(s);
  }

  fs::path resolve(const std::string& s) const {
    fs::path p(s);
    return p.is_absolute() || base_.empty() ? p : base_ / p;
  }

  std::optional<Section> child(const char* key) {
    if (const ojson* v = find(key)) return Section(*v, where_ + "." + key, base_);
    return std::nullopt;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key " + where_ + "." + it.key());
    }
  }

  [[noreturn]] void fail(const char* key, const std::string& msg) const {
    throw ConfigError("config " + where_ + "." + key + ": " + msg);
  }

  const ojson& raw() const { return obj_; }
  const std::string& where() const { return where_; }

 private:
  const ojson& obj_;
  std::string where_;
  fs::path base_;
  std::set<std::string> seen_;
};

std::string label_unit_name(features::LabelUnit unit) {
  return unit == features::LabelUnit::Notes ? "notes" : "sentences";
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

}  // namespace

PipelineConfig PipelineConfig::from_json(std::string_view json_text, const fs::path& base_dir) {
  ojson doc = ojson::parse(json_text, nullptr, /*allow_exceptions=*/false, /*ignore_comments=*/true);
  if (doc.is_discarded()) throw ConfigError("config is not valid JSON");

  PipelineConfig c;
  Section root(doc, "config", base_dir);
  root.integer("seed", c.seed);
  c.synth.seed = c.seed;
  root.path("data_dir", c.data_dir);

  if (auto s = root.child("input")) {
    s->path("notes", c.input.notes);
    s->path("admissions", c.input.admissions);
    s->path("labevents", c.input.labevents);
    s->path("procedureevents", c.input.procedureevents);
    s->path("ground_truth", c.input.ground_truth);
    s->finish();
  }
  if (auto s = root.child("synth")) {
    s->integer("n_providers", c.synth.n_providers);
    s->integer("min_notes", c.synth.min_notes);
    s->integer("max_notes", c.synth.max_notes);
    s->number("burnout_rate", c.synth.burnout_rate);
    s->integer("planted_topics", c.synth.planted_topics);
    s->integer("planted_vocab", c.synth.planted_vocab);
    s->integer("missing_workload_permille", c.synth.missing_workload_permille);
    s->integer("workload_only_providers", c.synth.workload_only_providers);
    s->finish();
  }
  if (auto s = root.child("preprocess")) {
    s->path("stopwords", c.preprocess.stopwords);
    s->path("lemma_exceptions", c.preprocess.lemma_exceptions);
    s->path("outcome_terms", c.preprocess.outcome_terms);
    s->boolean("remove_outcome_terms", c.preprocess.remove_outcome_terms);
    s->finish();
  }
  if (auto s = root.child("ingestion")) {
    s->path("specialty_map", c.specialty_map);
    s->finish();
  }
  if (auto s = root.child("sentiment")) {
    s->number("tau_sent", c.sentiment.tau_sent);
    s->number("temperature", c.sentiment.temperature);
    s->path("negative_cues", c.sentiment.negative_cues);
    s->path("positive_cues", c.sentiment.positive_cues);
    s->path("scores", c.sentiment.scores);
    s->finish();
  }
  if (auto s = root.child("stress")) {
    s->path("lexicon", c.stress_lexicon);
    s->finish();
  }
  if (auto s = root.child("topics")) {
    s->integer("k", c.topics.k);
    s->number("alpha", c.topics.alpha);
    s->number("beta", c.topics.beta);
    s->integer("iterations", c.topics.iterations);
    s->integer("vocab_top_k", c.topics.vocab_top_k);
    s->integer("min_df", c.topics.min_df);
    s->boolean("tune", c.topics.tune);
    s->integer("coherence_top_m", c.topics.coherence_top_m);
    s->finish();
  }
  if (auto s = root.child("label")) {
    s->integer("t_sentences", c.label.t_sentences);
    s->integer("t_mentions", c.label.t_mentions);
    std::string unit = label_unit_name(c.label.unit);
    s->string("unit", unit);
    if (unit == "sentences") {
      c.label.unit = features::LabelUnit::Sentences;
    } else if (unit == "notes") {
      c.label.unit = features::LabelUnit::Notes;
    } else {
      s->fail("unit", "expected \"sentences\" or \"notes\"");
    }
    s->finish();
  }
  if (auto s = root.child("features")) {
    s->boolean("include_label_inputs", c.include_label_inputs);
    s->finish();
  }
  if (auto s = root.child("classifier")) {
    s->number("lambda", c.classifier.lambda);
    s->integer("max_epochs", c.classifier.max_epochs);
    s->number("tol", c.classifier.tol);
    s->number("test_fraction", c.classifier.test_fraction);
    s->number("threshold", c.classifier.threshold);
    s->finish();
  }
  if (const ojson* m = root.find("mbi_mapping")) {
    if (!m->is_object() || m->empty()) throw ConfigError("config.mbi_mapping: expected a non-empty object");
    features::MbiMapping mapping;
    for (auto it = m->begin(); it != m->end(); ++it) {
      if (!it.value().is_array() || it.value().empty()) {
        throw ConfigError("config.mbi_mapping." + it.key() + ": expected a non-empty list of features");
      }
      std::vector<std::string> names;
      for (const auto& v : it.value()) {
        if (!v.is_string()) throw ConfigError("config.mbi_mapping." + it.key() + ": feature names must be strings");
        names.push_back(v.get<std::string>());
      }
      mapping.dimensions.emplace_back(it.key(), std::move(names));
    }
    c.mbi = std::move(mapping);
  }
  if (auto s = root.child("report")) {
    s->integer("top_n", c.report.top_n);
    if (const ojson* labels = s->find("topic_labels")) {
      if (!labels->is_object()) throw ConfigError("config.report.topic_labels: expected an object");
      for (auto it = labels->begin(); it != labels->end(); ++it) {
        const auto k = parse_int(it.key());
        if (!k || *k < 0 || !it.value().is_string()) {
          throw ConfigError("config.report.topic_labels: keys must be topic indices, values strings");
        }
        c.report.topic_labels[static_cast<int>(*k)] = it.value().get<std::string>();
      }
    }
    s->finish();
  }
  root.finish();
  c.finalize();
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return from_json(read_file(path), path.parent_path());
}

void PipelineConfig::finalize() {
  auto fill = [this](fs::path& p, const char* name) {
    if (p.empty()) p = data_dir / name;
  };
  fill(preprocess.stopwords, "stopwords.txt");
  fill(preprocess.lemma_exceptions, "lemma_exceptions.csv");
  fill(preprocess.outcome_terms, "outcome_terms.txt");
  fill(specialty_map, "specialty_map.csv");
  fill(sentiment.negative_cues, "negative_cues.txt");
  fill(sentiment.positive_cues, "positive_cues.txt");
  fill(stress_lexicon, "stress_lexicon.csv");
  synth.seed = seed;

  if (!(sentiment.tau_sent > 1.0 / 3.0 && sentiment.tau_sent <= 1.0)) {
    throw ConfigError("sentiment.tau_sent must be in (1/3, 1]");
  }
  if (!(sentiment.temperature > 0.0)) throw ConfigError("sentiment.temperature must be positive");
  topics::LdaParams{topics.k, topics.alpha, topics.beta, topics.iterations, seed}.validate();
  if (topics.vocab_top_k == 0) throw ConfigError("topics.vocab_top_k must be positive");
  if (topics.coherence_top_m < 2) throw ConfigError("topics.coherence_top_m must be at least 2");
  if (!(classifier.lambda >= 0.0)) throw ConfigError("classifier.lambda must be non-negative");
  if (classifier.max_epochs < 1) throw ConfigError("classifier.max_epochs must be positive");
  if (!(classifier.tol > 0.0)) throw ConfigError("classifier.tol must be positive");
  if (!(classifier.test_fraction > 0.0 && classifier.test_fraction < 1.0)) {
    throw ConfigError("classifier.test_fraction must be in (0, 1)");
  }
  if (!(classifier.threshold >= 0.0 && classifier.threshold <= 1.0)) {
    throw ConfigError("classifier.threshold must be in [0, 1]");
  }
  if (report.top_n == 0) throw ConfigError("report.top_n must be positive");
  synth.validate();
}

std::string PipelineConfig::to_json() const {
  ojson j;
  j["seed"] = seed;
  j["data_dir"] = path_string(data_dir);
  j["input"] = {{"notes", path_string(input.notes)},
                {"admissions", path_string(input.admissions)},
                {"labevents", path_string(input.labevents)},
                {"procedureevents", path_string(input.procedureevents)},
                {"ground_truth", path_string(input.ground_truth)}};
  j["synth"] = {{"n_providers", synth.n_providers},
                {"min_notes", synth.min_notes},
                {"max_notes", synth.max_notes},
                {"burnout_rate", synth.burnout_rate},
                {"planted_topics", synth.planted_topics},
                {"planted_vocab", synth.planted_vocab},
                {"missing_workload_permille", synth.missing_workload_permille},
                {"workload_only_providers", synth.workload_only_providers}};
  j["preprocess"] = {{"stopwords", path_string(preprocess.stopwords)},
                     {"lemma_exceptions", path_string(preprocess.lemma_exceptions)},
                     {"outcome_terms", path_string(preprocess.outcome_terms)},
                     {"remove_outcome_terms", preprocess.remove_outcome_terms}};
  j["ingestion"] = {{"specialty_map", path_string(specialty_map)}};
  j["sentiment"] = {{"tau_sent", sentiment.tau_sent},
                    {"temperature", sentiment.temperature},
                    {"negative_cues", path_string(sentiment.negative_cues)},
                    {"positive_cues", path_string(sentiment.positive_cues)},
                    {"scores", path_string(sentiment.scores)}};
  j["stress"] = {{"lexicon", path_string(stress_lexicon)}};
  j["topics"] = {{"k", topics.k},
                 {"alpha", topics.alpha},
                 {"beta", topics.beta},
                 {"iterations", topics.iterations},
                 {"vocab_top_k", topics.vocab_top_k},
                 {"min_df", topics.min_df},
                 {"tune", topics.tune},
                 {"coherence_top_m", topics.coherence_top_m}};
  j["label"] = {{"t_sentences", label.t_sentences},
                {"t_mentions", label.t_mentions},
                {"unit", label_unit_name(label.unit)}};
  j["features"] = {{"include_label_inputs", include_label_inputs}};
  j["classifier"] = {{"lambda", classifier.lambda},
                     {"max_epochs", classifier.max_epochs},
                     {"tol", classifier.tol},
                     {"test_fraction", classifier.test_fraction},
                     {"threshold", classifier.threshold}};
  ojson mbi_json = ojson::object();
  for (const auto& [dim, names] : mbi.dimensions) mbi_json[dim] = names;
  j["mbi_mapping"] = mbi_json;
  ojson labels = ojson::object();
  for (const auto& [k, name] : report.topic_labels) labels[std::to_string(k)] = name;
  j["report"] = {{"top_n", report.top_n}, {"topic_labels", labels}};
  return j.dump(2) + "\n";
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Synth: return "synth";
    case Stage::Ingest: return "ingest";
    case Stage::Score: return "score";
    case Stage::Features: return "features";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : {Stage::Synth, Stage::Ingest, Stage::Score, Stage::Features, Stage::Train,
                  Stage::Evaluate, Stage::Report}) {
    if (name == stage_name(s)) return s;
  }
  return std::nullopt;
}

const std::vector<Stage>& full_chain() {
  static const std::vector<Stage> chain = {Stage::Ingest, Stage::Score,    Stage::Features,
                                           Stage::Train,  Stage::Evaluate, Stage::Report};
  return chain;
}

namespace {

// Output directory layout.
struct Layout {
  fs::path out;
  fs::path dir(Stage s) const { return out / stage_name(s); }
  fs::path file(Stage s, const char* name) const { return dir(s) / name; }
};

// Throws if an upstream artifact is absent; `producer` names the stage that
// writes it.
void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) throw MissingArtifactError(producer, path.generic_string());
}

struct Inputs {
  fs::path notes, admissions, labevents, procedureevents, ground_truth;
  bool default_corpus = false;
};

Inputs resolve_inputs(const PipelineConfig& config, const Layout& layout) {
  Inputs in;
  const fs::path corpus = layout.dir(Stage::Synth);
  in.default_corpus = config.input.notes.empty();
  in.notes = config.input.notes.empty() ? corpus / "notes.jsonl" : config.input.notes;
  in.admissions = config.input.admissions.empty() ? in.notes.parent_path() / "admissions.csv"
                                                  : config.input.admissions;
  in.labevents = config.input.labevents.empty() ? in.notes.parent_path() / "labevents.csv"
                                                : config.input.labevents;
  in.procedureevents = config.input.procedureevents.empty()
                           ? in.notes.parent_path() / "procedureevents.csv"
                           : config.input.procedureevents;
  in.ground_truth = config.input.ground_truth.empty() ? in.notes.parent_path() / "ground_truth.csv"
                                                      : config.input.ground_truth;
  return in;
}

std::string digest_hex(std::string_view text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

// meta.json shared shape. Inputs are recorded by file name and content
// digest only, so reruns into another directory produce identical bytes.
class Meta {
 public:
  Meta(Stage stage, const PipelineConfig& config) {
    j_["stage"] = stage_name(stage);
    j_["version"] = std::string(kVersion);
    j_["seed"] = config.seed;
    j_["config_digest"] = digest_hex(config.to_json());
    j_["inputs"] = ojson::object();
  }
  void input(const std::string& name, const fs::path& path) { j_["inputs"][name] = file_digest(path); }
  ojson& operator[](const char* key) { return j_[key]; }
  void write(const fs::path& dir, const Warnings& warnings) {
    j_["warnings"] = warnings;
    write_file(dir / "meta.json", j_.dump(2) + "\n");
  }

 private:
  ojson j_;
};

std::vector<ojson> read_jsonl(const fs::path& path) {
  std::vector<ojson> rows;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ojson obj = ojson::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw DataError(path.filename().string() + " line " + std::to_string(line_no) + ": invalid JSON");
    }
    rows.push_back(std::move(obj));
  }
  return rows;
}

std::string to_jsonl(const std::vector<ojson>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

// Ingested note as persisted by the ingest stage.
struct NoteRow {
  std::string note_id;
  std::string provider_id;
  std::string service;
  std::string specialty;
  std::string chart_time;
  std::string text;
};

std::vector<NoteRow> read_notes(const fs::path& path) {
  std::vector<NoteRow> notes;
  for (const auto& r : read_jsonl(path)) {
    notes.push_back({r.at("note_id").get<std::string>(), r.at("provider_id").get<std::string>(),
                     r.at("service").get<std::string>(), r.at("specialty").get<std::string>(),
                     r.at("chart_time").get<std::string>(), r.at("text").get<std::string>()});
  }
  return notes;
}

ojson clean_to_json(const preprocess::CleanNote& note) {
  ojson j;
  j["note_id"] = note.note_id;
  const auto& m = note.metrics;
  j["metrics"] = {{"word_count", m.word_count},
                  {"sentence_count", m.sentence_count},
                  {"avg_token_length", m.avg_token_length},
                  {"type_token_ratio", m.type_token_ratio},
                  {"first_person_freq", m.first_person_freq},
                  {"third_person_freq", m.third_person_freq}};
  ojson sentences = ojson::array();
  for (const auto& s : note.sentences) {
    sentences.push_back(
        {{"index", s.index}, {"begin", s.raw_span.begin}, {"end", s.raw_span.end}, {"tokens", s.tokens}});
  }
  j["sentences"] = std::move(sentences);
  return j;
}

preprocess::CleanNote clean_from_json(const ojson& j) {
  preprocess::CleanNote note;
  note.note_id = j.at("note_id").get<std::string>();
  const auto& m = j.at("metrics");
  note.metrics.word_count = m.at("word_count").get<std::size_t>();
  note.metrics.sentence_count = m.at("sentence_count").get<std::size_t>();
  note.metrics.avg_token_length = m.at("avg_token_length").get<double>();
  note.metrics.type_token_ratio = m.at("type_token_ratio").get<double>();
  note.metrics.first_person_freq = m.at("first_person_freq").get<double>();
  note.metrics.third_person_freq = m.at("third_person_freq").get<double>();
  for (const auto& s : j.at("sentences")) {
    preprocess::Sentence sentence;
    sentence.index = s.at("index").get<std::size_t>();
    sentence.raw_span = {s.at("begin").get<std::size_t>(), s.at("end").get<std::size_t>()};
    sentence.tokens = s.at("tokens").get<std::vector<std::string>>();
    note.all_tokens.insert(note.all_tokens.end(), sentence.tokens.begin(), sentence.tokens.end());
    note.sentences.push_back(std::move(sentence));
  }
  return note;
}

std::vector<preprocess::CleanNote> read_clean(const fs::path& path) {
  std::vector<preprocess::CleanNote> out;
  try {
    for (const auto& r : read_jsonl(path)) out.push_back(clean_from_json(r));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
  return out;
}

ojson sentiment_to_json(const sentiment::NoteSentiment& n) {
  ojson j;
  j["note_id"] = n.note_id;
  j["doc_label"] = sentiment::label_name(n.doc_label);
  j["doc_confidence"] = n.doc_confidence;
  j["high_conf_neg_sentences"] = n.high_conf_neg_sentences;
  ojson rows = ojson::array();
  for (const auto& s : n.sentence_scores) rows.push_back({s.p_neg, s.p_neu, s.p_pos});
  j["sentences"] = std::move(rows);
  return j;
}

std::vector<sentiment::NoteSentiment> read_sentiment(const fs::path& path, double tau_sent) {
  std::vector<sentiment::NoteSentiment> out;
  try {
    for (const auto& r : read_jsonl(path)) {
      std::vector<sentiment::SentimentScore> scores;
      for (const auto& p : r.at("sentences")) {
        scores.push_back(sentiment::SentimentScore::from_probabilities(p.at(0).get<double>(), p.at(1).get<double>(),
                                                                       p.at(2).get<double>()));
      }
      out.push_back(sentiment::summarize_note(r.at("note_id").get<std::string>(), std::move(scores), tau_sent));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.filename().string() + ": " + e.what());
  }
  return out;
}

const char* kWorkloadHeader =
    "provider_id,lab_order_count,procedure_count,admission_count,mortality_count,mortality_rate,"
    "los_mean_days,los_median_days\n";

std::string workload_csv(const ingestion::WorkloadMap& workload) {
  std::ostringstream out;
  out << kWorkloadHeader;
  for (const auto& [id, w] : workload) {
    out << id << ',' << w.lab_order_count << ',' << w.procedure_count << ',' << w.admission_count << ','
        << w.mortality_count << ',' << format_double(w.mortality_rate) << ',' << format_double(w.los_mean_days)
        << ',' << format_double(w.los_median_days) << '\n';
  }
  return out.str();
}

ingestion::WorkloadMap read_workload(const fs::path& path) {
  ingestion::WorkloadMap out;
  const CsvTable table = read_csv(path);
  for (const auto& [line, row] : table.rows) {
    if (row.size() != 8) throw DataError("workload.csv line " + std::to_string(line) + ": wrong field count");
    ingestion::WorkloadRecord w;
    w.provider_id = row[0];
    auto i = [&](std::size_t c) {
      const auto v = parse_int(row[c]);
      if (!v) throw DataError("workload.csv line " + std::to_string(line) + ": bad integer");
      return *v;
    };
    auto d = [&](std::size_t c) {
      const auto v = parse_double(row[c]);
      if (!v) throw DataError("workload.csv line " + std::to_string(line) + ": bad number");
      return *v;
    };
    w.lab_order_count = i(1);
    w.procedure_count = i(2);
    w.admission_count = i(3);
    w.mortality_count = i(4);
    w.mortality_rate = d(5);
    w.los_mean_days = d(6);
    w.los_median_days = d(7);
    out[w.provider_id] = w;
  }
  return out;
}

std::map<std::string, bool> read_labels(const fs::path& path) {
  std::map<std::string, bool> labels;
  const CsvTable table = read_csv(path);
  const auto id = table.column("provider_id");
  const auto label = table.column("silver_label");
  if (!id || !label) throw DataError(path.filename().string() + ": missing provider_id/silver_label columns");
  for (const auto& [line, row] : table.rows) {
    if (row.size() != table.header.size()) {
      throw DataError(path.filename().string() + " line " + std::to_string(line) + ": wrong field count");
    }
    labels[row[*id]] = row[*label] == "1";
  }
  return labels;
}

std::map<std::string, bool> read_ground_truth(const fs::path& path) {
  std::map<std::string, bool> truth;
  const CsvTable table = read_csv(path);
  const auto id = table.column("provider_id");
  const auto label = table.column("is_burnout");
  if (!id || !label) throw DataError(path.filename().string() + ": missing provider_id/is_burnout columns");
  for (const auto& [line, row] : table.rows) {
    if (row.size() != table.header.size()) {
      throw DataError(path.filename().string() + " line " + std::to_string(line) + ": wrong field count");
    }
    truth[row[*id]] = row[*label] == "1";
  }
  return truth;
}

int topic_count_of(const std::vector<std::string>& names) {
  return static_cast<int>(std::count_if(names.begin(), names.end(),
                                        [](const std::string& n) { return n.rfind("topic_", 0) == 0; }));
}

ojson eval_json(const classifier::EvalReport& r) {
  ojson j;
  j["tp"] = r.tp;
  j["fp"] = r.fp;
  j["fn"] = r.fn;
  j["tn"] = r.tn;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["threshold"] = r.threshold;
  return j;
}

preprocess::PreprocessConfig load_preprocess(const PipelineConfig& config) {
  for (const auto& p : {config.preprocess.stopwords, config.preprocess.lemma_exceptions,
                        config.preprocess.outcome_terms}) {
    if (!fs::exists(p)) throw ConfigError("resource file not found: " + p.string());
  }
  auto pp = preprocess::PreprocessConfig::load(config.preprocess.stopwords, config.preprocess.lemma_exceptions,
                                               config.preprocess.outcome_terms);
  pp.remove_outcome_terms = config.preprocess.remove_outcome_terms;
  return pp;
}

// --- stages -----------------------------------------------------------------

void run_synth(const PipelineConfig& config, const Layout& layout, StageResult& result) {
  const synthgen::Corpus corpus = synthgen::generate(config.synth);
  const fs::path dir = layout.dir(Stage::Synth);
  synthgen::write_corpus(corpus, dir);
  Meta meta(Stage::Synth, config);
  meta["providers"] = corpus.providers.size();
  meta["notes"] = corpus.note_count;
  meta.write(dir, result.warnings);
}

void run_ingest(const PipelineConfig& config, const Layout& layout, StageResult& result) {
  const Inputs in = resolve_inputs(config, layout);
  const std::string producer = in.default_corpus ? stage_name(Stage::Synth) : "input";
  for (const auto& p : {in.notes, in.admissions, in.labevents, in.procedureevents}) require(p, producer);
  if (!fs::exists(config.specialty_map)) {
    throw ConfigError("resource file not found: " + config.specialty_map.string());
  }
  const auto specialty_map = ingestion::SpecialtyMap::load(config.specialty_map);
  const auto pp = load_preprocess(config);

  Warnings& warnings = result.warnings;
  ingestion::LoadResult loaded = ingestion::load_notes(in.notes, &warnings);
  if (loaded.notes.empty()) throw DataError("no valid notes in " + in.notes.filename().string());
  std::sort(loaded.notes.begin(), loaded.notes.end(),
            [](const auto& a, const auto& b) { return a.note_id < b.note_id; });

  std::vector<ojson> note_rows, clean_rows;
  std::size_t other = 0;
  for (const auto& n : loaded.notes) {
    const std::string specialty = ingestion::map_specialty(n.service_raw, specialty_map);
    if (specialty == ingestion::kOtherSpecialty) ++other;
    ojson row;
    row["note_id"] = n.note_id;
    row["provider_id"] = n.provider_id;
    row["service"] = n.service_raw;
    row["specialty"] = specialty;
    row["chart_time"] = n.chart_time;
    row["text"] = n.text;
    note_rows.push_back(std::move(row));
    clean_rows.push_back(clean_to_json(preprocess::clean_note(n.note_id, n.text, pp)));
  }

  const auto workload = ingestion::build_workload(read_csv(in.admissions), read_csv(in.labevents),
                                                  read_csv(in.procedureevents), &warnings);

  const fs::path dir = layout.dir(Stage::Ingest);
  write_file(dir / "notes.jsonl", to_jsonl(note_rows));
  write_file(dir / "clean.jsonl", to_jsonl(clean_rows));
  write_file(dir / "workload.csv", workload_csv(workload));

  Meta meta(Stage::Ingest, config);
  meta.input("notes", in.notes);
  meta.input("admissions", in.admissions);
  meta.input("labevents", in.labevents);
  meta.input("procedureevents", in.procedureevents);
  meta.input("specialty_map", config.specialty_map);
  meta.input("stopwords", config.preprocess.stopwords);
  meta.input("lemma_exceptions", config.preprocess.lemma_exceptions);
  meta.input("outcome_terms", config.preprocess.outcome_terms);
  meta["notes"] = loaded.notes.size();
  meta["rejected_lines"] = loaded.rejected;
  meta["other_specialty_notes"] = other;
  meta["workload_providers"] = workload.size();
  meta["metrics_basis"] = {{"word_count", "raw tokens before stop-word removal"},
                           {"sentence_count", "sentence splitter spans"},
                           {"pronoun_frequencies", "raw tokens before stop-word removal"},
                           {"avg_token_length", "cleaned tokens excluding <num>"},
                           {"type_token_ratio", "cleaned tokens"}};
  meta.write(dir, warnings);
}

void run_score(const PipelineConfig& config, const Layout& layout, const StageOptions& options,
               StageResult& result) {
  const fs::path notes_path = layout.file(Stage::Ingest, "notes.jsonl");
  const fs::path clean_path = layout.file(Stage::Ingest, "clean.jsonl");
  require(notes_path, stage_name(Stage::Ingest));
  require(clean_path, stage_name(Stage::Ingest));

  const auto pp = load_preprocess(config);
  for (const auto& p : {config.sentiment.negative_cues, config.sentiment.positive_cues}) {
    if (!fs::exists(p)) throw ConfigError("resource file not found: " + p.string());
  }
  sentiment::ScorerConfig scorer =
      sentiment::ScorerConfig::load(config.sentiment.negative_cues, config.sentiment.positive_cues,
                                    pp.lemma_exceptions);
  scorer.tau_sent = config.sentiment.tau_sent;
  scorer.temperature = config.sentiment.temperature;
  scorer.validate();

  const auto clean = read_clean(clean_path);
  const fs::path dir = layout.dir(Stage::Score);

  if (!options.emit_sentences.empty()) {
    std::vector<std::pair<std::string, std::string>> texts;
    for (auto& n : read_notes(notes_path)) texts.emplace_back(n.note_id, std::move(n.text));
    write_file(options.emit_sentences, sentence_boundaries_jsonl(texts, clean));
  }

  const fs::path scores_path = !options.scores.empty() ? options.scores : config.sentiment.scores;
  Meta meta(Stage::Score, config);
  meta.input("clean", clean_path);
  meta.input("negative_cues", config.sentiment.negative_cues);
  meta.input("positive_cues", config.sentiment.positive_cues);

  std::vector<ojson> rows;
  if (scores_path.empty()) {
    for (const auto& note : clean) rows.push_back(sentiment_to_json(sentiment::score_note_baseline(note, scorer)));
    meta["source"] = "baseline";
  } else {
    require(scores_path, "scores");
    const auto external = sentiment::load_external_scores(scores_path, clean, scorer, &result.warnings);
    for (const auto& [id, note] : external.notes) rows.push_back(sentiment_to_json(note));
    meta.input("scores", scores_path);
    meta["source"] = "external";
    meta["rejected_rows"] = external.rejected_rows;
    meta["fallback_notes"] = external.fallback_notes;
  }
  meta["temperature"] = scorer.temperature;
  meta["tau_sent"] = scorer.tau_sent;
  write_file(dir / "sentiment.jsonl", to_jsonl(rows));
  meta.write(dir, result.warnings);
}

void run_features(const PipelineConfig& config, const Layout& layout, StageResult& result) {
  const fs::path notes_path = layout.file(Stage::Ingest, "notes.jsonl");
  const fs::path clean_path = layout.file(Stage::Ingest, "clean.jsonl");
  const fs::path workload_path = layout.file(Stage::Ingest, "workload.csv");
  const fs::path sentiment_path = layout.file(Stage::Score, "sentiment.jsonl");
  for (const auto& p : {notes_path, clean_path, workload_path}) require(p, stage_name(Stage::Ingest));
  require(sentiment_path, stage_name(Stage::Score));
  if (!fs::exists(config.stress_lexicon)) {
    throw ConfigError("resource file not found: " + config.stress_lexicon.string());
  }
  Warnings& warnings = result.warnings;

  const auto notes = read_notes(notes_path);
  const auto clean = read_clean(clean_path);
  const auto scores = read_sentiment(sentiment_path, config.sentiment.tau_sent);
  if (notes.size() != clean.size()) throw DataError("ingest artifacts disagree on note count");

  std::map<std::string, std::string> provider_of;
  std::vector<features::NoteRecord> records;
  std::set<std::string> provider_set;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (notes[i].note_id != clean[i].note_id) throw DataError("ingest artifacts disagree on note order");
    provider_of[notes[i].note_id] = notes[i].provider_id;
    provider_set.insert(notes[i].provider_id);
    records.push_back({notes[i].note_id, notes[i].provider_id, notes[i].specialty, clean[i].metrics});
  }
  const std::vector<std::string> providers(provider_set.begin(), provider_set.end());

  // Stress lexicon.
  const auto lexicon = stress::StressLexicon::load(config.stress_lexicon);
  std::vector<stress::StressCounts> stress_counts;
  std::ostringstream stress_csv;
  stress_csv << "note_id,provider_id";
  for (const auto& c : stress::category_names()) stress_csv << ',' << c;
  stress_csv << ",total";
  for (const auto& c : stress::category_names()) stress_csv << ",norm_" << c;
  stress_csv << '\n';
  for (std::size_t i = 0; i < notes.size(); ++i) {
    auto counts = stress::match_note(clean[i], notes[i].text, lexicon);
    stress_csv << counts.note_id << ',' << notes[i].provider_id;
    for (auto v : counts.per_category) stress_csv << ',' << v;
    stress_csv << ',' << counts.total;
    for (auto v : counts.normalized) stress_csv << ',' << format_double(v);
    stress_csv << '\n';
    stress_counts.push_back(std::move(counts));
  }

  // Topics.
  const auto vocab =
      topics::build_vocabulary(clean, config.topics.vocab_top_k, config.topics.min_df, &warnings);
  if (vocab.size() == 0) throw DataError("topic vocabulary is empty; lower topics.min_df");
  const auto docs = topics::to_documents(clean, vocab);
  topics::LdaParams params{config.topics.k, config.topics.alpha, config.topics.beta, config.topics.iterations,
                           config.seed};
  ojson tuning = nullptr;
  if (config.topics.tune) {
    const auto grid = topics::default_grid();
    const auto tuned =
        topics::tune_hyperparameters(docs, vocab.size(), params, grid, config.topics.coherence_top_m);
    params.alpha = tuned.alpha;
    params.beta = tuned.beta;
    tuning = ojson::array();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      tuning.push_back({{"alpha", grid[g].first}, {"beta", grid[g].second},
                        {"mean_coherence", tuned.mean_coherence[g]}});
    }
  }
  const auto fit = topics::gibbs_fit(docs, vocab.size(), params, config.topics.coherence_top_m, &warnings);
  const fs::path dir = layout.dir(Stage::Features);
  topics::write_model(dir / "topics", fit.model, vocab);
  const auto topic_profiles = topics::provider_topic_profiles(fit.model, provider_of, providers, &warnings);

  // Fusion and labels.
  features::FuseInputs fuse_in;
  fuse_in.topic_count = config.topics.k;
  fuse_in.notes = records;
  fuse_in.sentiment = sentiment::aggregate_provider_sentiment(scores, provider_of, config.sentiment.tau_sent);
  fuse_in.stress = stress::aggregate_provider_stress(stress_counts, provider_of);
  fuse_in.topics = topic_profiles;
  fuse_in.workload = read_workload(workload_path);
  auto fused = features::fuse(fuse_in, &warnings);
  const auto summary = features::label_corpus(fused.profiles, config.label);

  std::ostringstream labels;
  labels << "provider_id,silver_label,high_conf_neg_sentences,high_severity_notes,stress_total_mentions\n";
  for (const auto& p : fused.profiles) {
    labels << p.provider_id << ',' << (p.silver_label ? 1 : 0) << ','
           << p.sentiment.total_high_conf_neg_sentences << ',' << p.sentiment.high_severity_notes << ','
           << p.stress.total_mentions << '\n';
  }

  std::ostringstream topic_terms;
  topic_terms << "topic,label,coherence,top_terms\n";
  for (std::size_t k = 0; k < fit.model.top_terms.size(); ++k) {
    const auto label_it = config.report.topic_labels.find(static_cast<int>(k));
    topic_terms << k << ',' << (label_it == config.report.topic_labels.end() ? "" : label_it->second) << ','
                << format_double(fit.model.coherence[k]) << ',';
    for (std::size_t i = 0; i < fit.model.top_terms[k].size(); ++i) {
      topic_terms << (i ? " " : "") << vocab.terms[fit.model.top_terms[k][i]];
    }
    topic_terms << '\n';
  }

  const auto mbi = features::mbi_report(fused.profiles, config.mbi, config.topics.k);
  std::ostringstream mbi_summary;
  mbi_summary << "dimension,feature,mean_flagged,mean_unflagged,mean_all\n";
  for (const auto& r : mbi.summary) {
    mbi_summary << r.dimension << ',' << r.feature << ',' << format_double(r.mean_flagged) << ','
                << format_double(r.mean_unflagged) << ',' << format_double(r.mean_all) << '\n';
  }
  std::ostringstream mbi_providers;
  mbi_providers << "provider_id,silver_label";
  for (const auto& [dim, names] : mbi.mapping.dimensions) {
    for (const auto& n : names) mbi_providers << ',' << dim << ':' << n;
  }
  mbi_providers << '\n';
  for (const auto& p : fused.profiles) {
    mbi_providers << p.provider_id << ',' << (p.silver_label ? 1 : 0);
    for (const auto& dim : mbi.provider_values.at(p.provider_id)) {
      for (double v : dim) mbi_providers << ',' << format_double(v);
    }
    mbi_providers << '\n';
  }

  std::string workload_only = "provider_id\n";
  for (const auto& id : fused.workload_only) workload_only += id + "\n";

  write_file(dir / "stress.csv", stress_csv.str());
  write_file(dir / "profiles.csv", features::profiles_csv(fused.profiles, config.topics.k));
  write_file(dir / "labels.csv", labels.str());
  write_file(dir / "topic_terms.csv", topic_terms.str());
  write_file(dir / "mbi_summary.csv", mbi_summary.str());
  write_file(dir / "mbi_providers.csv", mbi_providers.str());
  write_file(dir / "workload_only.csv", workload_only);

  Meta meta(Stage::Features, config);
  meta.input("notes", notes_path);
  meta.input("clean", clean_path);
  meta.input("workload", workload_path);
  meta.input("sentiment", sentiment_path);
  meta.input("stress_lexicon", config.stress_lexicon);
  meta["providers"] = fused.profiles.size();
  meta["flagged"] = summary.flagged;
  meta["flag_rate"] = summary.flag_rate;
  meta["label_rule"] = {{"t_sentences", config.label.t_sentences},
                        {"t_mentions", config.label.t_mentions},
                        {"unit", label_unit_name(config.label.unit)}};
  meta["vocab_size"] = vocab.size();
  meta["topic_documents"] = fit.model.doc_ids.size();
  meta["lda"] = {{"k", params.topics},
                 {"alpha", params.alpha},
                 {"beta", params.beta},
                 {"iterations", params.iterations},
                 {"seed", params.seed}};
  meta["tuning"] = tuning;
  meta["mbi_mapping"] = [&] {
    ojson m = ojson::object();
    for (const auto& [dim, names] : mbi.mapping.dimensions) m[dim] = names;
    return m;
  }();
  meta.write(dir, warnings);
}

struct Dataset {
  features::ProfileTable table;
  std::map<std::string, bool> labels;
  std::vector<std::string> feature_names;
  std::map<std::string, Eigen::Index> row_of;
};

Dataset load_dataset(const PipelineConfig& config, const Layout& layout) {
  const fs::path profiles_path = layout.file(Stage::Features, "profiles.csv");
  const fs::path labels_path = layout.file(Stage::Features, "labels.csv");
  require(profiles_path, stage_name(Stage::Features));
  require(labels_path, stage_name(Stage::Features));
  Dataset d;
  d.table = features::parse_profiles_csv(read_file(profiles_path));
  d.labels = read_labels(labels_path);
  const int k = topic_count_of(d.table.names);
  d.feature_names = features::classifier_feature_names(k, config.include_label_inputs);
  for (std::size_t i = 0; i < d.table.provider_ids.size(); ++i) {
    d.row_of[d.table.provider_ids[i]] = static_cast<Eigen::Index>(i);
    if (!d.labels.count(d.table.provider_ids[i])) {
      throw DataError("labels.csv has no row for provider " + d.table.provider_ids[i]);
    }
  }
  return d;
}

Eigen::MatrixXd rows_for(const Dataset& d, const Eigen::MatrixXd& all, const std::vector<std::string>& ids) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), all.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = d.row_of.find(ids[i]);
    if (it == d.row_of.end()) throw DataError("split references unknown provider " + ids[i]);
    out.row(static_cast<Eigen::Index>(i)) = all.row(it->second);
  }
  return out;
}

void run_train(const PipelineConfig& config, const Layout& layout, StageResult& result) {
  const Dataset d = load_dataset(config, layout);
  const auto plan = classifier::stratified_split(d.labels, config.classifier.test_fraction, config.seed,
                                                 &result.warnings);
  const Eigen::MatrixXd all = d.table.columns(d.feature_names);
  const Eigen::MatrixXd x_train = rows_for(d, all, plan.train_ids);
  std::vector<bool> y_train;
  for (const auto& id : plan.train_ids) y_train.push_back(d.labels.at(id));

  classifier::TrainOptions opts;
  opts.lambda = config.classifier.lambda;
  opts.max_epochs = config.classifier.max_epochs;
  opts.tol = config.classifier.tol;
  const auto model = classifier::train<double>(x_train, y_train, opts, d.feature_names);

  std::ostringstream split;
  split << "provider_id,set,silver_label\n";
  std::map<std::string, const char*> set_of;
  for (const auto& id : plan.train_ids) set_of[id] = "train";
  for (const auto& id : plan.test_ids) set_of[id] = "test";
  for (const auto& [id, set] : set_of) split << id << ',' << set << ',' << (d.labels.at(id) ? 1 : 0) << '\n';

  const fs::path dir = layout.dir(Stage::Train);
  write_file(dir / "split.csv", split.str());
  write_file(dir / "model.csv", classifier::model_csv(model));

  Meta meta(Stage::Train, config);
  meta.input("profiles", layout.file(Stage::Features, "profiles.csv"));
  meta.input("labels", layout.file(Stage::Features, "labels.csv"));
  meta["train_size"] = plan.train_ids.size();
  meta["test_size"] = plan.test_ids.size();
  meta["epochs_run"] = model.epochs_run;
  meta["final_loss"] = model.final_loss;
  meta["lambda"] = model.lambda;
  meta["features"] = d.feature_names;
  meta.write(dir, result.warnings);
}

void run_evaluate(const PipelineConfig& config, const Layout& layout, StageResult& result) {
  const fs::path model_path = layout.file(Stage::Train, "model.csv");
  const fs::path split_path = layout.file(Stage::Train, "split.csv");
  require(model_path, stage_name(Stage::Train));
  require(split_path, stage_name(Stage::Train));
  const Dataset d = load_dataset(config, layout);
  const auto model = classifier::parse_model_csv(read_file(model_path));

  const CsvTable split = read_csv(split_path);
  const auto id_col = split.column("provider_id");
  const auto set_col = split.column("set");
  if (!id_col || !set_col) throw DataError("split.csv: missing provider_id/set columns");
  std::map<std::string, std::string> set_of;
  std::vector<std::string> test_ids;
  for (const auto& [line, row] : split.rows) {
    if (row.size() != split.header.size()) throw DataError("split.csv line " + std::to_string(line) + ": wrong field count");
    set_of[row[*id_col]] = row[*set_col];
    if (row[*set_col] == "test") test_ids.push_back(row[*id_col]);
  }

  const Eigen::MatrixXd all = d.table.columns(model.feature_names);
  const Eigen::VectorXd proba = model.predict_proba(all);
  const double thr = config.classifier.threshold;

  std::vector<bool> truth, predicted;
  for (const auto& id : test_ids) {
    truth.push_back(d.labels.at(id));
    predicted.push_back(proba(d.row_of.at(id)) >= thr);
  }
  const auto report = classifier::evaluate(truth, predicted, thr);
  ojson ej = eval_json(report);
  ej["seed"] = config.seed;

  std::ostringstream preds;
  preds << "provider_id,set,probability,predicted,silver_label\n";
  std::vector<bool> all_pred(d.table.provider_ids.size());
  for (std::size_t i = 0; i < d.table.provider_ids.size(); ++i) {
    const auto& id = d.table.provider_ids[i];
    const double p = proba(static_cast<Eigen::Index>(i));
    all_pred[i] = p >= thr;
    const auto s = set_of.find(id);
    preds << id << ',' << (s == set_of.end() ? "none" : s->second) << ',' << format_double(p) << ','
          << (all_pred[i] ? 1 : 0) << ',' << (d.labels.at(id) ? 1 : 0) << '\n';
  }

  const fs::path dir = layout.dir(Stage::Evaluate);
  write_file(dir / "eval.json", ej.dump(2) + "\n");
  write_file(dir / "predictions.csv", preds.str());

  Meta meta(Stage::Evaluate, config);
  meta.input("model", model_path);
  meta.input("split", split_path);
  meta.input("profiles", layout.file(Stage::Features, "profiles.csv"));

  // Planted ground truth exists only for generated corpora.
  const Inputs in = resolve_inputs(config, layout);
  if (fs::exists(in.ground_truth)) {
    const auto gt = read_ground_truth(in.ground_truth);
    std::vector<bool> gt_all, silver_all, pred_all, gt_test, pred_test;
    for (std::size_t i = 0; i < d.table.provider_ids.size(); ++i) {
      const auto& id = d.table.provider_ids[i];
      const auto it = gt.find(id);
      if (it == gt.end()) {
        warn(&result.warnings, "ground truth has no row for provider " + id);
        continue;
      }
      gt_all.push_back(it->second);
      silver_all.push_back(d.labels.at(id));
      pred_all.push_back(all_pred[i]);
      if (set_of.count(id) && set_of.at(id) == "test") {
        gt_test.push_back(it->second);
        pred_test.push_back(all_pred[i]);
      }
    }
    ojson g;
    g["silver_labels"] = eval_json(classifier::evaluate(gt_all, silver_all, thr));
    g["classifier_all"] = eval_json(classifier::evaluate(gt_all, pred_all, thr));
    g["classifier_test"] = eval_json(classifier::evaluate(gt_test, pred_test, thr));
    write_file(dir / "ground_truth_eval.json", g.dump(2) + "\n");
    meta.input("ground_truth", in.ground_truth);
  }
  meta.write(dir, result.warnings);
}

void run_report(const PipelineConfig& config, const Layout& layout, StageResult& result) {
  const fs::path eval_path = layout.file(Stage::Evaluate, "eval.json");
  const fs::path notes_path = layout.file(Stage::Ingest, "notes.jsonl");
  const fs::path sentiment_path = layout.file(Stage::Score, "sentiment.jsonl");
  const fs::path profiles_path = layout.file(Stage::Features, "profiles.csv");
  const fs::path mbi_path = layout.file(Stage::Features, "mbi_summary.csv");
  const fs::path terms_path = layout.file(Stage::Features, "topic_terms.csv");
  // Earliest missing stage first.
  require(notes_path, stage_name(Stage::Ingest));
  require(sentiment_path, stage_name(Stage::Score));
  for (const auto& p : {profiles_path, mbi_path, terms_path}) require(p, stage_name(Stage::Features));
  require(eval_path, stage_name(Stage::Evaluate));

  const auto notes = read_notes(notes_path);
  const auto scores = read_sentiment(sentiment_path, config.sentiment.tau_sent);
  const auto table = features::parse_profiles_csv(read_file(profiles_path));
  const auto labels = read_labels(layout.file(Stage::Features, "labels.csv"));
  const int k = topic_count_of(table.names);
  const fs::path dir = layout.dir(Stage::Report);

  // (a) corpus sentiment distribution
  const auto dist = sentiment::corpus_sentiment_distribution(scores);
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& s : scores) ++counts[static_cast<int>(s.doc_label)];
  std::ostringstream dist_csv;
  dist_csv << "label,notes,fraction\n";
  dist_csv << "positive," << counts[2] << ',' << format_double(dist.positive) << '\n';
  dist_csv << "neutral," << counts[1] << ',' << format_double(dist.neutral) << '\n';
  dist_csv << "negative," << counts[0] << ',' << format_double(dist.negative) << '\n';
  write_file(dir / "sentiment_distribution.csv", dist_csv.str());

  // (b) top providers by note volume, (c) their topic profiles
  const auto col = [&](const std::string& name) {
    const auto it = std::find(table.names.begin(), table.names.end(), name);
    if (it == table.names.end()) throw DataError("profiles.csv: missing column " + name);
    return static_cast<Eigen::Index>(it - table.names.begin());
  };
  const Eigen::Index note_col = col("note_count");
  std::vector<std::size_t> order(table.provider_ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.values(static_cast<Eigen::Index>(a), note_col) > table.values(static_cast<Eigen::Index>(b), note_col);
  });
  order.resize(std::min(order.size(), config.report.top_n));

  auto topic_label = [&](std::size_t t) {
    const auto it = config.report.topic_labels.find(static_cast<int>(t));
    return it == config.report.topic_labels.end() ? "topic_" + std::to_string(t) : it->second;
  };
  std::ostringstream top_csv, topic_csv;
  top_csv << "rank,provider_id,specialty,note_count,silver_label\n";
  topic_csv << "provider_id,note_count";
  for (int t = 0; t < k; ++t) topic_csv << ",topic_" << t;
  topic_csv << ",top1_topic,top1_label,top1_weight,top2_topic,top2_label,top2_weight\n";
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(order[r]);
    const auto& id = table.provider_ids[order[r]];
    const auto notes_n = static_cast<long long>(table.values(i, note_col));
    top_csv << r + 1 << ',' << id << ',' << table.specialties[order[r]] << ',' << notes_n << ','
            << (labels.at(id) ? 1 : 0) << '\n';
    Eigen::VectorXd w(k);
    for (int t = 0; t < k; ++t) w(t) = table.values(i, col("topic_" + std::to_string(t)));
    topic_csv << id << ',' << notes_n;
    for (int t = 0; t < k; ++t) topic_csv << ',' << format_double(w(t));
    for (const auto& [t, weight] : topics::top_two(w)) {
      topic_csv << ',' << t << ',' << topic_label(t) << ',' << format_double(weight);
    }
    topic_csv << '\n';
  }
  write_file(dir / "top_providers.csv", top_csv.str());
  write_file(dir / "provider_topic_profiles.csv", topic_csv.str());

  // (d) specialty severity ranking
  std::map<std::string, std::string> specialty_of;
  for (const auto& n : notes) specialty_of[n.note_id] = n.specialty;
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_specialty;  // notes, severe
  for (const auto& s : scores) {
    auto& [n, severe] = by_specialty[specialty_of.at(s.note_id)];
    ++n;
    if (sentiment::is_high_severity(s, config.sentiment.tau_sent)) ++severe;
  }
  std::vector<std::tuple<std::string, std::size_t, std::size_t, double>> ranking;
  for (const auto& [name, c] : by_specialty) {
    ranking.emplace_back(name, c.first, c.second, static_cast<double>(c.second) / static_cast<double>(c.first));
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) { return std::get<3>(a) > std::get<3>(b); });
  std::ostringstream sev_csv;
  sev_csv << "rank,specialty,notes,high_severity_notes,high_severity_fraction\n";
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    const auto& [name, n, severe, frac] = ranking[r];
    sev_csv << r + 1 << ',' << name << ',' << n << ',' << severe << ',' << format_double(frac) << '\n';
  }
  write_file(dir / "specialty_severity.csv", sev_csv.str());

  // (e) MBI summary, topic terms and (f) evaluation pass through unchanged.
  write_file(dir / "mbi_summary.csv", read_file(mbi_path));
  write_file(dir / "topic_terms.csv", read_file(terms_path));
  write_file(dir / "eval.json", read_file(eval_path));

  Meta meta(Stage::Report, config);
  meta.input("eval", eval_path);
  meta.input("notes", notes_path);
  meta.input("sentiment", sentiment_path);
  meta.input("profiles", profiles_path);
  meta.input("mbi_summary", mbi_path);
  meta.write(dir, result.warnings);
}

}  // namespace

std::string sentence_boundaries_jsonl(const std::vector<std::pair<std::string, std::string>>& notes,
                                      const std::vector<preprocess::CleanNote>& clean) {
  std::map<std::string, const std::string*> text_of;
  for (const auto& [id, text] : notes) text_of[id] = &text;
  std::string out;
  for (const auto& note : clean) {
    const auto it = text_of.find(note.note_id);
    if (it == text_of.end()) throw DataError("no text for note " + note.note_id);
    const std::string& text = *it->second;
    for (const auto& s : note.sentences) {
      ojson row;
      row["note_id"] = note.note_id;
      row["sentence_index"] = s.index;
      row["start"] = s.raw_span.begin;
      row["end"] = s.raw_span.end;
      row["text"] = text.substr(s.raw_span.begin, s.raw_span.end - s.raw_span.begin);
      out += row.dump();
      out += '\n';
    }
  }
  return out;
}

StageResult run_stage(Stage stage, const PipelineConfig& config, const fs::path& out,
                      const StageOptions& options) {
  const Layout layout{out};
  StageResult result;
  try {
    switch (stage) {
      case Stage::Synth: run_synth(config, layout, result); break;
      case Stage::Ingest: run_ingest(config, layout, result); break;
      case Stage::Score: run_score(config, layout, options, result); break;
      case Stage::Features: run_features(config, layout, result); break;
      case Stage::Train: run_train(config, layout, result); break;
      case Stage::Evaluate: run_evaluate(config, layout, result); break;
      case Stage::Report: run_report(config, layout, result); break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string(stage_name(stage)) + ": malformed artifact: " + e.what());
  }
  return result;
}

StageResult run_all(const PipelineConfig& config, const fs::path& out, const StageOptions& options) {
  StageResult all;
  for (Stage s : full_chain()) {
    auto r = run_stage(s, config, out, options);
    all.warnings.insert(all.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  return all;
}

}  // namespace burnout::pipeline
