#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdio>

#include "burnout/errors.hpp"
#include "burnout/pipeline.hpp"
#include "burnout/text_io.hpp"
#include "test_util.hpp"

using namespace burnout;
using namespace burnout::pipeline;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  return PipelineConfig::from_json(R"({
    "synth": {"n_providers": 40},
    "topics": {"iterations": 30, "min_df": 2}
  })");
}

// Relative path -> content digest for every file under `dir`.
std::map<std::string, std::string> tree_digest(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = file_digest(e.path());
  }
  return out;
}

std::vector<nlohmann::json> read_jsonl(const fs::path& path) {
  std::vector<nlohmann::json> rows;
  for (const auto& line : read_lines(path)) {
    if (!trim(line).empty()) rows.push_back(nlohmann::json::parse(line));
  }
  return rows;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TEST(PipelineConfig, ShippedDefaultLoads) {
  const auto c = PipelineConfig::load(burnout::testing::config_dir() / "default.json");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.topics.k, 5);
  EXPECT_EQ(c.label.t_sentences, 12u);
  EXPECT_EQ(c.label.t_mentions, 7u);
  EXPECT_DOUBLE_EQ(c.sentiment.tau_sent, 0.75);
  EXPECT_FALSE(c.include_label_inputs);
  EXPECT_TRUE(fs::exists(c.stress_lexicon));
  EXPECT_EQ(c.mbi.dimensions.size(), 3u);
}

TEST(PipelineConfig, RejectsBadInput) {
  EXPECT_THROW(PipelineConfig::from_json("{"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"topics": {"kk": 3}})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"topics": {"k": 0}})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"topics": {"k": "five"}})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"sentiment": {"tau_sent": 0.3}})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"label": {"unit": "words"}})"), ConfigError);
  EXPECT_THROW(PipelineConfig::from_json(R"({"classifier": {"test_fraction": 1.0}})"), ConfigError);
  EXPECT_THROW(PipelineConfig::load("/nonexistent/config.json"), ConfigError);
  try {
    PipelineConfig::from_json(R"({"topics": {"kk": 3}})");
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("kk"), std::string::npos);
  }
}

TEST(PipelineConfig, RoundTripsThroughJson) {
  auto c = small_config();
  c.report.topic_labels[1] = "Workload";
  const auto back = PipelineConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
}

TEST(Stages, NamesRoundTrip) {
  for (Stage s : {Stage::Synth, Stage::Ingest, Stage::Score, Stage::Features, Stage::Train, Stage::Evaluate,
                  Stage::Report}) {
    EXPECT_EQ(parse_stage(stage_name(s)), s);
  }
  EXPECT_FALSE(parse_stage("nope").has_value());
  EXPECT_EQ(full_chain().front(), Stage::Ingest);
  EXPECT_EQ(full_chain().back(), Stage::Report);
}

TEST(Stages, MissingUpstreamNamesTheStage) {
  const auto out = burnout::testing::scratch_dir("missing");
  const auto c = small_config();
  const std::vector<std::pair<Stage, std::string>> cases = {
      {Stage::Ingest, "synth"}, {Stage::Score, "ingest"},     {Stage::Features, "ingest"},
      {Stage::Train, "features"}, {Stage::Evaluate, "train"}, {Stage::Report, "ingest"}};
  for (const auto& [stage, upstream] : cases) {
    try {
      run_stage(stage, c, out);
      ADD_FAILURE() << stage_name(stage) << " did not throw";
    } catch (const MissingArtifactError& e) {
      EXPECT_EQ(e.stage(), upstream) << stage_name(stage);
    }
  }
}

TEST(Pipeline, AllMatchesIndividualStagesAndIsReproducible) {
  const auto c = small_config();
  const auto a = burnout::testing::scratch_dir("chain_all");
  const auto b = burnout::testing::scratch_dir("chain_steps");
  run_stage(Stage::Synth, c, a);
  run_all(c, a);
  run_stage(Stage::Synth, c, b);
  for (Stage s : full_chain()) run_stage(s, c, b);
  const auto da = tree_digest(a);
  EXPECT_EQ(da, tree_digest(b));
  for (const char* f : {"ingest/notes.jsonl", "score/sentiment.jsonl", "features/profiles.csv",
                        "features/labels.csv", "train/model.csv", "evaluate/eval.json",
                        "report/specialty_severity.csv", "report/sentiment_distribution.csv",
                        "report/mbi_summary.csv", "report/top_providers.csv"}) {
    EXPECT_TRUE(da.count(f)) << f;
  }

  const auto eval = nlohmann::json::parse(read_file(a / "evaluate" / "eval.json"));
  for (const char* k : {"tp", "fp", "fn", "tn", "precision", "recall", "f1", "threshold", "seed"}) {
    EXPECT_TRUE(eval.contains(k)) << k;
  }

  // One severity row per distinct specialty among ingested notes.
  std::set<std::string> specialties;
  for (const auto& row : read_jsonl(a / "ingest" / "notes.jsonl")) specialties.insert(row["specialty"]);
  const auto severity = parse_csv(read_file(a / "report" / "specialty_severity.csv"));
  EXPECT_EQ(severity.rows.size(), specialties.size());
  double prev = 2.0;
  for (const auto& [line, row] : severity.rows) {
    const double frac = *parse_double(row[4]);
    EXPECT_LE(frac, prev);
    prev = frac;
  }

  // One profile per note-authoring provider.
  const auto profiles = parse_csv(read_file(a / "features" / "profiles.csv"));
  const auto truth = parse_csv(read_file(a / "synth" / "ground_truth.csv"));
  EXPECT_EQ(profiles.rows.size(), truth.rows.size());
}

TEST(Pipeline, ExternalScoreFileRoundTrip) {
  const auto c = small_config();
  const auto out = burnout::testing::scratch_dir("score_file");
  run_stage(Stage::Synth, c, out);
  run_stage(Stage::Ingest, c, out);
  StageOptions emit;
  emit.emit_sentences = out / "boundaries.jsonl";
  run_stage(Stage::Score, c, out, emit);
  run_stage(Stage::Features, c, out);
  const auto baseline_sentiment = read_file(out / "score" / "sentiment.jsonl");
  const auto baseline_features = tree_digest(out / "features");

  // Re-emit the baseline probabilities as an external score file keyed by
  // the emitted sentence boundaries.
  const auto boundaries = read_jsonl(out / "boundaries.jsonl");
  const auto notes = read_jsonl(out / "ingest" / "notes.jsonl");
  std::map<std::string, std::string> text_of;
  for (const auto& n : notes) text_of[n["note_id"]] = n["text"];
  std::map<std::string, nlohmann::json> scored;
  for (const auto& row : read_jsonl(out / "score" / "sentiment.jsonl")) scored[row["note_id"]] = row["sentences"];

  std::string file = "# re-emitted baseline scores\n";
  std::size_t rows = 0;
  for (const auto& b : boundaries) {
    const std::string id = b["note_id"];
    const std::size_t index = b["sentence_index"];
    const std::size_t start = b["start"];
    const std::size_t end = b["end"];
    ASSERT_LE(end, text_of.at(id).size());
    EXPECT_EQ(text_of.at(id).substr(start, end - start), b["text"].get<std::string>());
    const auto& p = scored.at(id).at(index);
    file += "{\"note_id\":\"" + id + "\",\"sentence_index\":" + std::to_string(index) +
            ",\"p_neg\":" + fmt17(p[0]) + ",\"p_neu\":" + fmt17(p[1]) + ",\"p_pos\":" + fmt17(p[2]) + "}\n";
    ++rows;
  }
  std::size_t sentence_total = 0;
  for (const auto& [id, s] : scored) sentence_total += s.size();
  EXPECT_EQ(rows, sentence_total);
  write_file(out / "scores.jsonl", file);

  StageOptions ext;
  ext.scores = out / "scores.jsonl";
  run_stage(Stage::Score, c, out, ext);
  const auto meta = nlohmann::json::parse(read_file(out / "score" / "meta.json"));
  EXPECT_EQ(meta["source"], "external");
  EXPECT_EQ(meta["rejected_rows"], 0);
  EXPECT_EQ(meta["fallback_notes"], 0);
  EXPECT_EQ(read_file(out / "score" / "sentiment.jsonl"), baseline_sentiment);

  run_stage(Stage::Features, c, out);
  EXPECT_EQ(tree_digest(out / "features"), baseline_features);
  for (Stage s : {Stage::Train, Stage::Evaluate, Stage::Report}) EXPECT_NO_THROW(run_stage(s, c, out));
}

TEST(Pipeline, CorruptArtifactIsDataError) {
  const auto c = small_config();
  const auto out = burnout::testing::scratch_dir("corrupt");
  run_stage(Stage::Synth, c, out);
  run_stage(Stage::Ingest, c, out);
  run_stage(Stage::Score, c, out);
  write_file(out / "score" / "sentiment.jsonl", "{not json\n");
  EXPECT_THROW(run_stage(Stage::Features, c, out), DataError);
}
