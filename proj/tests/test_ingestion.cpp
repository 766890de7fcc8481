#include <gtest/gtest.h>

#include <algorithm>

#include "burnout/errors.hpp"
#include "burnout/ingestion.hpp"
#include "burnout/rng.hpp"
#include "burnout/synthgen.hpp"
#include "burnout/text_io.hpp"
#include "test_util.hpp"

using namespace burnout;
using namespace burnout::ingestion;

namespace {

const SpecialtyMap& shipped_map() {
  static const SpecialtyMap map = SpecialtyMap::load(burnout::testing::data_dir() / "specialty_map.csv");
  return map;
}

}  // namespace

TEST(LoadNotes, ThreeValidLines) {
  const auto r = parse_notes(
      "{\"note_id\":\"n1\",\"provider_id\":\"p1\",\"text\":\"a\"}\n"
      "{\"note_id\":\"n2\",\"provider_id\":\"p1\",\"text\":\"b\",\"chart_time\":\"2150-01-01T00:00:00\"}\n"
      "{\"note_id\":\"n3\",\"provider_id\":\"p2\",\"text\":\"c\",\"service\":\"med\"}\n");
  ASSERT_EQ(r.notes.size(), 3u);
  EXPECT_EQ(r.rejected, 0u);
  EXPECT_EQ(r.notes[1].chart_time, "2150-01-01T00:00:00");
  EXPECT_EQ(r.notes[2].service_raw, "MED");
}

TEST(LoadNotes, MissingProviderIsSkippedWithLineNumber) {
  Warnings w;
  const auto r = parse_notes(
      "{\"note_id\":\"n1\",\"provider_id\":\"p1\",\"text\":\"a\"}\n"
      "{\"note_id\":\"n2\",\"text\":\"b\"}\n"
      "{\"note_id\":\"n3\",\"provider_id\":\"p2\",\"text\":\"c\"}\n",
      &w);
  EXPECT_EQ(r.notes.size(), 2u);
  EXPECT_EQ(r.rejected, 1u);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("line 2"), std::string::npos);
}

TEST(LoadNotes, GarbageLineIsSkipped) {
  Warnings w;
  const auto r = parse_notes("not json\n{\"note_id\":\"n1\",\"provider_id\":\"p1\",\"text\":\"a\"}\n", &w);
  EXPECT_EQ(r.notes.size(), 1u);
  EXPECT_EQ(r.rejected, 1u);
}

TEST(LoadNotes, DuplicateNoteIdIsFatal) {
  EXPECT_THROW(parse_notes("{\"note_id\":\"n1\",\"provider_id\":\"p1\",\"text\":\"a\"}\n"
                           "{\"note_id\":\"n1\",\"provider_id\":\"p2\",\"text\":\"b\"}\n"),
               DataError);
}

TEST(LoadNotes, UnreadableFileIsFatal) {
  EXPECT_THROW(load_notes("/nonexistent/notes.jsonl"), DataError);
}

TEST(LoadNotes, SyntheticTenThousandLines) {
  synthgen::GenConfig cfg;
  cfg.seed = 42;
  cfg.n_providers = 1400;
  const auto corpus = synthgen::generate(cfg);
  ASSERT_GE(corpus.note_count, 10000u);
  std::string first;
  std::size_t lines = 0, pos = 0;
  while (lines < 10000) {
    const auto nl = corpus.notes_jsonl.find('\n', pos);
    pos = nl + 1;
    ++lines;
  }
  first = corpus.notes_jsonl.substr(0, pos);
  EXPECT_EQ(static_cast<std::size_t>(std::count(first.begin(), first.end(), '\n')), 10000u);
  const auto r = parse_notes(first);
  EXPECT_EQ(r.notes.size(), 10000u);
  EXPECT_EQ(r.rejected, 0u);
}

TEST(LoadNotes, RereadIsIdentical) {
  const auto dir = burnout::testing::scratch_dir("reread");
  synthgen::GenConfig cfg;
  cfg.n_providers = 20;
  synthgen::write_corpus(synthgen::generate(cfg), dir);
  const auto a = load_notes(dir / "notes.jsonl");
  const auto b = load_notes(dir / "notes.jsonl");
  EXPECT_EQ(a.notes, b.notes);
}

TEST(ServiceHeader, Examples) {
  EXPECT_EQ(parse_service_header("Service: MEDICINE\nAllergies: ..."), "MEDICINE");
  EXPECT_EQ(parse_service_header("no header here"), "");
  EXPECT_EQ(parse_service_header("service:  neuro surgery "), "NEURO SURGERY");
  EXPECT_EQ(parse_service_header("Name: x\n  SERVICE: cmed\n"), "CMED");
}

TEST(SpecialtyMapping, Examples) {
  EXPECT_EQ(map_specialty("MEDICINE", shipped_map()), "Internal Medicine");
  EXPECT_EQ(map_specialty("", shipped_map()), "OTHER");
  EXPECT_EQ(map_specialty("NEURO SURGERY", shipped_map()), "Neurosurgery");
  EXPECT_EQ(map_specialty("NEURO", shipped_map()), "Neurology");
  EXPECT_EQ(map_specialty("CMED", shipped_map()), "Cardiology");
  EXPECT_EQ(map_specialty("ZZZ", shipped_map()), "OTHER");
}

TEST(SpecialtyMapping, ShippedTableCoversAllCanonicalNames) {
  std::set<std::string> targets;
  for (const auto& r : shipped_map().rules()) targets.insert(r.specialty);
  EXPECT_EQ(targets.size(), 20u);
  EXPECT_EQ(canonical_specialties().size(), 20u);
}

TEST(SpecialtyMapping, TotalAndDeterministic) {
  std::set<std::string> allowed(canonical_specialties().begin(), canonical_specialties().end());
  allowed.insert(std::string(kOtherSpecialty));
  Rng rng(3);
  const std::string alphabet = "ABCDEGHIMNOPRSTUVY ?.*(";
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const auto len = rng.index(12);
    for (std::uint64_t j = 0; j < len; ++j) s += alphabet[rng.index(alphabet.size())];
    const auto first = map_specialty(s, shipped_map());
    EXPECT_TRUE(allowed.count(first)) << s;
    EXPECT_EQ(first, map_specialty(s, shipped_map()));
  }
}

TEST(SpecialtyMapping, FirstMatchWins) {
  SpecialtyMap map;
  map.add_rule("^A", "Cardiology");
  map.add_rule("^AB", "Urology");
  EXPECT_EQ(map_specialty("ABC", map), "Cardiology");
}

TEST(SpecialtyMapping, BadRulesAreConfigErrors) {
  SpecialtyMap map;
  EXPECT_THROW(map.add_rule("([", "Cardiology"), ConfigError);
  EXPECT_THROW(map.add_rule("^X", "Dermatology"), ConfigError);
}

TEST(Workload, LabOnlyProvider) {
  const auto w = build_workload(CsvTable{}, parse_csv("order_provider_id,itemid\nP1,1\nP1,2\nP1,3\n"),
                                CsvTable{});
  ASSERT_EQ(w.size(), 1u);
  const auto& r = w.at("P1");
  EXPECT_EQ(r.lab_order_count, 3);
  EXPECT_EQ(r.procedure_count, 0);
  EXPECT_EQ(r.admission_count, 0);
  EXPECT_EQ(r.mortality_count, 0);
  EXPECT_EQ(r.mortality_rate, 0.0);
  EXPECT_EQ(r.los_mean_days, 0.0);
  EXPECT_EQ(r.los_median_days, 0.0);
}

TEST(Workload, MortalityAndLengthOfStay) {
  const auto w = build_workload(
      parse_csv("admit_provider_id,hadm_id,hospital_expire_flag,los_days\nP2,10,1,2.0\nP2,11,0,4.0\n"),
      CsvTable{}, CsvTable{});
  const auto& r = w.at("P2");
  EXPECT_EQ(r.admission_count, 2);
  EXPECT_EQ(r.mortality_count, 1);
  EXPECT_DOUBLE_EQ(r.mortality_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.los_mean_days, 3.0);
  EXPECT_DOUBLE_EQ(r.los_median_days, 3.0);
}

TEST(Workload, EmptyTables) {
  EXPECT_TRUE(build_workload(CsvTable{}, CsvTable{}, CsvTable{}).empty());
  EXPECT_TRUE(build_workload(parse_csv("admit_provider_id,hadm_id,hospital_expire_flag,los_days\n"),
                             parse_csv("order_provider_id,itemid\n"), parse_csv("caregiver_id,itemid\n"))
                  .empty());
}

TEST(Workload, MalformedRowsSkippedAndNegativeLosClamped) {
  Warnings w;
  const auto m = build_workload(
      parse_csv("admit_provider_id,hadm_id,hospital_expire_flag,los_days\n"
                "P1,1,0,-2.5\nP1,2,x,1.0\nP1,3,1\nP1,4,0,3.0\n"),
      CsvTable{}, CsvTable{}, &w);
  const auto& r = m.at("P1");
  EXPECT_EQ(r.admission_count, 2);
  EXPECT_DOUBLE_EQ(r.los_mean_days, 1.5);
  EXPECT_DOUBLE_EQ(r.los_median_days, 1.5);
  EXPECT_EQ(w.size(), 3u);
}

TEST(Workload, ProvidersMergeAcrossTables) {
  const auto m = build_workload(parse_csv("admit_provider_id,hadm_id,hospital_expire_flag,los_days\nA,1,0,1\n"),
                                parse_csv("order_provider_id,itemid\nB,1\n"),
                                parse_csv("caregiver_id,itemid\nA,9\nC,2\n"));
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("A").admission_count, 1);
  EXPECT_EQ(m.at("A").procedure_count, 1);
  EXPECT_EQ(m.at("B").lab_order_count, 1);
  EXPECT_EQ(m.at("C").procedure_count, 1);
}

TEST(Workload, LabCountsSumToWellFormedRows) {
  Rng rng(17);
  std::string csv = "order_provider_id,itemid\n";
  std::size_t good = 0;
  for (int i = 0; i < 500; ++i) {
    if (rng.chance(1, 10)) {
      csv += "broken\n";
    } else {
      csv += "P" + std::to_string(rng.index(20)) + "," + std::to_string(i) + "\n";
      ++good;
    }
  }
  Warnings w;
  const auto m = build_workload(CsvTable{}, parse_csv(csv), CsvTable{}, &w);
  std::int64_t total = 0;
  for (const auto& [id, r] : m) total += r.lab_order_count;
  EXPECT_EQ(static_cast<std::size_t>(total), good);
  EXPECT_EQ(w.size(), 500 - good);
}

TEST(Workload, MissingRequiredColumnIsDataError) {
  EXPECT_THROW(build_workload(parse_csv("admit_provider_id,hadm_id\nP1,1\n"), CsvTable{}, CsvTable{}),
               DataError);
}

TEST(Median, EvenAndOdd) {
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_DOUBLE_EQ(median({}), 0.0);
}
