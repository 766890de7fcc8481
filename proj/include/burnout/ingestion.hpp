#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "burnout/errors.hpp"
#include "burnout/text_io.hpp"

namespace burnout::ingestion {

/// One discharge summary as read from the notes JSONL file.
struct RawNote {
  std::string note_id;
  std::string provider_id;
  std::string text;
  std::string service_raw;  // uppercased, may be empty
  std::string chart_time;   // optional ISO-8601, may be empty

  bool operator==(const RawNote&) const = default;
};

struct LoadResult {
  std::vector<RawNote> notes;
  std::size_t rejected = 0;
};

/// Canonical specialty names. "OTHER" is the fallback for unmatched services.
const std::vector<std::string>& canonical_specialties();
inline constexpr std::string_view kOtherSpecialty = "OTHER";

/// Ordered, first-match-wins rule table mapping service headers to specialties.
class SpecialtyMap {
 public:
  struct Rule {
    std::string pattern;
    std::string specialty;
    std::regex compiled;
  };

  SpecialtyMap() = default;

  /// Adds a rule. Throws ConfigError on a bad pattern or a non-canonical name.
  void add_rule(std::string pattern, std::string specialty);

  const std::vector<Rule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  /// Reads specialty_map.csv (pattern,specialty), preserving file order.
  static SpecialtyMap load(const std::filesystem::path& path);

 private:
  std::vector<Rule> rules_;
};

/// Per-provider workload proxies joined from the three structured tables.
struct WorkloadRecord {
  std::string provider_id;
  std::int64_t lab_order_count = 0;
  std::int64_t procedure_count = 0;
  std::int64_t admission_count = 0;
  std::int64_t mortality_count = 0;
  double mortality_rate = 0.0;
  double los_mean_days = 0.0;
  double los_median_days = 0.0;

  bool operator==(const WorkloadRecord&) const = default;
};

using WorkloadMap = std::map<std::string, WorkloadRecord>;

/// Reads the notes JSONL file. Malformed lines are skipped and counted;
/// an unreadable file or a duplicate note_id throws DataError.
LoadResult load_notes(const std::filesystem::path& path, Warnings* warnings = nullptr);

/// Same as load_notes over in-memory JSONL text.
LoadResult parse_notes(std::string_view jsonl, Warnings* warnings = nullptr);

/// Remainder of the first "Service:" line, trimmed and uppercased; "" if none.
std::string parse_service_header(std::string_view text);

/// Specialty for a service string; "OTHER" for empty or unmatched input.
std::string map_specialty(std::string_view service_raw, const SpecialtyMap& map);

/// Joins admissions, labevents and procedureevents into one record per
/// provider key appearing in any table.
WorkloadMap build_workload(const CsvTable& admissions, const CsvTable& labevents,
                           const CsvTable& procedureevents, Warnings* warnings = nullptr);

/// Median with the even-count convention of averaging the two central values.
double median(std::vector<double> values);

}  // namespace burnout::ingestion
