#include "burnout/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <json.hpp>

namespace burnout::ingestion {

namespace {

bool starts_with_icase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::optional<std::string> string_field(const nlohmann::json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

const std::vector<std::string>& canonical_specialties() {
  static const std::vector<std::string> names = {
      "Internal Medicine", "Cardiology",        "General Surgery",  "Neurosurgery",
      "Neurology",         "Orthopaedics",      "Obstetrics and Gynecology",
      "Psychiatry",        "Radiology",         "Oncology",         "Urology",
      "Cardiothoracic Surgery", "Vascular Surgery", "Plastic Surgery", "Trauma Surgery",
      "Otolaryngology",    "Ophthalmology",     "Pulmonology",      "Gastroenterology",
      "Nephrology"};
  return names;
}

void SpecialtyMap::add_rule(std::string pattern, std::string specialty) {
  const auto& names = canonical_specialties();
  if (specialty != kOtherSpecialty &&
      std::find(names.begin(), names.end(), specialty) == names.end()) {
    throw ConfigError("specialty map: unknown specialty '" + specialty + "'");
  }
  if (trim(pattern).empty()) throw ConfigError("specialty map: empty pattern");
  std::regex compiled;
  try {
    compiled = std::regex(pattern, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw ConfigError("specialty map: bad pattern '" + pattern + "': " + e.what());
  }
  rules_.push_back(Rule{std::move(pattern), std::move(specialty), std::move(compiled)});
}

SpecialtyMap SpecialtyMap::load(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const auto pattern_col = table.column("pattern");
  const auto specialty_col = table.column("specialty");
  if (!pattern_col || !specialty_col) {
    throw ConfigError("specialty map " + path.string() + ": expected header pattern,specialty");
  }
  SpecialtyMap map;
  for (const auto& [line, row] : table.rows) {
    if (row.size() != table.header.size()) {
      throw ConfigError("specialty map " + path.string() + ":" + std::to_string(line) +
                        ": wrong field count");
    }
    map.add_rule(row[*pattern_col], row[*specialty_col]);
  }
  if (map.empty()) throw ConfigError("specialty map " + path.string() + " has no rules");
  return map;
}

LoadResult parse_notes(std::string_view jsonl, Warnings* warnings) {
  LoadResult result;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (std::string line : split(jsonl, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    const auto reject = [&](const std::string& why) {
      ++result.rejected;
      warn(warnings, "notes line " + std::to_string(line_no) + ": " + why);
    };

    nlohmann::json obj = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) {
      reject("not a JSON object");
      continue;
    }
    auto note_id = string_field(obj, "note_id");
    auto provider_id = string_field(obj, "provider_id");
    auto text = string_field(obj, "text");
    if (!note_id || trim(*note_id).empty()) {
      reject("missing note_id");
      continue;
    }
    if (!provider_id || trim(*provider_id).empty()) {
      reject("missing provider_id");
      continue;
    }
    if (!text || trim(*text).empty()) {
      reject("missing or empty text");
      continue;
    }
    if (!seen.insert(*note_id).second) {
      throw DataError("notes line " + std::to_string(line_no) + ": duplicate note_id '" +
                      *note_id + "'");
    }

    RawNote note;
    note.note_id = std::move(*note_id);
    note.provider_id = std::move(*provider_id);
    note.text = std::move(*text);
    if (auto service = string_field(obj, "service"); service && !trim(*service).empty()) {
      note.service_raw = to_upper(trim(*service));
    } else {
      note.service_raw = parse_service_header(note.text);
    }
    if (auto chart_time = string_field(obj, "chart_time")) note.chart_time = *chart_time;
    result.notes.push_back(std::move(note));
  }
  return result;
}

LoadResult load_notes(const std::filesystem::path& path, Warnings* warnings) {
  return parse_notes(read_file(path), warnings);
}

std::string parse_service_header(std::string_view text) {
  constexpr std::string_view kKey = "service:";
  for (const std::string& line : split(text, '\n')) {
    std::string_view view(line);
    while (!view.empty() && std::isspace(static_cast<unsigned char>(view.front()))) {
      view.remove_prefix(1);
    }
    if (starts_with_icase(view, kKey)) return to_upper(trim(view.substr(kKey.size())));
  }
  return "";
}

std::string map_specialty(std::string_view service_raw, const SpecialtyMap& map) {
  const std::string service = trim(service_raw);
  if (service.empty()) return std::string(kOtherSpecialty);
  for (const auto& rule : map.rules()) {
    if (std::regex_search(service, rule.compiled)) return rule.specialty;
  }
  return std::string(kOtherSpecialty);
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

WorkloadMap build_workload(const CsvTable& admissions, const CsvTable& labevents,
                           const CsvTable& procedureevents, Warnings* warnings) {
  WorkloadMap out;
  std::map<std::string, std::vector<double>> stays;

  const auto record = [&](const std::string& provider) -> WorkloadRecord& {
    auto& r = out[provider];
    r.provider_id = provider;
    return r;
  };
  const auto require = [&](const CsvTable& table, const char* table_name,
                           std::initializer_list<const char*> columns) {
    std::vector<std::size_t> idx;
    if (table.header.empty()) return idx;  // empty table: no header, no rows
    for (const char* c : columns) {
      const auto col = table.column(c);
      if (!col) {
        throw DataError(std::string(table_name) + ": missing column '" + c + "'");
      }
      idx.push_back(*col);
    }
    return idx;
  };
  const auto skip = [&](const char* table_name, std::size_t line, const std::string& why) {
    warn(warnings, std::string(table_name) + " line " + std::to_string(line) + ": " + why);
  };

  // Simple count tables.
  const auto count_rows = [&](const CsvTable& table, const char* table_name, const char* key_col,
                              std::int64_t WorkloadRecord::*field) {
    const auto idx = require(table, table_name, {key_col, "itemid"});
    for (const auto& [line, row] : table.rows) {
      if (row.size() != table.header.size()) {
        skip(table_name, line, "wrong field count");
        continue;
      }
      const std::string& provider = row[idx[0]];
      if (provider.empty() || row[idx[1]].empty()) {
        skip(table_name, line, "empty key field");
        continue;
      }
      record(provider).*field += 1;
    }
  };
  count_rows(labevents, "labevents", "order_provider_id", &WorkloadRecord::lab_order_count);
  count_rows(procedureevents, "procedureevents", "caregiver_id", &WorkloadRecord::procedure_count);

  const auto idx = require(admissions, "admissions",
                           {"admit_provider_id", "hadm_id", "hospital_expire_flag", "los_days"});
  for (const auto& [line, row] : admissions.rows) {
    if (row.size() != admissions.header.size()) {
      skip("admissions", line, "wrong field count");
      continue;
    }
    const std::string& provider = row[idx[0]];
    const auto flag = parse_int(row[idx[2]]);
    auto los = parse_double(row[idx[3]]);
    if (provider.empty() || row[idx[1]].empty()) {
      skip("admissions", line, "empty key field");
      continue;
    }
    if (!flag || (*flag != 0 && *flag != 1)) {
      skip("admissions", line, "hospital_expire_flag must be 0 or 1");
      continue;
    }
    if (!los || !std::isfinite(*los)) {
      skip("admissions", line, "unparseable los_days");
      continue;
    }
    if (*los < 0.0) {
      warn(warnings, "admissions line " + std::to_string(line) + ": negative los_days clamped to 0");
      los = 0.0;
    }
    auto& r = record(provider);
    r.admission_count += 1;
    r.mortality_count += *flag;
    stays[provider].push_back(*los);
  }

  for (auto& [provider, r] : out) {
    if (r.admission_count > 0) {
      r.mortality_rate = static_cast<double>(r.mortality_count) / static_cast<double>(r.admission_count);
      const auto& v = stays[provider];
      double sum = 0.0;
      for (double x : v) sum += x;
      r.los_mean_days = sum / static_cast<double>(v.size());
      r.los_median_days = median(v);
    }
  }
  return out;
}

}  // namespace burnout::ingestion
