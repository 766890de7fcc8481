#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace burnout {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::vector<std::string> split(std::string_view s, char delimiter);

/// Shortest round-trip decimal rendering; identical bytes on every platform.
std::string format_double(double value);

/// Whole file as bytes. Throws DataError when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

/// Writes bytes, creating parent directories as needed.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Lines without trailing '\n' / '\r'.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Hex FNV-1a digest of a file's contents.
std::string file_digest(const std::filesystem::path& path);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

/// Simple comma-separated table with a header row. No quoting support; the
/// pipeline's tables never contain commas inside fields.
struct CsvTable {
  std::vector<std::string> header;
  /// Data rows paired with their 1-based line number in the file.
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;

  /// Column index by name, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text);

}  // namespace burnout
