#pragma once

#include <filesystem>
#include <string>

namespace burnout::testing {

inline std::filesystem::path data_dir() { return BURNOUT_DEFAULT_DATA_DIR; }
inline std::filesystem::path config_dir() { return BURNOUT_CONFIG_DIR; }

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("burnout_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace burnout::testing
