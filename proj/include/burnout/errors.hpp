#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace burnout {

/// Invalid configuration or parameter values. Maps to CLI exit code 3.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot be processed (unreadable file, duplicate ids, ...).
/// Maps to CLI exit code 4.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An upstream pipeline artifact is missing. Maps to CLI exit code 2.
class MissingArtifactError : public std::runtime_error {
 public:
  MissingArtifactError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Non-fatal diagnostics collected by loaders and fitters.
using Warnings = std::vector<std::string>;

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->push_back(std::move(message));
}

}  // namespace burnout
