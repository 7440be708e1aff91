#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace blight::pipeline {

/// Declarative pipeline settings read from a `key = value` text file.
///
/// Lines starting with '#' are comments; lists are comma separated. Keys not
/// set in the file take the defaults listed in default_settings(). Unknown
/// keys are rejected so typos do not silently fall back to defaults.
class PipelineConfig {
 public:
  PipelineConfig();

  static PipelineConfig parse(const std::string& text, const std::string& origin = "<config>");
  static PipelineConfig load(const std::filesystem::path& path);

  /// Overrides one key (CLI flags land here). Throws kConfiguration for
  /// unknown keys.
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  bool is_set(const std::string& key) const;

  std::string get_string(const std::string& key) const { return get(key); }
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::filesystem::path get_path(const std::string& key) const;

  /// Effective settings, including defaults.
  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  /// 16 hex digits of FNV-1a 64 over the sorted "key=value" lines of every
  /// setting that influences results (threads and out excluded).
  std::string hash() const;

  /// Directory relative paths in the file are resolved against.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, bool> explicit_;
  std::filesystem::path base_dir_;
};

const std::map<std::string, std::string>& default_settings();

}  // namespace blight::pipeline
