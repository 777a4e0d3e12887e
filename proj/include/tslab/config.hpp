#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tslab {

/// Flat key=value configuration with [section] headers. Keys are addressed as
/// "section.key" (or bare "key" before the first section). '#' and ';' start
/// comments. Every lookup records the resolved value, so the manifest echoes
/// defaults as well as explicit settings.
class Config {
 public:
  Config() = default;

  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback);
  std::string require_string(const std::string& key);
  double get_double(const std::string& key, double fallback);
  std::int64_t get_int(const std::string& key, std::int64_t fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  /// Comma-separated list of reals.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);

  /// Keys present in the file that no lookup consumed (likely typos).
  std::vector<std::string> unused_keys() const;

  /// Every resolved key/value, grouped into sections, in sorted order.
  std::string manifest() const;

  const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }

 private:
  std::optional<std::string> lookup(const std::string& key);

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace tslab
