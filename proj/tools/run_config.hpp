#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

namespace lieconv::cli {

/// One JSON object of a run config. Every lookup records the key and its
/// resolved value (default included) in an echo tree; finish() rejects any
/// key that was never looked up.
class ConfigNode {
 public:
  ConfigNode(const nlohmann::json& source, nlohmann::json& echo, std::string path);

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  std::size_t get_size(const std::string& key, std::size_t fallback);
  double get_double(const std::string& key, double fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string get_string(const std::string& key, const std::string& fallback);
  std::string require_string(const std::string& key);
  std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback);
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback);

  bool has(const std::string& key) const { return source_.contains(key); }
  /// Sub-object; a missing key reads as an empty object.
  ConfigNode child(const std::string& key);

  void finish() const;

 private:
  const nlohmann::json* lookup(const std::string& key);
  std::string where(const std::string& key) const;

  const nlohmann::json& source_;
  nlohmann::json& echo_;
  std::string path_;
  std::set<std::string> used_;
};

/// Parsed config file plus the resolved echo.
struct RunConfig {
  nlohmann::json source;
  nlohmann::json echo = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::size_t threads = 1;
};

/// Reads a JSON config (IoError when unreadable, ConfigError when malformed).
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Resolves the global fields; LCONV_OUT replaces out_dir when set.
ConfigNode read_globals(RunConfig& cfg, const std::string& command);

/// FNV-1a over the canonical dump of a JSON value.
std::string config_hash(const nlohmann::json& j);

}  // namespace lieconv::cli
