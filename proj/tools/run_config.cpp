#include "run_config.hpp"

#include <cstdio>
#include <cstdlib>

#include "lconv/error.hpp"
#include "lconv/matrix_io.hpp"

namespace lieconv::cli {

namespace {

const nlohmann::json& empty_object() {
  static const nlohmann::json e = nlohmann::json::object();
  return e;
}

}  // namespace

ConfigNode::ConfigNode(const nlohmann::json& source, nlohmann::json& echo, std::string path)
    : source_(source), echo_(echo), path_(std::move(path)) {
  if (!source_.is_object()) throw ConfigError(path_ + " must be a JSON object");
  if (!echo_.is_object()) echo_ = nlohmann::json::object();
}

std::string ConfigNode::where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

const nlohmann::json* ConfigNode::lookup(const std::string& key) {
  used_.insert(key);
  const auto it = source_.find(key);
  return it == source_.end() ? nullptr : &*it;
}

std::uint64_t ConfigNode::get_u64(const std::string& key, std::uint64_t fallback) {
  const auto* v = lookup(key);
  std::uint64_t out = fallback;
  if (v) {
    if (v->is_number_unsigned()) {
      out = v->get<std::uint64_t>();
    } else if (v->is_number_integer()) {
      throw ConfigError(where(key) + " must be non-negative");
    } else {
      throw ConfigError(where(key) + " must be a non-negative integer");
    }
  }
  echo_[key] = out;
  return out;
}

std::size_t ConfigNode::get_size(const std::string& key, std::size_t fallback) {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

double ConfigNode::get_double(const std::string& key, double fallback) {
  const auto* v = lookup(key);
  double out = fallback;
  if (v) {
    if (!v->is_number()) throw ConfigError(where(key) + " must be a number");
    out = v->get<double>();
  }
  echo_[key] = out;
  return out;
}

bool ConfigNode::get_bool(const std::string& key, bool fallback) {
  const auto* v = lookup(key);
  bool out = fallback;
  if (v) {
    if (!v->is_boolean()) throw ConfigError(where(key) + " must be true or false");
    out = v->get<bool>();
  }
  echo_[key] = out;
  return out;
}

std::string ConfigNode::get_string(const std::string& key, const std::string& fallback) {
  const auto* v = lookup(key);
  std::string out = fallback;
  if (v) {
    if (!v->is_string()) throw ConfigError(where(key) + " must be a string");
    out = v->get<std::string>();
  }
  echo_[key] = out;
  return out;
}

std::string ConfigNode::require_string(const std::string& key) {
  if (!source_.contains(key)) throw ConfigError(where(key) + " is required");
  return get_string(key, "");
}

std::vector<std::size_t> ConfigNode::get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) {
  const auto* v = lookup(key);
  std::vector<std::size_t> out = fallback;
  if (v) {
    if (!v->is_array()) throw ConfigError(where(key) + " must be an array of non-negative integers");
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_number_unsigned()) throw ConfigError(where(key) + " must be an array of non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
  }
  echo_[key] = out;
  return out;
}

std::vector<double> ConfigNode::get_doubles(const std::string& key, const std::vector<double>& fallback) {
  const auto* v = lookup(key);
  std::vector<double> out = fallback;
  if (v) {
    if (!v->is_array()) throw ConfigError(where(key) + " must be an array of numbers");
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
  }
  echo_[key] = out;
  return out;
}

ConfigNode ConfigNode::child(const std::string& key) {
  const auto* v = lookup(key);
  if (v && !v->is_object()) throw ConfigError(where(key) + " must be an object");
  echo_[key] = nlohmann::json::object();
  return ConfigNode(v ? *v : empty_object(), echo_[key], where(key));
}

void ConfigNode::finish() const {
  for (const auto& [key, value] : source_.items()) {
    if (!used_.contains(key)) throw ConfigError("unknown config key '" + where(key) + "'");
  }
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

ConfigNode read_globals(RunConfig& cfg, const std::string& command) {
  ConfigNode root(cfg.source, cfg.echo, "");
  cfg.seed = root.get_u64("seed", 0);
  cfg.out_dir = root.get_string("out_dir", "out/" + command);
  if (const char* env = std::getenv("LCONV_OUT"); env && *env) {
    cfg.out_dir = env;
    cfg.echo["out_dir"] = cfg.out_dir.string();
  }
  cfg.threads = root.get_size("threads", 1);
  if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
  return root;
}

std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace lieconv::cli
