#ifndef LAPKIT_CONFIG_HPP
#define LAPKIT_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lapkit/errors.hpp"

namespace lapkit {

/// Flat key = value configuration with dotted sections. Comments start
/// with '#'. Unknown keys are rejected against the per-kind schema.
struct ExperimentConfig {
  std::string kind;
  std::map<std::string, std::string> kv;
  std::string source_text; // canonicalized, hashed into the manifest

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string str(const std::string& key, const std::string& fallback = "") const;
  double num(const std::string& key, double fallback) const;
  double num_required(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  bool flag(const std::string& key, bool fallback) const;

  /// Geometric ladder from <prefix>.start/.stop/.count.
  std::vector<double> ladder(const std::string& prefix, double def_start, double def_stop,
                             int def_count) const;
};

/// Parse and validate a config file for the given experiment kind (the
/// config may restate the kind; a mismatch is an error).
ExperimentConfig load_config(const std::string& path, const std::string& kind);
ExperimentConfig parse_config_text(const std::string& text, const std::string& kind);

const std::vector<std::string>& known_kinds();

/// FNV-1a hash of the canonical config text plus the seed.
std::string config_hash(const ExperimentConfig& cfg, std::uint64_t seed);

/// Versioned defaults echoed into every run manifest.
extern const char* kDefaultsVersion;
const std::map<std::string, std::string>& builtin_defaults();

} // namespace lapkit

#endif
