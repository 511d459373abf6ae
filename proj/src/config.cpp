#include "lapkit/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lapkit {

const char* kDefaultsVersion = "lapkit-defaults-1";

const std::map<std::string, std::string>& builtin_defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"grid.d", "2"},
      {"grid.n", "64"},
      {"grid.box", "16"},
      {"seed", "1"},
      {"workers", "0"},
      {"solver.restart", "50"},
      {"solver.tol", "1e-8"},
      {"solver.max_iters", "4000"},
      {"eps.start", "0.1"},
      {"eps.stop", "0.001"},
      {"eps.count", "7"},
      {"gamma.start", "1"},
      {"gamma.stop", "0.00390625"},
      {"gamma.count", "5"},
      {"evolve.dt", "0.02"},
      {"window.transition", "0.4"},
  };
  return defaults;
}

namespace {

const std::set<std::string> kCommonKeys = {
    "kind", "seed", "workers", "out", "grid.d", "grid.n", "grid.box",
};

const std::set<std::string> kPotentialKeys = {
    "potential.name",   "potential.path",   "potential.depth",  "potential.radius",
    "potential.edge_width", "potential.amp", "potential.sigma", "potential.s",
    "potential.amp_re", "potential.amp_im", "potential.q0",     "potential.recipe",
};

std::set<std::string> kind_keys(const std::string& kind) {
  std::set<std::string> keys = kCommonKeys;
  auto add = [&keys](std::initializer_list<const char*> more) {
    for (const char* k : more) keys.insert(k);
  };
  if (kind == "kernel") {
    add({"kernel.lambda", "kernel.eps", "kernel.side", "kernel.r_min", "kernel.r_max",
         "kernel.r_count"});
    return keys;
  }
  keys.insert(kPotentialKeys.begin(), kPotentialKeys.end());
  if (kind == "norms") {
    add({"norms.alpha", "norms.p", "norms.split_lambda"});
  } else if (kind == "admissible") {
    // potential keys only
  } else if (kind == "lap-sweep") {
    add({"sweep.lambda_min", "sweep.lambda_max", "sweep.lambda_count", "sweep.resonant_count",
         "sweep.components", "eps.start", "eps.stop", "eps.count", "solver.restart",
         "solver.tol", "solver.max_iters"});
  } else if (kind == "scan") {
    add({"scan.lambda_min", "scan.lambda_max", "scan.lambda_count", "scan.dip_threshold",
         "eps.start", "eps.stop", "eps.count", "solver.restart", "solver.tol",
         "solver.max_iters", "scan.save_kernels"});
  } else if (kind == "eigen") {
    add({"eigen.count", "eigen.window_min", "eigen.window_max", "eigen.tol", "eigen.max_steps",
         "eigen.decay_N", "eigen.save_fields"});
  } else if (kind == "weighted") {
    add({"weighted.lambda", "weighted.N", "gamma.start", "gamma.stop", "gamma.count",
         "weighted.probe", "weighted.sigma"});
  } else if (kind == "trace") {
    add({"trace.lambda", "trace.side", "trace.sigma", "eps.start", "eps.stop", "eps.count",
         "trace.quad_resolution"});
  } else if (kind == "commutation") {
    add({"commutation.alpha", "commutation.N", "gamma.start", "gamma.stop", "gamma.count"});
  } else if (kind == "evolve") {
    add({"evolve.t", "evolve.dt", "evolve.method", "evolve.sigma", "evolve.checkpoints"});
  } else if (kind == "smoothing") {
    add({"smoothing.a", "smoothing.b", "smoothing.T", "evolve.dt", "window.transition",
         "window.degree", "smoothing.sigma"});
  } else if (kind == "waveop") {
    add({"waveop.a", "waveop.b", "waveop.t_ladder", "evolve.dt", "waveop.sigma",
         "window.transition", "waveop.completeness"});
  } else if (kind == "verify") {
    // common keys only; the battery fixes its own grids
  } else {
    throw ConfigError("unknown experiment kind '" + kind + "'");
  }
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  std::size_t b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

} // namespace

const std::vector<std::string>& known_kinds() {
  static const std::vector<std::string> kinds = {
      "kernel", "norms", "admissible", "lap-sweep", "scan",      "eigen",  "weighted",
      "trace",  "commutation", "evolve", "smoothing", "waveop", "verify"};
  return kinds;
}

std::string ExperimentConfig::str(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double ExperimentConfig::num(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    std::size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + it->second);
  }
}

double ExperimentConfig::num_required(const std::string& key) const {
  if (!has(key)) throw ConfigError("missing required config key '" + key + "'");
  return num(key, 0.0);
}

int ExperimentConfig::integer(const std::string& key, int fallback) const {
  double v = num(key, double(fallback));
  if (std::abs(v - std::round(v)) > 1e-9)
    throw ConfigError("config key '" + key + "' must be an integer");
  return int(std::lround(v));
}

bool ExperimentConfig::flag(const std::string& key, bool fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "' must be true/false");
}

std::vector<double> ExperimentConfig::ladder(const std::string& prefix, double def_start,
                                             double def_stop, int def_count) const {
  double start = num(prefix + ".start", def_start);
  double stop = num(prefix + ".stop", def_stop);
  int count = integer(prefix + ".count", def_count);
  if (!(start > 0.0) || !(stop > 0.0) || count < 1)
    throw ConfigError("ladder '" + prefix + "' needs positive endpoints and count >= 1");
  std::vector<double> out;
  if (count == 1) {
    out.push_back(start);
    return out;
  }
  double q = std::pow(stop / start, 1.0 / double(count - 1));
  double v = start;
  for (int i = 0; i < count; ++i) {
    out.push_back(v);
    v *= q;
  }
  return out;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& kind) {
  if (std::find(known_kinds().begin(), known_kinds().end(), kind) == known_kinds().end())
    throw ConfigError("unknown experiment kind '" + kind + "'");
  ExperimentConfig cfg;
  cfg.kind = kind;

  std::istringstream is(text);
  std::string line;
  std::ostringstream canonical;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string stripped = line;
    std::size_t hash = stripped.find('#');
    if (hash != std::string::npos) stripped = stripped.substr(0, hash);
    stripped = trim(stripped);
    if (stripped.empty()) continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(stripped.substr(0, eq));
    std::string val = trim(stripped.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    if (cfg.kv.count(key))
      throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    cfg.kv[key] = val;
  }

  if (cfg.has("kind") && cfg.str("kind") != kind)
    throw ConfigError("config kind '" + cfg.str("kind") + "' does not match requested '" + kind +
                      "'");

  auto allowed = kind_keys(kind);
  for (const auto& [key, val] : cfg.kv) {
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + key + "' for kind '" + kind + "'");
  }

  // canonical text: sorted key=value lines (std::map iterates sorted)
  for (const auto& [key, val] : cfg.kv) canonical << key << "=" << val << "\n";
  cfg.source_text = canonical.str();
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& kind) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str(), kind);
}

std::string config_hash(const ExperimentConfig& cfg, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  feed(cfg.kind);
  feed("\n");
  feed(cfg.source_text);
  feed(std::to_string(seed));
  feed(kDefaultsVersion);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace lapkit
