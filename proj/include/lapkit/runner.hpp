#ifndef LAPKIT_RUNNER_HPP
#define LAPKIT_RUNNER_HPP

#include <string>

#include "lapkit/config.hpp"

namespace lapkit {

struct RunOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int workers = 0; // 0: hardware concurrency
};

struct RunOutcome {
  bool ok = true;           // numerical contracts honored
  std::string message;      // failure description when !ok
  std::string manifest_path;
};

/// Execute one experiment and write its artifacts (manifest.json plus
/// kind-specific record files) under out_dir. Validation problems throw
/// ConfigError; numerical contract violations are reported in the outcome.
RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opt);

} // namespace lapkit

#endif
