#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "lapkit/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"lapkit: desk-scale resolvent, spectral and scattering experiments on a periodic grid"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int workers = -1;
  long long seed = -1;

  for (const std::string& kind : lapkit::known_kinds()) {
    auto* sub = app.add_subcommand(kind, "run a '" + kind + "' experiment");
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out_dir, "output directory (default: current)");
    sub->add_option("--workers", workers, "worker threads (default: LAPKIT_WORKERS or all cores)");
    sub->add_option("--seed", seed, "seed override (default: config seed)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    lapkit::ExperimentConfig cfg = lapkit::load_config(config_path, kind);
    lapkit::RunOptions opt;
    opt.out_dir = out_dir;
    opt.seed = seed >= 0 ? std::uint64_t(seed) : std::uint64_t(cfg.num("seed", 1));
    if (workers >= 0) {
      opt.workers = workers;
    } else if (const char* env = std::getenv("LAPKIT_WORKERS")) {
      opt.workers = std::atoi(env);
    } else {
      opt.workers = 0;
    }
    auto outcome = lapkit::run_experiment(cfg, opt);
    if (!outcome.ok) {
      std::fprintf(stderr, "lapkit %s: numerical contract violated: %s\n", kind.c_str(),
                   outcome.message.c_str());
      return 3;
    }
    std::printf("lapkit %s: ok (%s)\n", kind.c_str(), outcome.manifest_path.c_str());
    return 0;
  } catch (const lapkit::ConfigError& e) {
    std::fprintf(stderr, "lapkit %s: config error: %s\n", kind.c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lapkit %s: error: %s\n", kind.c_str(), e.what());
    return 3;
  }
}
