#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "lapkit/catalog.hpp"
#include "lapkit/runner.hpp"

using namespace lapkit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("config parsing and validation") {
  SUBCASE("well-formed text with comments") {
    auto cfg = parse_config_text("# demo\nkind = scan\ngrid.d = 2\n grid.n = 48 # inline\n"
                                 "scan.lambda_min = -4\nscan.lambda_max = -0.5\n",
                                 "scan");
    CHECK(cfg.integer("grid.n", 0) == 48);
    CHECK(cfg.num("scan.lambda_min", 0.0) == -4.0);
    CHECK(cfg.num("grid.box", 16.0) == 16.0); // default
  }
  SUBCASE("unknown keys are rejected with the offending key named") {
    try {
      parse_config_text("grid.bogus = 2\n", "scan");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("grid.bogus") != std::string::npos);
    }
  }
  SUBCASE("kind mismatch, duplicates, malformed numbers") {
    CHECK_THROWS_AS(parse_config_text("kind = scan\n", "eigen"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("grid.n = 2\ngrid.n = 4\n", "verify"), ConfigError);
    auto cfg = parse_config_text("grid.n = abc\n", "verify");
    CHECK_THROWS_AS(cfg.integer("grid.n", 0), ConfigError);
    CHECK_THROWS_AS(parse_config_text("grid.n\n", "verify"), ConfigError);
  }
  SUBCASE("ladders must stay positive") {
    auto cfg = parse_config_text("eps.start = 0.1\neps.stop = 0\neps.count = 4\n", "lap-sweep");
    CHECK_THROWS_AS(cfg.ladder("eps", 0.1, 0.001, 7), ConfigError);
  }
  SUBCASE("hash covers kind, content and seed") {
    auto a = parse_config_text("grid.n = 32\n", "verify");
    auto b = parse_config_text("grid.n = 48\n", "verify");
    CHECK(config_hash(a, 1) != config_hash(b, 1));
    CHECK(config_hash(a, 1) != config_hash(a, 2));
    CHECK(config_hash(a, 1) == config_hash(a, 1));
  }
}

TEST_CASE("catalog potentials from config parameters") {
  GridSpec s{2, 32, 8.0};
  SUBCASE("square well sample values") {
    Field v = catalog_field(s, "square_well", {{"depth", 3.0}, {"radius", 1.0}});
    double vmin = 0.0;
    for (auto& x : v.v) vmin = std::min(vmin, x.real());
    CHECK(vmin == doctest::Approx(-3.0));
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i]) > 0.0) CHECK(radius2_at(s, i) <= 1.0 + 1e-12);
  }
  SUBCASE("power law at the origin") {
    Field v = catalog_field(s, "power_law", {{"amp", 1.0}, {"s", 2.0}});
    std::array<int, 3> i0{s.n / 2, s.n / 2, 0};
    CHECK(v[flatten(s, i0)].real() == doctest::Approx(1.0));
  }
  SUBCASE("vector bump accepts complex amplitudes") {
    Field a = catalog_field(s, "vector_bump", {{"amp_re", 0.5}, {"amp_im", -0.25}, {"sigma", 1.0}});
    std::array<int, 3> i0{s.n / 2, s.n / 2, 0};
    CHECK(a[flatten(s, i0)] == cplx(0.5, -0.25));
    CHECK(catalog_is_vector("vector_bump"));
    CHECK(!catalog_is_vector("square_well"));
  }
  SUBCASE("unknown names are rejected") {
    CHECK_THROWS_AS(catalog_field(s, "no_such", {}), ContractError);
    CHECK_THROWS_AS(catalog_scalar(s, "vector_bump", {}), ContractError);
    CHECK_THROWS_AS(catalog_vector(s, "square_well", {}), ContractError);
  }
}

TEST_CASE("runner writes manifests and deterministic records") {
  fs::path dir = fs::temp_directory_path() / "lapkit_cli_test";
  fs::remove_all(dir);

  SUBCASE("admissible report round trip") {
    auto cfg = parse_config_text(
        "grid.d = 2\ngrid.n = 64\ngrid.box = 16\npotential.name = square_well\n"
        "potential.depth = 3\npotential.radius = 1\n",
        "admissible");
    RunOptions opt;
    opt.out_dir = (dir / "adm").string();
    auto outcome = run_experiment(cfg, opt);
    CHECK(outcome.ok);
    std::string j = slurp(dir / "adm" / "admissible.json");
    CHECK(j.find("\"passed\": true") != std::string::npos);
    CHECK(!slurp(dir / "adm" / "manifest.json").empty());
  }
  SUBCASE("records are byte-identical across reruns") {
    auto cfg = parse_config_text(
        "grid.d = 2\ngrid.n = 32\ngrid.box = 16\n"
        "sweep.lambda_min = 0.5\nsweep.lambda_max = 1.5\nsweep.lambda_count = 3\n"
        "sweep.resonant_count = 1\neps.start = 0.1\neps.stop = 0.01\neps.count = 2\n",
        "lap-sweep");
    RunOptions opt;
    opt.workers = 1;
    opt.out_dir = (dir / "s1").string();
    CHECK(run_experiment(cfg, opt).ok);
    opt.out_dir = (dir / "s2").string();
    CHECK(run_experiment(cfg, opt).ok);
    std::string a = slurp(dir / "s1" / "records.jsonl");
    std::string b = slurp(dir / "s2" / "records.jsonl");
    CHECK(!a.empty());
    CHECK(a == b);
    CHECK(a.find("\"config\":") != std::string::npos);
  }
  SUBCASE("potential files load through the runner") {
    GridSpec s{2, 32, 16.0};
    Field v = catalog_field(s, "gaussian", {{"amp", -2.0}, {"sigma", 1.0}});
    fs::create_directories(dir);
    fs::path vp = dir / "pot.lapf1";
    write_lapf1(vp.string(), v);
    auto cfg = parse_config_text("grid.d = 2\ngrid.n = 32\ngrid.box = 16\npotential.path = " +
                                     vp.string() + "\nnorms.alpha = 1\nnorms.p = 2\n",
                                 "norms");
    RunOptions opt;
    opt.out_dir = (dir / "norms").string();
    CHECK(run_experiment(cfg, opt).ok);
    CHECK(slurp(dir / "norms" / "norms.json").find("x_star") != std::string::npos);
  }
  fs::remove_all(dir);
}
