#include "lapkit/runner.hpp"

#include <chrono>
#include <random>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "lapkit/catalog.hpp"
#include "lapkit/dynamics.hpp"
#include "lapkit/harness.hpp"

namespace lapkit {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Field seeded_gaussian(const GridSpec& s, double sigma) {
  return make_field(s, [&](const std::array<double, 3>& x) {
    double r2 = 0.0;
    for (int a = 0; a < s.d; ++a) r2 += x[a] * x[a];
    return cplx(std::exp(-r2 / (2.0 * sigma * sigma)), 0.0);
  });
}

GridSpec grid_from(const ExperimentConfig& cfg) {
  GridSpec s;
  s.d = cfg.integer("grid.d", 2);
  s.n = cfg.integer("grid.n", 64);
  s.box = cfg.num("grid.box", 16.0);
  s.validate();
  return s;
}

ParamMap potential_params(const ExperimentConfig& cfg) {
  ParamMap pm;
  for (const char* key : {"depth", "radius", "edge_width", "amp", "sigma", "s", "amp_re",
                          "amp_im", "q0"}) {
    std::string full = std::string("potential.") + key;
    if (cfg.has(full)) pm[key] = cfg.num_required(full);
  }
  return pm;
}

PerturbationOperator potential_from(const ExperimentConfig& cfg, const GridSpec& s) {
  PerturbationOperator P = PerturbationOperator::none_operator();
  if (cfg.has("potential.path")) {
    Field f = read_lapf1(cfg.str("potential.path"));
    if (!(f.spec == s)) throw ConfigError("potential file grid does not match grid.*");
    if (cfg.has("potential.q0"))
      P = PerturbationOperator::scalar(ScalarPotential(std::move(f), cfg.num_required("potential.q0")));
    else
      P = PerturbationOperator::scalar(ScalarPotential(std::move(f)));
  } else if (cfg.has("potential.name")) {
    std::string name = cfg.str("potential.name");
    ParamMap pm = potential_params(cfg);
    if (catalog_is_vector(name)) {
      OmegaRecipe recipe = OmegaRecipe::y_optimized;
      std::string r = cfg.str("potential.recipe", "y");
      if (r == "lp")
        recipe = OmegaRecipe::lp_optimized;
      else if (r == "kato")
        recipe = OmegaRecipe::kato_optimized;
      else if (r != "y")
        throw ConfigError("potential.recipe must be one of lp, y, kato");
      P = PerturbationOperator::first_order(catalog_vector(s, name, pm), recipe);
    } else {
      P = PerturbationOperator::scalar(catalog_scalar(s, name, pm));
    }
  }
  if (cfg.flag("potential.force", false)) P.force = true;
  return P;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

json admissibility_json(const AdmissibilityReport& r) {
  json curve = json::array();
  for (auto& [dl, v] : r.kato_curve) curve.push_back({{"delta", dl}, {"y_norm", v}});
  return json{{"kind", r.kind},       {"q0", r.q0},          {"n1", r.n1},
              {"n2", r.n2},           {"n3", r.n3},          {"n1_pass", r.n1_pass},
              {"n2_pass", r.n2_pass}, {"n3_pass", r.n3_pass}, {"passed", r.passed},
              {"kato_curve", curve},  {"notes", r.notes}};
}

struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

// deterministic random field (the library generator, fixed seed)
Field noise_field(const GridSpec& s, std::uint64_t seed, double tau) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return (double(rng() >> 11) + 1.0) / 9007199254740993.0; };
  Field f(s, Rep::physical);
  for (auto& x : f.v) x = cplx(2.0 * unit() - 1.0, 2.0 * unit() - 1.0);
  if (tau <= 0.0) return f;
  Field g = to_frequency(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto xi = freq_at(s, i);
    double s2 = 0.0;
    for (int a = 0; a < s.d; ++a) s2 += xi[a] * xi[a];
    g[i] *= std::exp(-tau * s2);
  }
  return to_physical(g);
}

double field_rel_err(const Field& a, const Field& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

std::vector<Check> verify_battery(std::uint64_t seed) {
  std::vector<Check> checks;
  auto push = [&checks](std::string name, double value, double threshold) {
    Check c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.pass = value <= threshold;
    checks.push_back(std::move(c));
  };

  GridSpec s{2, 64, 16.0};
  const ShellDecomposition& sh = shells_for(s);

  {
    Field f = noise_field(s, seed + 1, 0.0);
    push("transform_round_trip", field_rel_err(to_physical(to_frequency(f)), f), 1e-12);
    double a = lp_norm(f, 2.0), b = freq_l2_norm(to_frequency(f));
    push("parseval", std::abs(a - b) / a, 1e-12);
    Field g = apply_multiplier(apply_multiplier(f, Multiplier::sobolev(1.3)),
                               Multiplier::sobolev(-1.3));
    push("sobolev_inverse_pair", field_rel_err(g, f), 1e-12);
  }
  {
    Field g = noise_field(s, seed + 2, 0.0);
    SpectralPoint pt{2.0, 0.1, BoundarySide::plus};
    Field back = apply_multiplier(apply_r0(g, pt), Multiplier::helmholtz(pt.z()));
    push("resolvent_right_inverse", field_rel_err(back, g), 1e-10);
    Field gb = g;
    for (auto& x : gb.v) x = std::conj(x);
    SpectralPoint ptm{2.0, -0.1, BoundarySide::minus};
    Field lhs = apply_r0(gb, ptm);
    Field rhs = apply_r0(g, pt);
    for (auto& x : rhs.v) x = std::conj(x);
    push("resolvent_conjugation", field_rel_err(lhs, rhs), 1e-13);
  }
  {
    double worst = 0.0;
    for (int t = 0; t < 25; ++t) {
      Field u = noise_field(s, seed + 100 + t, 0.2);
      Field f = noise_field(s, seed + 200 + t, 0.2);
      double p = std::abs(pairing(u, f));
      double b1 = l2_norm(u) * l2_norm(f);
      double b2 = sobolev_norm(u, -1.0, 2.0) * sobolev_norm(f, 1.0, 2.0);
      double b3 = x_norm_upper(u, sh, {1.0}).value * x_star_norm(f, sh);
      double bound = std::min({b1, b2, b3});
      worst = std::max(worst, (p - bound) / std::max(bound, 1e-300));
      double bs = bstar_norm(f, sh), l2 = l2_norm(f), bb = b_norm(f, sh);
      worst = std::max(worst, (bs - l2) / l2);
      worst = std::max(worst, (l2 - bb) / bb);
    }
    push("duality_and_imbedding_chain", std::max(worst, 0.0), 1e-10);
  }
  {
    double worst = 0.0;
    for (double lam : {0.5, 1.0, 2.0}) {
      ResolventKernelParams kp;
      kp.d = 3;
      kp.z = cplx(lam, 0.0);
      kp.side = BoundarySide::plus;
      for (double r = 0.1; r <= 5.0; r += 0.35) {
        cplx want = std::exp(cplx(0.0, std::sqrt(lam) * r)) / (4.0 * kPi * r);
        worst = std::max(worst, std::abs(free_kernel_radial(r, kp) - want) / std::abs(want));
      }
    }
    push("kernel_closed_form_3d", worst, 1e-9);
  }
  {
    GridSpec s3{3, 24, 12.0};
    Field one = make_field(s3, [](const std::array<double, 3>&) { return cplx(1.0, 0.0); });
    Field m = maximal_mq(one, 2.0);
    double want = std::sqrt(kPi / 6.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < m.size(); i += 57)
      worst = std::max(worst, std::abs(m[i].real() - want) / want);
    push("maximal_function_constant_3d", worst, 1e-6);
    Field k = kato_convolve(one, 0.25);
    double kw = 2.0 * kPi * 0.25 * 0.25;
    double worst2 = 0.0;
    for (std::size_t i = 0; i < k.size(); i += 57)
      worst2 = std::max(worst2, std::abs(k[i].real() - kw) / kw);
    push("kato_constant_3d", worst2, 1e-6);
  }
  {
    auto sp = catalog_scalar(s, "square_well", {{"depth", 3.0}, {"radius", 1.0}});
    auto rep = admissibility_check(sp);
    push("well_admissible", rep.passed ? 0.0 : 1.0, 0.5);
  }
  {
    GridSpec st{2, 384, 96.0};
    Field g = seeded_gaussian(st, 1.0);
    auto rep = trace_identity_check(g, 1.0, BoundarySide::plus);
    push("trace_identity_rel_error", rep.rel_error, 0.01);
  }
  {
    SpectralPoint pt{1.0, 0.1, BoundarySide::plus};
    auto r = min_singular(pt, PerturbationOperator::none_operator());
    push("min_singular_free_identity", std::abs(r.smin - 1.0), 1e-12);
  }
  {
    GridSpec sw{2, 32, 16.0};
    auto sp = catalog_scalar(sw, "gaussian", {{"amp", -1.5}, {"sigma", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    Field g = noise_field(sw, seed + 5, 0.3);
    SpectralPoint pt{0.9, 0.1, BoundarySide::plus};
    SolveConfig ck;
    ck.method = SolveConfig::Method::krylov;
    ck.tol = 1e-10;
    auto rk = solve_perturbed(g, pt, P, ck);
    SolveConfig ca; // auto: compact-support reduction
    auto ra = solve_perturbed(g, pt, P, ca);
    push("krylov_vs_reduction_solve", field_rel_err(rk.u, ra.u), 1e-7);
  }
  {
    Field u = herglotz_wave(s, 1.3);
    std::array<int, 3> i0{s.n / 2, s.n / 2, 0};
    double want = 2.0 * kPi * std::sqrt(1.3);
    push("herglotz_origin_value", std::abs(u[flatten(s, i0)] - cplx(want, 0.0)) / want, 1e-8);
  }
  {
    auto sp = catalog_scalar(s, "square_well", {{"depth", 2.0}, {"radius", 1.0}, {"edge_width", 0.5}});
    auto P = PerturbationOperator::scalar(sp);
    Field f = seeded_gaussian(s, 1.2);
    EvolutionConfig ec;
    ec.dt = 0.01;
    Field u = evolve(f, 1.0, P, ec);
    push("evolution_unitarity", std::abs(l2_norm(u) - l2_norm(f)) / l2_norm(f), 1e-10);
  }
  {
    auto E = spectral_window(s, PerturbationOperator::none_operator(), 0.5, 2.0);
    Field f = noise_field(s, seed + 6, 0.2);
    push("window_idempotence", E.idempotence_defect(f), 1e-12);
  }
  return checks;
}

} // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(opt.out_dir);
  const std::string hash = config_hash(cfg, opt.seed);

  RunOutcome outcome;
  json manifest;
  manifest["kind"] = cfg.kind;
  manifest["config_hash"] = hash;
  manifest["defaults_version"] = kDefaultsVersion;
  manifest["seed"] = opt.seed;
  manifest["workers"] = opt.workers;
  json defaults = json::object();
  for (const auto& [k, v] : builtin_defaults()) defaults[k] = v;
  manifest["defaults"] = defaults;
  json outputs = json::array();

  auto emit_jsonl = [&](const std::string& name, const std::vector<json>& lines) {
    std::ostringstream os;
    for (const auto& l : lines) os << l.dump() << "\n";
    write_text(fs::path(opt.out_dir) / name, os.str());
    outputs.push_back(name);
  };
  auto emit_json = [&](const std::string& name, const json& j) {
    write_text(fs::path(opt.out_dir) / name, j.dump(2) + "\n");
    outputs.push_back(name);
  };

  try {
    if (cfg.kind == "kernel") {
      const int d = cfg.integer("grid.d", 3);
      const double lam = cfg.num("kernel.lambda", 1.0);
      const double eps = cfg.num("kernel.eps", 0.0);
      const std::string side = cfg.str("kernel.side", "plus");
      ResolventKernelParams kp;
      kp.d = d;
      kp.z = cplx(lam, eps);
      kp.side = side == "minus" ? BoundarySide::minus : BoundarySide::plus;
      const double r0 = cfg.num("kernel.r_min", 0.1);
      const double r1 = cfg.num("kernel.r_max", 5.0);
      const int count = cfg.integer("kernel.r_count", 64);
      std::vector<json> lines;
      std::ostringstream csv;
      csv << "r,re,im\n";
      for (int i = 0; i < count; ++i) {
        double r = r0 + (r1 - r0) * double(i) / std::max(1, count - 1);
        cplx v = free_kernel_radial(r, kp);
        lines.push_back(json{{"r", r}, {"re", v.real()}, {"im", v.imag()}, {"config", hash}});
        csv << r << "," << v.real() << "," << v.imag() << "\n";
      }
      emit_jsonl("records.jsonl", lines);
      write_text(fs::path(opt.out_dir) / "kernel.csv", csv.str());
      outputs.push_back("kernel.csv");
    } else if (cfg.kind == "norms") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      Field f = P.kind == PerturbationOperator::Kind::first_order ? P.a : P.V;
      if (P.is_none()) throw ConfigError("norms: a potential (or field file) is required");
      std::vector<double> split;
      if (cfg.has("norms.split_lambda")) split.push_back(cfg.num_required("norms.split_lambda"));
      NormReport r = norm_report(f, shells_for(s), cfg.num("norms.alpha", 1.0),
                                 cfg.num("norms.p", 2.0), split);
      emit_json("norms.json",
                json{{"b", r.b},
                     {"b_star", r.b_star},
                     {"y", r.y},
                     {"l2", r.l2},
                     {"w_alpha_p", r.w_alpha_p},
                     {"alpha", r.alpha},
                     {"p", r.p},
                     {"x_star", r.x_star},
                     {"x_upper", r.x_upper},
                     {"x_upper_splitting", r.x_upper_splitting},
                     {"x_upper_surrogate", r.x_upper_surrogate},
                     {"config", hash}});
    } else if (cfg.kind == "admissible") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      if (P.is_none()) throw ConfigError("admissible: a potential is required");
      json j = admissibility_json(P.report);
      j["config"] = hash;
      emit_json("admissible.json", j);
    } else if (cfg.kind == "lap-sweep") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      SweepConfig sc;
      sc.lambda_min = cfg.num("sweep.lambda_min", 0.5);
      sc.lambda_max = cfg.num("sweep.lambda_max", 2.0);
      sc.lambda_count = cfg.integer("sweep.lambda_count", 24);
      sc.resonant_count = cfg.integer("sweep.resonant_count", 6);
      sc.eps_ladder = cfg.ladder("eps", 0.1, 0.001, 7);
      sc.components = cfg.flag("sweep.components", false);
      sc.workers = opt.workers;
      sc.seed = opt.seed;
      sc.solver.restart = cfg.integer("solver.restart", 50);
      sc.solver.tol = cfg.num("solver.tol", 1e-8);
      sc.solver.max_iters = cfg.integer("solver.max_iters", 4000);
      auto recs = lap_sweep(s, sc, P);
      std::vector<json> lines;
      std::ostringstream csv;
      csv << "lambda,eps,side,resonant,est_x_xstar,est_elliptic\n";
      for (const auto& r : recs) {
        json line{{"lambda", r.lambda},          {"eps", r.eps},
                  {"side", r.side},              {"resonant", r.resonant},
                  {"est_x_xstar", r.est_x_xstar}, {"est_elliptic", r.est_elliptic},
                  {"config", hash}};
        if (sc.components) {
          line["comp_b_bstar"] = r.comp_b_bstar;
          line["comp_lp_lp"] = r.comp_lp_lp;
          line["comp_lp_bstar"] = r.comp_lp_bstar;
          line["comp_b_lp"] = r.comp_b_lp;
        }
        lines.push_back(std::move(line));
        csv << r.lambda << "," << r.eps << "," << r.side << "," << (r.resonant ? 1 : 0) << ","
            << r.est_x_xstar << "," << r.est_elliptic << "\n";
      }
      emit_jsonl("records.jsonl", lines);
      write_text(fs::path(opt.out_dir) / "records.csv", csv.str());
      outputs.push_back("records.csv");
      auto sum = sweep_summary(recs);
      json js{{"plateau_ratio", sum.plateau_ratio},
              {"elliptic_ratio", sum.elliptic_ratio},
              {"eps", sum.eps},
              {"max_x_xstar_generic", sum.max_x_xstar_generic},
              {"max_elliptic_resonant", sum.max_elliptic_resonant},
              {"config", hash}};
      emit_json("summary.json", js);
      // plot-ready two-column files, one curve per eps rung
      for (std::size_t e = 0; e < sum.eps.size(); ++e) {
        std::ostringstream two;
        for (const auto& r : recs)
          if (r.eps == sum.eps[e] && !r.resonant) two << r.lambda << " " << r.est_x_xstar << "\n";
        char name[64];
        std::snprintf(name, sizeof name, "curve_eps_%zu.dat", e);
        write_text(fs::path(opt.out_dir) / name, two.str());
        outputs.push_back(name);
      }
    } else if (cfg.kind == "scan") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      ScanConfig sc;
      sc.eps_ladder = cfg.ladder("eps", 0.1, 0.00625, 5);
      sc.dip_threshold = cfg.num("scan.dip_threshold", 0.05);
      sc.solver.restart = cfg.integer("solver.restart", 50);
      sc.solver.tol = cfg.num("solver.tol", 1e-8);
      sc.solver.max_iters = cfg.integer("solver.max_iters", 4000);
      auto scan = scan_exceptional(cfg.num_required("scan.lambda_min"),
                                   cfg.num_required("scan.lambda_max"),
                                   cfg.integer("scan.lambda_count", 40), P, sc);
      std::vector<json> lines;
      for (const auto& r : scan.records)
        lines.push_back(json{{"lambda", r.lambda},
                             {"eps", r.eps},
                             {"side", r.side},
                             {"smin", r.smin},
                             {"iters", r.iters},
                             {"residual", r.residual},
                             {"config", hash}});
      emit_jsonl("records.jsonl", lines);
      json dips = json::array();
      for (std::size_t k = 0; k < scan.dips.size(); ++k) {
        const auto& d = scan.dips[k];
        dips.push_back(json{{"lambda", d.lambda}, {"smin", d.smin}, {"multiplicity", d.multiplicity}});
        if (cfg.flag("scan.save_kernels", false)) {
          char name[64];
          std::snprintf(name, sizeof name, "kernel_vector_%zu.lapf1", k);
          write_lapf1((fs::path(opt.out_dir) / name).string(), d.kernel_vector);
          outputs.push_back(name);
        }
      }
      emit_json("dips.json", json{{"dips", dips}, {"config", hash}});
    } else if (cfg.kind == "eigen") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      EigensolveConfig ec;
      ec.tol = cfg.num("eigen.tol", 1e-8);
      ec.max_steps = cfg.integer("eigen.max_steps", 260);
      ec.seed = opt.seed;
      std::optional<std::pair<double, double>> window;
      if (cfg.has("eigen.window_min") || cfg.has("eigen.window_max"))
        window = std::make_pair(cfg.num("eigen.window_min", -1e9), cfg.num("eigen.window_max", 1e9));
      auto pairs = eigensolve_direct(s, P, cfg.integer("eigen.count", 1), window, ec);
      std::vector<json> lines;
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        json line{{"value", pairs[k].value}, {"residual", pairs[k].residual}, {"config", hash}};
        if (cfg.has("eigen.decay_N")) {
          std::vector<double> Ns;
          for (double N = 0.0; N <= cfg.num_required("eigen.decay_N"); N += 1.0) Ns.push_back(N);
          auto rep = eigen_decay_check(pairs[k], pairs[k].value, Ns);
          line["decay_slope"] = rep.slope;
          line["expected_slope"] = rep.expected_slope;
          line["weighted_h1"] = rep.weighted_h1;
          line["decaying"] = rep.decaying;
        }
        lines.push_back(std::move(line));
        if (cfg.flag("eigen.save_fields", false)) {
          char name[64];
          std::snprintf(name, sizeof name, "eigenfield_%zu.lapf1", k);
          write_lapf1((fs::path(opt.out_dir) / name).string(), pairs[k].u);
          outputs.push_back(name);
        }
      }
      emit_jsonl("records.jsonl", lines);
    } else if (cfg.kind == "weighted") {
      GridSpec s = grid_from(cfg);
      Field u = cfg.str("weighted.probe", "gaussian") == "herglotz"
                    ? herglotz_wave(s, cfg.num("weighted.lambda", 1.0))
                    : seeded_gaussian(s, cfg.num("weighted.sigma", 1.5));
      auto rep = weighted_estimate_check(u, cfg.num("weighted.lambda", 1.0),
                                         cfg.num("weighted.N", 1.0),
                                         cfg.ladder("gamma", 1.0, 1.0 / 256.0, 5));
      json sa = json::array();
      for (auto& [R, v] : rep.shell_averages) sa.push_back({{"R", R}, {"value", v}});
      emit_json("weighted.json", json{{"lambda", rep.lambda},
                                      {"N", rep.N},
                                      {"gammas", rep.gammas},
                                      {"ratios", rep.ratios},
                                      {"ratio_spread", rep.ratio_spread},
                                      {"ratio_vs_unit", rep.ratio_vs_unit},
                                      {"counterexample_regime", rep.counterexample_regime},
                                      {"interior_residual", rep.interior_residual},
                                      {"shell_averages", sa},
                                      {"shell_average_stable", rep.shell_average_stable},
                                      {"config", hash}});
    } else if (cfg.kind == "trace") {
      GridSpec s = grid_from(cfg);
      Field g = seeded_gaussian(s, cfg.num("trace.sigma", 1.0));
      TraceConfig tc;
      tc.eps_ladder = cfg.ladder("eps", 0.8, 0.025, 6);
      tc.quad_resolution = cfg.integer("trace.quad_resolution", 96);
      auto rep = trace_identity_check(g, cfg.num("trace.lambda", 1.0),
                                      cfg.str("trace.side", "plus") == "minus"
                                          ? BoundarySide::minus
                                          : BoundarySide::plus,
                                      tc);
      json q = json::array();
      for (auto& [R, v] : rep.q_curve) q.push_back({{"R", R}, {"value", v}});
      emit_json("trace.json", json{{"lambda", rep.lambda},
                                   {"side", rep.side},
                                   {"lhs", rep.lhs},
                                   {"lhs_err", rep.lhs_err},
                                   {"c1", rep.c1},
                                   {"sphere", rep.sphere},
                                   {"rel_error", rep.rel_error},
                                   {"q_curve", q},
                                   {"c2", rep.c2},
                                   {"config", hash}});
    } else if (cfg.kind == "commutation") {
      GridSpec s = grid_from(cfg);
      ProbeFamily fam = ProbeFamily::standard(s, {1.0}, opt.seed, 2);
      std::vector<double> alphas = {0.0, cfg.num("commutation.alpha", 1.0)};
      auto rep = commutation_check(alphas, cfg.num("commutation.N", 2.0),
                                   cfg.ladder("gamma", 1.0, 1.0 / 64.0, 4), fam);
      json entries = json::array();
      for (const auto& e : rep.entries)
        entries.push_back(json{{"alpha", e.alpha},
                               {"norm", e.norm},
                               {"est_per_gamma", e.est_per_gamma},
                               {"est_swapped", e.est_swapped},
                               {"uniformity", e.uniformity}});
      emit_json("commutation.json",
                json{{"N", rep.N}, {"gamma_uniform", rep.gamma_uniform}, {"entries", entries},
                     {"config", hash}});
    } else if (cfg.kind == "evolve") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      EvolutionConfig ec;
      ec.dt = cfg.num("evolve.dt", 0.02);
      std::string method = cfg.str("evolve.method", "auto");
      if (method == "split_step") ec.method = EvolutionConfig::Method::split_step;
      else if (method == "lanczos") ec.method = EvolutionConfig::Method::lanczos_exp;
      else if (method != "auto") throw ConfigError("evolve.method must be auto, split_step or lanczos");
      Field f = seeded_gaussian(s, cfg.num("evolve.sigma", 1.0));
      double t = cfg.num("evolve.t", 1.0);
      Field u = evolve(f, t, P, ec);
      double drift = std::abs(l2_norm(u) - l2_norm(f)) / l2_norm(f);
      double e0 = pairing(apply_h(f, P), f).real();
      double e1 = pairing(apply_h(u, P), u).real();
      write_lapf1((fs::path(opt.out_dir) / "final.lapf1").string(), u);
      outputs.push_back("final.lapf1");
      emit_json("evolve.json", json{{"t", t},
                                    {"dt", ec.dt},
                                    {"norm_drift", drift},
                                    {"energy_initial", e0},
                                    {"energy_final", e1},
                                    {"energy_drift", std::abs(e1 - e0) / std::max(1e-300, std::abs(e0))},
                                    {"config", hash}});
    } else if (cfg.kind == "smoothing") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      WindowConfig wc;
      wc.transition = cfg.num("window.transition", 0.4);
      if (cfg.has("window.degree")) wc.cheb_degree = cfg.integer("window.degree", 0);
      auto E = spectral_window(s, P, cfg.num_required("smoothing.a"), cfg.num_required("smoothing.b"), wc);
      EvolutionConfig ec;
      ec.dt = cfg.num("evolve.dt", 0.02);
      Field f = seeded_gaussian(s, cfg.num("smoothing.sigma", 1.5));
      f *= 1.0 / l2_norm(f);
      double T = cfg.num("smoothing.T", 8.0);
      auto rep = smoothing_check(f, E, P, {0.5 * T, T}, ec);
      emit_json("smoothing.json", json{{"T_values", rep.T_values},
                                       {"q_restriction", rep.q_restriction},
                                       {"q_shell", rep.q_shell},
                                       {"f_l2", rep.f_l2},
                                       {"window_method", E.method},
                                       {"config", hash}});
    } else if (cfg.kind == "waveop") {
      GridSpec s = grid_from(cfg);
      auto P = potential_from(cfg, s);
      EvolutionConfig ec;
      ec.dt = cfg.num("evolve.dt", 0.02);
      Field f = seeded_gaussian(s, cfg.num("waveop.sigma", 1.5));
      std::vector<double> ladder = {0.5, 1.0, 2.0, 4.0};
      if (cfg.has("waveop.t_ladder")) {
        ladder.clear();
        std::istringstream ls(cfg.str("waveop.t_ladder"));
        double t;
        while (ls >> t) ladder.push_back(t);
        if (ladder.empty()) throw ConfigError("waveop.t_ladder must list times");
      }
      double a = cfg.num_required("waveop.a"), b = cfg.num_required("waveop.b");
      std::optional<SpectralProjector> E;
      Field probe;
      bool completeness = cfg.flag("waveop.completeness", false) && !P.is_none();
      if (completeness) {
        WindowConfig wc;
        wc.transition = cfg.num("window.transition", 0.4);
        E = spectral_window(s, P, a, b, wc);
        probe = seeded_gaussian(s, 1.0);
      }
      auto rep = wave_operator(f, a, b, P, ladder, ec, completeness ? &*E : nullptr,
                               completeness ? &probe : nullptr);
      emit_json("waveop.json", json{{"t_ladder", rep.t_ladder},
                                    {"t_wrap", rep.t_wrap},
                                    {"isometry_defect", rep.isometry_defect},
                                    {"intertwining", rep.intertwining},
                                    {"cauchy_increments", rep.cauchy_increments},
                                    {"cauchy_decreasing", rep.cauchy_decreasing},
                                    {"completeness_defect", rep.completeness_defect},
                                    {"free_case_error", rep.free_case_error},
                                    {"config", hash}});
    } else if (cfg.kind == "verify") {
      auto checks = verify_battery(opt.seed);
      std::vector<json> lines;
      bool all = true;
      for (const auto& c : checks) {
        all = all && c.pass;
        lines.push_back(json{{"check", c.name},
                             {"value", c.value},
                             {"threshold", c.threshold},
                             {"pass", c.pass},
                             {"config", hash}});
      }
      emit_jsonl("verify_records.jsonl", lines);
      manifest["all_pass"] = all;
      if (!all) {
        outcome.ok = false;
        outcome.message = "verify: at least one invariant failed";
      }
    } else {
      throw ConfigError("unknown experiment kind '" + cfg.kind + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    outcome.ok = false;
    outcome.message = e.what();
  }

  manifest["outputs"] = outputs;
  manifest["ok"] = outcome.ok;
  if (!outcome.ok) manifest["error"] = outcome.message;
  manifest["wall_ms"] =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const std::string mpath = (fs::path(opt.out_dir) / "manifest.json").string();
  write_text(mpath, manifest.dump(2) + "\n");
  outcome.manifest_path = mpath;
  return outcome;
}

} // namespace lapkit
