#include "lapkit/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <thread>

#include "lapkit/perturb.hpp"

namespace lapkit {

void ProbeFamily::push(Field f, std::string label, bool is_sharp) {
  fields.push_back(std::move(f));
  labels.push_back(std::move(label));
  sharp.push_back(is_sharp);
}

namespace {

Field smooth_noise(const GridSpec& s, std::uint64_t seed, double tau) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return (double(rng() >> 11) + 1.0) / 9007199254740993.0; };
  Field f(s, Rep::physical);
  for (auto& x : f.v) x = cplx(2.0 * unit() - 1.0, 2.0 * unit() - 1.0);
  Field g = to_frequency(f);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto xi = freq_at(s, i);
    double s2 = 0.0;
    for (int a = 0; a < s.d; ++a) s2 += xi[a] * xi[a];
    g[i] *= std::exp(-tau * s2);
  }
  return to_physical(g);
}

Field radial_gaussian(const GridSpec& s, double sigma, double x0 = 0.0) {
  return make_field(s, [&](const std::array<double, 3>& x) {
    double r2 = 0.0;
    for (int a = 0; a < s.d; ++a) {
      double dx = x[a] - (a == 0 ? x0 : 0.0);
      r2 += dx * dx;
    }
    return cplx(std::exp(-r2 / (2.0 * sigma * sigma)), 0.0);
  });
}

Field shell_bump_field(const GridSpec& s, int j) {
  double rin = j == 0 ? 0.0 : std::pow(2.0, j - 1);
  double rout = std::pow(2.0, j);
  return make_field(s, [&](const std::array<double, 3>& x) {
    double r = 0.0;
    for (int a = 0; a < s.d; ++a) r += x[a] * x[a];
    r = std::sqrt(r);
    if (r <= rin || r >= rout) return cplx(0.0, 0.0);
    double t = (r - rin) / (rout - rin);
    return cplx(t * (1.0 - t), 0.0);
  });
}

void normalize_l2(Field& f) {
  double n = l2_norm(f);
  if (n > 0.0) f *= 1.0 / n;
}

} // namespace

ProbeFamily ProbeFamily::standard(const GridSpec& s, const std::vector<double>& lambdas,
                                  std::uint64_t seed, int n_random) {
  ProbeFamily fam;
  char buf[96];
  for (double sg : {0.7, 1.4, 2.8}) {
    Field g = radial_gaussian(s, sg);
    normalize_l2(g);
    std::snprintf(buf, sizeof buf, "gauss(%.1f)", sg);
    fam.push(std::move(g), buf);
  }
  {
    Field g = radial_gaussian(s, 1.0, 0.3 * s.box);
    normalize_l2(g);
    fam.push(std::move(g), "gauss_offset");
  }
  const ShellDecomposition& sh = shells_for(s);
  for (int j = 0; j <= sh.j_max; ++j) {
    Field b = shell_bump_field(s, j);
    if (l2_norm(b) < 1e-14) continue;
    normalize_l2(b);
    std::snprintf(buf, sizeof buf, "shell(%d)", j);
    fam.push(std::move(b), buf);
  }
  int li = 0;
  for (double lam : lambdas) {
    if (!(lam > 0.0)) continue;
    Multiplier chi = Multiplier::annulus_cutoff(lam);
    Field a1 = apply_multiplier(radial_gaussian(s, 1.2), chi);
    normalize_l2(a1);
    std::snprintf(buf, sizeof buf, "annulus_gauss(%g)", lam);
    fam.push(std::move(a1), buf);
    Field a2 = apply_multiplier(smooth_noise(s, seed + 101 + li, 0.05), chi);
    normalize_l2(a2);
    std::snprintf(buf, sizeof buf, "annulus_noise(%g)", lam);
    fam.push(std::move(a2), buf);
    ++li;
  }
  if (!lambdas.empty() && lambdas.front() > 0.0) {
    Field h = herglotz_wave(s, lambdas.front());
    normalize_l2(h);
    fam.push(std::move(h), "herglotz");
  }
  for (int t = 0; t < n_random; ++t) {
    Field r = smooth_noise(s, seed + 7 * t, 0.3);
    normalize_l2(r);
    std::snprintf(buf, sizeof buf, "noise(%d)", t);
    fam.push(std::move(r), buf);
  }
  // near-resonant lattice plane waves, one per requested energy
  for (double lam : lambdas) {
    if (!(lam > 0.0)) continue;
    double target = nearest_lattice_value(lam, s);
    // locate one representative lattice index
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto xi = freq_at(s, i);
      double s2 = 0.0;
      for (int a = 0; a < s.d; ++a) s2 += xi[a] * xi[a];
      double dd = std::abs(s2 - target);
      if (dd < bd) {
        bd = dd;
        best = i;
      }
    }
    auto xi = freq_at(s, best);
    Field pw = make_field(s, [&](const std::array<double, 3>& x) {
      double ph = 0.0;
      for (int a = 0; a < s.d; ++a) ph += x[a] * xi[a];
      return std::exp(cplx(0.0, ph));
    });
    normalize_l2(pw);
    std::snprintf(buf, sizeof buf, "planewave(%g)", target);
    fam.push(std::move(pw), buf, true);
  }
  return fam;
}

NormSpec NormSpec::Lp(double p) {
  NormSpec n;
  n.kind = Kind::lp;
  n.p = p;
  return n;
}
NormSpec NormSpec::W(double alpha, double p) {
  NormSpec n;
  n.kind = Kind::sobolev;
  n.alpha = alpha;
  n.p = p;
  return n;
}
NormSpec NormSpec::B() {
  NormSpec n;
  n.kind = Kind::b;
  return n;
}
NormSpec NormSpec::Bstar() {
  NormSpec n;
  n.kind = Kind::bstar;
  return n;
}
NormSpec NormSpec::XUpper(std::vector<double> lambdas) {
  NormSpec n;
  n.kind = Kind::x_upper;
  n.split_lambdas = std::move(lambdas);
  return n;
}
NormSpec NormSpec::Xstar() {
  NormSpec n;
  n.kind = Kind::x_star;
  return n;
}

double eval_norm(const Field& f, const NormSpec& spec, const ShellDecomposition& sh) {
  switch (spec.kind) {
    case NormSpec::Kind::l2:
      return l2_norm(f);
    case NormSpec::Kind::lp:
      return lp_norm(f, spec.p);
    case NormSpec::Kind::sobolev:
      return sobolev_norm(f, spec.alpha, spec.p);
    case NormSpec::Kind::b:
      return b_norm(f, sh);
    case NormSpec::Kind::bstar:
      return bstar_norm(f, sh);
    case NormSpec::Kind::x_upper:
      return x_norm_upper(f, sh, spec.split_lambdas).value;
    case NormSpec::Kind::x_star:
      return x_star_norm(f, sh);
  }
  throw ContractError("eval_norm: unknown norm kind");
}

double probe_operator_norm(const FieldOp& op, const NormSpec& src, const NormSpec& dst,
                           const ProbeFamily& probes, const ShellDecomposition& sh,
                           bool include_sharp) {
  if (probes.size() == 0) throw ContractError("probe_operator_norm: empty probe family");
  double best = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!include_sharp && probes.sharp[i]) continue;
    double denom = eval_norm(probes.fields[i], src, sh);
    if (denom < 1e-13) continue;
    double num = eval_norm(op(probes.fields[i]), dst, sh);
    best = std::max(best, num / denom);
  }
  return best;
}

double elliptic_norm_exact(const GridSpec& s, cplx z) {
  const auto& vals = lattice_spectrum(s);
  double best = 0.0;
  for (double sv : vals) best = std::max(best, (1.0 + sv) / std::abs(cplx(sv, 0.0) - z));
  return best;
}

std::vector<double> geometric_ladder(double start, double stop, int count) {
  std::vector<double> out;
  if (count < 2) {
    out.push_back(start);
    return out;
  }
  const double q = std::pow(stop / start, 1.0 / double(count - 1));
  double v = start;
  for (int i = 0; i < count; ++i) {
    out.push_back(v);
    v *= q;
  }
  return out;
}

std::pair<double, double> richardson_extrapolate(const std::vector<double>& ladder,
                                                 const std::vector<double>& values) {
  if (ladder.size() != values.size() || ladder.size() < 3)
    throw ContractError("richardson_extrapolate: need at least three rungs");
  // quadratic model through consecutive triples, evaluated at 0
  std::vector<double> ext;
  for (std::size_t j = 0; j + 2 < ladder.size(); ++j) {
    double a = ladder[j], b = ladder[j + 1], c = ladder[j + 2];
    double fa = values[j], fb = values[j + 1], fc = values[j + 2];
    double la = (0.0 - b) * (0.0 - c) / ((a - b) * (a - c));
    double lb = (0.0 - a) * (0.0 - c) / ((b - a) * (b - c));
    double lc = (0.0 - a) * (0.0 - b) / ((c - a) * (c - b));
    ext.push_back(la * fa + lb * fb + lc * fc);
  }
  if (ext.size() == 1) return {ext[0], 0.0};
  std::size_t best = 0;
  double best_err = 1e300;
  for (std::size_t j = 0; j + 1 < ext.size(); ++j) {
    double err = std::abs(ext[j + 1] - ext[j]);
    if (err < best_err) {
      best_err = err;
      best = j + 1;
    }
  }
  return {ext[best], best_err};
}

namespace {

void parallel_cells(int total, int workers, const std::function<void(int)>& body) {
  if (workers <= 0) workers = int(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min(workers, total);
  if (workers <= 1) {
    for (int i = 0; i < total; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr eptr = nullptr;
  std::mutex emu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= total) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(emu);
          if (!eptr) eptr = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (eptr) std::rethrow_exception(eptr);
}

} // namespace

std::vector<SweepRecord> lap_sweep(const GridSpec& s, const SweepConfig& cfg,
                                   const PerturbationOperator& P) {
  s.validate();
  if (!(cfg.lambda_min < cfg.lambda_max)) throw ContractError("lap_sweep: empty interval");
  if (cfg.lambda_min <= 0.0 && cfg.lambda_max >= 0.0)
    throw ContractError("lap_sweep: the interval must not contain 0");
  std::vector<double> eps = cfg.eps_ladder;
  if (eps.empty()) eps = geometric_ladder(1e-1, 1e-3, 7);

  struct Row {
    double lambda;
    bool resonant;
  };
  // snapping is taken relative to the mean-shifted lattice: a scalar
  // potential moves every grid eigenvalue by about its spatial mean
  double vbar = 0.0;
  if (P.kind == PerturbationOperator::Kind::scalar) {
    for (const auto& v : P.V.v) vbar += v.real();
    vbar /= double(P.V.size());
  }
  std::vector<Row> rows;
  for (int i = 0; i < cfg.lambda_count; ++i) {
    double lam = cfg.lambda_min +
                 (cfg.lambda_max - cfg.lambda_min) * double(i) / std::max(1, cfg.lambda_count - 1);
    rows.push_back({snap_off_lattice(lam - vbar, s) + vbar, false});
  }
  if (cfg.resonant_count > 0 && cfg.lambda_min > 0.0) {
    const auto& vals = lattice_spectrum(s);
    std::vector<double> inside;
    for (double v : vals)
      if (v >= cfg.lambda_min && v <= cfg.lambda_max) inside.push_back(v);
    if (!inside.empty()) {
      for (int i = 0; i < cfg.resonant_count; ++i) {
        std::size_t idx = std::size_t((double(i) + 0.5) / cfg.resonant_count * inside.size());
        idx = std::min(idx, inside.size() - 1);
        rows.push_back({inside[idx] + vbar, true});
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.lambda < b.lambda; });
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) {
                           return std::abs(a.lambda - b.lambda) < 1e-12;
                         }),
             rows.end());

  // probe family with annular packets at a few representative energies
  std::vector<double> rep_lams;
  for (int i = 0; i < 4; ++i)
    rep_lams.push_back(cfg.lambda_min + (cfg.lambda_max - cfg.lambda_min) * (0.15 + 0.23 * i));
  ProbeFamily probes = ProbeFamily::standard(s, rep_lams, cfg.seed);
  const ShellDecomposition& sh = shells_for(s);

  // denominators: x_upper per (probe, row-lambda) and elliptic source norms
  const std::size_t np = probes.size();
  std::vector<std::vector<double>> xup(rows.size(), std::vector<double>(np, 0.0));
  std::vector<double> wminus(np, 0.0);
  for (std::size_t p = 0; p < np; ++p)
    wminus[p] = sobolev_norm(probes.fields[p], -1.0, 2.0);
  parallel_cells(int(rows.size()), cfg.workers, [&](int r) {
    for (std::size_t p = 0; p < np; ++p) {
      if (probes.sharp[p]) continue;
      xup[std::size_t(r)][p] =
          x_norm_upper(probes.fields[p], sh, {rows[std::size_t(r)].lambda}).value;
    }
  });

  std::vector<SweepRecord> records(rows.size() * eps.size());
  const int total = int(records.size());
  parallel_cells(total, cfg.workers, [&](int cell) {
    const std::size_t ri = std::size_t(cell) / eps.size();
    const std::size_t ei = std::size_t(cell) % eps.size();
    auto t0 = std::chrono::steady_clock::now();
    SweepRecord rec;
    rec.lambda = rows[ri].lambda;
    rec.eps = eps[ei];
    rec.side = +1;
    rec.resonant = rows[ri].resonant;
    SpectralPoint pt{rec.lambda, rec.eps, BoundarySide::plus};

    auto resolvent_of = [&](const Field& f) {
      if (P.is_none()) return apply_r0(f, pt);
      return solve_perturbed(f, pt, P, cfg.solver).u;
    };

    double best = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      if (probes.sharp[p] || xup[ri][p] < 1e-13) continue;
      Field u = resolvent_of(probes.fields[p]);
      best = std::max(best, x_star_norm(u, sh) / xup[ri][p]);
    }
    rec.est_x_xstar = best;

    if (P.is_none()) {
      rec.est_elliptic = elliptic_norm_exact(s, pt.z());
    } else {
      double bell = 0.0;
      for (std::size_t p = 0; p < np; ++p) {
        if (wminus[p] < 1e-13) continue;
        Field u = resolvent_of(probes.fields[p]);
        bell = std::max(bell, sobolev_norm(u, 1.0, 2.0) / wminus[p]);
      }
      rec.est_elliptic = bell;
    }

    if (cfg.components && rec.lambda > 0.0) {
      Multiplier chi = Multiplier::annulus_cutoff(rec.lambda);
      const int d = s.d;
      auto comp = [&](double a_in, double a_out, const NormSpec& srcn, const NormSpec& dstn) {
        FieldOp op = [&](const Field& f) {
          Field g = apply_multiplier(f, Multiplier::sobolev(a_in));
          g = resolvent_of(g);
          g = apply_multiplier(g, chi);
          return apply_multiplier(g, Multiplier::sobolev(a_out));
        };
        return probe_operator_norm(op, srcn, dstn, probes, sh, false);
      };
      const double ad = 1.0 / (d + 1);
      rec.comp_b_bstar = comp(1.0, 1.0, NormSpec::B(), NormSpec::Bstar());
      rec.comp_lp_lp = comp(ad, ad, NormSpec::Lp(p_low(d)), NormSpec::Lp(p_high(d)));
      rec.comp_lp_bstar = comp(ad, 1.0, NormSpec::Lp(p_low(d)), NormSpec::Bstar());
      rec.comp_b_lp = comp(1.0, ad, NormSpec::B(), NormSpec::Lp(p_high(d)));
    }

    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    records[std::size_t(cell)] = rec;
  });

  std::sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.eps > b.eps;
  });
  return records;
}

SweepSummary sweep_summary(const std::vector<SweepRecord>& records) {
  SweepSummary sum;
  std::map<double, std::pair<double, double>> per_eps; // eps -> (xstar gen, ell res)
  for (const auto& r : records) {
    auto& e = per_eps[r.eps];
    if (!r.resonant) e.first = std::max(e.first, r.est_x_xstar);
    if (r.resonant) e.second = std::max(e.second, r.est_elliptic);
  }
  for (auto it = per_eps.rbegin(); it != per_eps.rend(); ++it) {
    sum.eps.push_back(it->first);
    sum.max_x_xstar_generic.push_back(it->second.first);
    sum.max_elliptic_resonant.push_back(it->second.second);
  }
  if (sum.eps.size() >= 2) {
    if (sum.max_x_xstar_generic.front() > 0.0)
      sum.plateau_ratio = sum.max_x_xstar_generic.back() / sum.max_x_xstar_generic.front();
    if (sum.max_elliptic_resonant.front() > 0.0)
      sum.elliptic_ratio = sum.max_elliptic_resonant.back() / sum.max_elliptic_resonant.front();
  }
  return sum;
}

TraceReport trace_identity_check(const Field& g, double lambda, BoundarySide side,
                                 const TraceConfig& cfg) {
  if (!(lambda > 0.0)) throw ContractError("trace_identity_check: lambda must be positive");
  const GridSpec& s = g.spec;
  const double sgn = side == BoundarySide::plus ? 1.0 : -1.0;

  TraceReport rep;
  rep.lambda = lambda;
  rep.side = int(sgn);

  std::vector<double> vals;
  for (double e : cfg.eps_ladder) {
    SpectralPoint pt{lambda, sgn * e, side};
    Field u = apply_r0(g, pt);
    vals.push_back(pairing(u, g).imag());
  }
  auto [lhs, err] = richardson_extrapolate(cfg.eps_ladder, vals);
  rep.lhs = lhs;
  rep.lhs_err = err;

  rep.c1 = sgn * kPi / (2.0 * std::sqrt(lambda));
  auto quad = sphere_quadrature(s.d, lambda, cfg.quad_resolution);
  rep.sphere = sphere_restriction_mass(g, quad);
  double rhs = rep.c1 * rep.sphere;
  rep.rel_error = std::abs(rep.lhs - rhs) / std::max(1e-300, std::abs(rhs));

  // radial-average identity at a finite box-faithful eps
  double eps_star = cfg.eps_radial > 0.0 ? cfg.eps_radial : 8.0 / s.box;
  SpectralPoint pt{lambda, sgn * eps_star, side};
  Field u = apply_r0(g, pt);
  auto phi = [](double t) { // smooth bump, phi(0) = 1, support |t| < 1
    double t2 = t * t;
    return t2 >= 1.0 ? 0.0 : std::exp(1.0 - 1.0 / (1.0 - t2));
  };
  const double hd = std::pow(s.h(), s.d);
  for (double R : {s.box / 8.0, s.box / 6.0, s.box / 4.0}) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double r = std::sqrt(radius2_at(s, i));
      double w = phi(r / R);
      if (w > 0.0) acc += w * std::norm(u[i]);
    }
    rep.q_curve.emplace_back(R, acc * hd / R);
  }
  rep.c2 = rep.sphere > 0.0 ? rep.q_curve.back().second / rep.sphere : 0.0;
  return rep;
}

WeightedReport weighted_estimate_check(const Field& u, double lambda, double N,
                                       const std::vector<double>& gammas) {
  const GridSpec& s = u.spec;
  const ShellDecomposition& sh = shells_for(s);
  WeightedReport rep;
  rep.lambda = lambda;
  rep.N = N;
  rep.gammas = gammas;

  rep.interior_residual = helmholtz_residual_interior(u, lambda, 0.1);
  rep.counterexample_regime = rep.interior_residual < 1e-6;

  Field f = apply_multiplier(u, Multiplier::radial("dplus", [lambda](double s2) {
                               return cplx(lambda - s2, 0.0); // (Delta + lambda)
                             }));
  std::vector<double> split;
  if (lambda > 0.0) split.push_back(lambda);
  double rmin = 1e300, rmax = 0.0;
  for (double gamma : gammas) {
    Field mu = weight_field(s, WeightParams{N, gamma});
    double num = x_star_norm(pointwise(u, mu), sh);
    double den = x_norm_upper(pointwise(f, mu), sh, split).value;
    double ratio = den > 1e-12 * num ? num / den : std::numeric_limits<double>::infinity();
    rep.ratios.push_back(ratio);
    if (std::isfinite(ratio)) {
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
    }
  }
  rep.ratio_spread = (rmin < 1e300 && rmin > 0.0) ? rmax / rmin : std::numeric_limits<double>::infinity();
  double r_unit = 0.0;
  for (std::size_t i = 0; i < gammas.size(); ++i)
    if (gammas[i] == 1.0 && std::isfinite(rep.ratios[i])) r_unit = rep.ratios[i];
  if (r_unit > 0.0) {
    double worst = 0.0;
    for (double r : rep.ratios)
      if (std::isfinite(r)) worst = std::max(worst, r / r_unit);
    rep.ratio_vs_unit = worst;
  }

  const double hd = std::pow(s.h(), s.d);
  for (double R = 2.0; 2.0 * R <= 0.5 * s.box + 1e-9; R *= 2.0) {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      double r2 = radius2_at(s, i);
      if (r2 >= R * R && r2 <= 4.0 * R * R) acc += std::norm(u[i]);
    }
    rep.shell_averages.emplace_back(R, acc * hd / R);
  }
  if (rep.shell_averages.size() >= 3) {
    std::size_t k = rep.shell_averages.size();
    double a = rep.shell_averages[k - 3].second;
    double b = rep.shell_averages[k - 2].second;
    double c = rep.shell_averages[k - 1].second;
    double lo = std::min({a, b, c}), hi = std::max({a, b, c});
    rep.shell_average_stable = lo > 0.0 && hi / lo <= 1.2;
  }
  return rep;
}

CommutationReport commutation_check(const std::vector<double>& alphas, double N,
                                    const std::vector<double>& gammas,
                                    const ProbeFamily& probes) {
  if (probes.size() == 0) throw ContractError("commutation_check: empty probe family");
  const GridSpec& s = probes.fields.front().spec;
  const ShellDecomposition& sh = shells_for(s);
  const int d = s.d;

  CommutationReport rep;
  rep.N = N;
  struct NormDef {
    const char* name;
    NormSpec spec;
  };
  std::vector<NormDef> norms = {
      {"lp", NormSpec::Lp(p_low(d))},   {"l2", NormSpec::L2()}, {"lp'", NormSpec::Lp(p_high(d))},
      {"b", NormSpec::B()},             {"bstar", NormSpec::Bstar()},
  };

  bool uniform = true;
  for (double alpha : alphas) {
    for (const auto& nd : norms) {
      CommutationReport::Entry e;
      e.alpha = alpha;
      e.norm = nd.name;
      for (double gamma : gammas) {
        Field mu = weight_field(s, WeightParams{N, gamma});
        Field muinv(s, Rep::physical);
        for (std::size_t i = 0; i < mu.size(); ++i) muinv[i] = 1.0 / mu[i].real();
        FieldOp op1 = [&](const Field& f) {
          Field g = apply_multiplier(f, Multiplier::sobolev(-alpha));
          g = pointwise(g, muinv);
          g = apply_multiplier(g, Multiplier::sobolev(alpha));
          return pointwise(g, mu);
        };
        FieldOp op2 = [&](const Field& f) {
          Field g = pointwise(f, muinv);
          g = apply_multiplier(g, Multiplier::sobolev(-alpha));
          g = pointwise(g, mu);
          return apply_multiplier(g, Multiplier::sobolev(alpha));
        };
        e.est_per_gamma.push_back(probe_operator_norm(op1, nd.spec, nd.spec, probes, sh, false));
        e.est_swapped.push_back(probe_operator_norm(op2, nd.spec, nd.spec, probes, sh, false));
      }
      // uniformity over the nontrivial rungs: at gamma = 1 the operator is
      // exactly the identity, which says nothing about the gamma -> 0 family
      double lo = 1e300, hi = 0.0;
      for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
        if (gammas[gi] >= 1.0 && gammas.size() > 2) continue;
        lo = std::min(lo, e.est_per_gamma[gi]);
        hi = std::max(hi, e.est_per_gamma[gi]);
      }
      e.uniformity = lo > 0.0 && lo < 1e300 ? hi / lo : 0.0;
      if (e.uniformity > 2.5) uniform = false;
      rep.entries.push_back(std::move(e));
    }
  }
  rep.gamma_uniform = uniform;
  return rep;
}

} // namespace lapkit
