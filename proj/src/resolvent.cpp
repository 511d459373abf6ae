#include "lapkit/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "lapkit/fft.hpp"
#include "lapkit/linalg.hpp"

namespace lapkit {

void SpectralPoint::validate_for_multiplier() const {
  if (lambda >= 0.0 && eps == 0.0)
    throw ContractError(
        "SpectralPoint: lambda >= 0 with eps = 0 has no direct multiplier; "
        "use the boundary extrapolation ladder");
}

const std::vector<double>& lattice_spectrum(const GridSpec& s) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(s.d, s.n, s.box);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<double> vals;
  vals.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto xi = freq_at(s, i);
    double s2 = 0.0;
    for (int a = 0; a < s.d; ++a) s2 += xi[a] * xi[a];
    vals.push_back(s2);
  }
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             vals.end());
  return cache.emplace(key, std::move(vals)).first->second;
}

double lattice_distance(double lambda, const GridSpec& s) {
  const auto& vals = lattice_spectrum(s);
  auto it = std::lower_bound(vals.begin(), vals.end(), lambda);
  double best = 1e300;
  if (it != vals.end()) best = std::min(best, std::abs(*it - lambda));
  if (it != vals.begin()) best = std::min(best, std::abs(*(it - 1) - lambda));
  return best;
}

double nearest_lattice_value(double lambda, const GridSpec& s) {
  const auto& vals = lattice_spectrum(s);
  auto it = std::lower_bound(vals.begin(), vals.end(), lambda);
  if (it == vals.end()) return vals.back();
  if (it == vals.begin()) return vals.front();
  double up = *it, down = *(it - 1);
  return (lambda - down) <= (up - lambda) ? down : up;
}

double snap_off_lattice(double lambda, const GridSpec& s) {
  const auto& vals = lattice_spectrum(s);
  auto it = std::lower_bound(vals.begin(), vals.end(), lambda);
  if (it == vals.end() || it == vals.begin()) return lambda;
  double up = *it, down = *(it - 1);
  double mid = 0.5 * (up + down);
  double gap = up - down;
  double dist = std::min(lambda - down, up - lambda);
  if (dist < 0.25 * gap) return mid;
  return lambda;
}

Field apply_r0(const Field& g, const SpectralPoint& pt) {
  pt.validate_for_multiplier();
  return apply_multiplier(g, Multiplier::resolvent(pt.z()));
}

BoundaryField boundary_r0(const Field& g, double lambda, BoundarySide side,
                          std::vector<double> ladder) {
  if (ladder.empty())
    for (int k = 0; k <= 10; ++k) ladder.push_back(0.1 * std::pow(2.0, -k));
  if (ladder.size() < 4) throw ContractError("boundary_r0: ladder needs at least 4 rungs");
  const double sgn = side == BoundarySide::plus ? 1.0 : -1.0;

  std::vector<Field> u;
  for (double e : ladder) {
    SpectralPoint pt{lambda, sgn * e, side};
    u.push_back(apply_r0(g, pt));
  }
  auto rich3 = [](const Field& f4, const Field& f2, const Field& f1) {
    // quadratic-in-eps model on nodes (4h, 2h, h), value at 0
    Field out = f1;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = (f4[i] - 6.0 * f2[i] + 8.0 * f1[i]) / 3.0;
    return out;
  };
  const std::size_t K = u.size();
  Field cur = rich3(u[K - 3], u[K - 2], u[K - 1]);
  Field prev = rich3(u[K - 4], u[K - 3], u[K - 2]);
  double err_cur = 0.0;
  {
    Field diff = cur;
    diff -= prev;
    err_cur = l2_norm(diff);
  }
  // one step earlier, to detect a non-converging ladder
  if (K >= 5) {
    Field prev2 = rich3(u[K - 5], u[K - 4], u[K - 3]);
    Field diff = prev;
    diff -= prev2;
    double err_prev = l2_norm(diff);
    if (err_cur > 2.0 * err_prev && err_cur > 1e-10 * l2_norm(cur))
      throw ConvergenceError("boundary_r0: extrapolation error estimate is growing");
  }
  BoundaryField out;
  out.u = std::move(cur);
  out.err_l2 = err_cur;
  out.ladder = std::move(ladder);
  return out;
}

namespace {

using linalg::Vec;

Field field_like(const GridSpec& s, Vec v) {
  Field f(s, Rep::physical);
  f.v = std::move(v);
  return f;
}

// circulant column of R0(z): u = C * g (plain index convolution, no h^d)
std::vector<cplx> green_column(const GridSpec& s, cplx z) {
  std::vector<cplx> arr(s.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    auto xi = freq_at(s, i);
    double s2 = 0.0;
    for (int a = 0; a < s.d; ++a) s2 += xi[a] * xi[a];
    arr[i] = 1.0 / (cplx(s2, 0.0) - z);
  }
  fft::transform_nd(arr.data(), s.d, s.n, +1);
  const double inv_n = 1.0 / double(s.size());
  for (auto& x : arr) x *= inv_n;
  return arr;
}

// support cells of a scalar potential above the relative floor
std::vector<std::uint32_t> support_cells(const Field& V) {
  double vmax = 0.0;
  for (const auto& x : V.v) vmax = std::max(vmax, std::abs(x));
  std::vector<std::uint32_t> cells;
  if (vmax == 0.0) return cells;
  for (std::size_t i = 0; i < V.size(); ++i)
    if (std::abs(V[i]) > 1e-13 * vmax) cells.push_back(std::uint32_t(i));
  return cells;
}

// displacement-indexed lookup into the circulant column
struct CirculantLookup {
  const GridSpec& s;
  const std::vector<cplx>& col;
  std::array<std::size_t, 3> stride{1, 1, 1};

  CirculantLookup(const GridSpec& spec, const std::vector<cplx>& c) : s(spec), col(c) {
    std::size_t st = s.size();
    for (int a = 0; a < s.d; ++a) {
      st /= std::size_t(s.n);
      stride[std::size_t(a)] = st;
    }
  }
  cplx at(std::size_t to, std::size_t from) const {
    auto ti = unflatten(s, to);
    auto fi = unflatten(s, from);
    std::size_t idx = 0;
    for (int a = 0; a < s.d; ++a) {
      int dlt = ti[std::size_t(a)] - fi[std::size_t(a)];
      if (dlt < 0) dlt += s.n;
      idx += std::size_t(dlt) * stride[std::size_t(a)];
    }
    return col[idx];
  }
};

// Exact solver for (Id + R0(z) V .) u = b when V has compact support:
// w = V u satisfies the dense system (Id + V C)|supp w = (V b)|supp and
// u = b - C w.
struct WoodburySolver {
  GridSpec s;
  std::vector<std::uint32_t> cells;
  std::vector<cplx> col;
  std::vector<cplx> lu;
  std::vector<int> piv;
  const Field* V = nullptr;

  WoodburySolver(const GridSpec& spec, const Field& pot, cplx z,
                 const std::vector<std::uint32_t>& supp)
      : s(spec), cells(supp), col(green_column(spec, z)), V(&pot) {
    const int m = int(cells.size());
    CirculantLookup look(s, col);
    std::vector<cplx> mat(std::size_t(m) * std::size_t(m));
    for (int r = 0; r < m; ++r) {
      cplx vr = (*V)[cells[std::size_t(r)]];
      for (int c = 0; c < m; ++c) {
        cplx val = vr * look.at(cells[std::size_t(r)], cells[std::size_t(c)]);
        if (r == c) val += 1.0;
        mat[std::size_t(r) * std::size_t(m) + std::size_t(c)] = val;
      }
    }
    lu = std::move(mat);
    linalg::lu_factor(lu, piv, m);
  }

  // u += coef * sum_c w_c col[. - c], axis-wise wrapped index tables
  void add_circulant(Field& u, const Vec& w, cplx coef) const {
    const int n = s.n;
    std::vector<int> wrap0(static_cast<std::size_t>(n)), wrap1(static_cast<std::size_t>(n)), wrap2(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < cells.size(); ++r) {
      auto ci = unflatten(s, cells[r]);
      cplx wc = coef * w[r];
      if (wc == cplx(0.0, 0.0)) continue;
      for (int i = 0; i < n; ++i) {
        wrap0[std::size_t(i)] = (i - ci[0] + n) % n;
        wrap1[std::size_t(i)] = (i - ci[1] + n) % n;
        if (s.d == 3) wrap2[std::size_t(i)] = (i - ci[2] + n) % n;
      }
      if (s.d == 2) {
        std::size_t idx = 0;
        for (int i0 = 0; i0 < n; ++i0) {
          const cplx* row = col.data() + std::size_t(wrap0[std::size_t(i0)]) * std::size_t(n);
          for (int i1 = 0; i1 < n; ++i1, ++idx) u[idx] += wc * row[wrap1[std::size_t(i1)]];
        }
      } else {
        std::size_t idx = 0;
        const std::size_t n2 = std::size_t(n) * std::size_t(n);
        for (int i0 = 0; i0 < n; ++i0) {
          const cplx* pl0 = col.data() + std::size_t(wrap0[std::size_t(i0)]) * n2;
          for (int i1 = 0; i1 < n; ++i1) {
            const cplx* row = pl0 + std::size_t(wrap1[std::size_t(i1)]) * std::size_t(n);
            for (int i2 = 0; i2 < n; ++i2, ++idx) u[idx] += wc * row[wrap2[std::size_t(i2)]];
          }
        }
      }
    }
  }

  Field solve(const Field& b) const {
    const int m = int(cells.size());
    Vec w(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r)
      w[std::size_t(r)] = (*V)[cells[std::size_t(r)]] * b[cells[std::size_t(r)]];
    linalg::lu_solve(lu, piv, m, w);
    Field u = b;
    add_circulant(u, w, cplx(-1.0, 0.0));
    return u;
  }

  // u + C (V u) without any transforms
  Field apply(const Field& uin) const {
    const int m = int(cells.size());
    Vec w(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r)
      w[std::size_t(r)] = (*V)[cells[std::size_t(r)]] * uin[cells[std::size_t(r)]];
    Field u = uin;
    add_circulant(u, w, cplx(1.0, 0.0));
    return u;
  }
};

} // namespace

SolveResult solve_perturbed(const Field& g, const SpectralPoint& pt,
                            const PerturbationOperator& P, const SolveConfig& cfg) {
  pt.validate_for_multiplier();
  const GridSpec& s = g.spec;
  const cplx z = pt.z();

  SolveResult res;
  Field rhs = apply_r0(g, pt);
  if (P.is_none()) {
    res.u = std::move(rhs);
    res.converged = true;
    res.residual = 0.0;
    res.method = "multiplier";
    return res;
  }

  auto op_apply = [&](const Field& u) {
    Field lu = apply_L(u, P);
    Field rlu = apply_r0(lu, pt);
    Field out = u;
    out += rlu;
    return out;
  };
  const double rhs_norm = l2_norm(rhs);
  auto residual_of = [&](const Field& u) {
    if (rhs_norm == 0.0) return 0.0;
    Field r = op_apply(u);
    r -= rhs;
    return l2_norm(r) / rhs_norm;
  };

  // compact-support scalar potentials admit an exact dense reduction
  if (cfg.method == SolveConfig::Method::auto_select &&
      P.kind == PerturbationOperator::Kind::scalar) {
    auto cells = support_cells(P.V);
    if (!cells.empty() && int(cells.size()) <= cfg.woodbury_max_cells) {
      WoodburySolver solver(s, P.V, z, cells);
      res.u = solver.solve(rhs);
      res.iterations = 1;
      res.residual = residual_of(res.u);
      res.method = "woodbury";
      res.converged = res.residual <= std::max(cfg.tol, 1e-9);
      if (res.converged) return res;
    }
  }

  if (cfg.method == SolveConfig::Method::dense) {
    const std::size_t N = s.size();
    if (N > 4096) throw ContractError("solve_perturbed: dense method limited to 4096 unknowns");
    std::vector<cplx> mat(N * N);
    Field basis(s, Rep::physical);
    for (std::size_t j = 0; j < N; ++j) {
      std::fill(basis.v.begin(), basis.v.end(), cplx(0.0, 0.0));
      basis[j] = 1.0;
      Field col = op_apply(basis);
      for (std::size_t i = 0; i < N; ++i) mat[i * N + j] = col[i];
    }
    std::vector<int> piv;
    linalg::lu_factor(mat, piv, int(N));
    Vec b = rhs.v;
    linalg::lu_solve(mat, piv, int(N), b);
    res.u = field_like(s, std::move(b));
    res.iterations = 1;
    res.residual = residual_of(res.u);
    res.method = "dense";
    res.converged = res.residual <= 100.0 * 1e-12;
    return res;
  }

  linalg::Op A = [&](const Vec& in, Vec& out) {
    Field u = field_like(s, in);
    out = op_apply(u).v;
  };
  Vec x;
  auto gm = linalg::gmres(A, rhs.v, x, cfg.restart, cfg.max_iters, cfg.tol);
  res.u = field_like(s, std::move(x));
  res.iterations = gm.iterations;
  res.residual = gm.residual;
  res.converged = gm.converged;
  res.method = "gmres";
  if (!res.converged)
    throw ConvergenceError(
        "solve_perturbed: Krylov iteration did not reach tolerance (residual " +
        std::to_string(gm.residual) + " after " + std::to_string(gm.iterations) +
        " iterations; a nearby exceptional energy is a possible cause)");
  return res;
}

MinSingularResult min_singular(const SpectralPoint& pt, const PerturbationOperator& P,
                               const SolveConfig& cfg, const std::vector<Field>* deflate) {
  MinSingularResult out;
  // s.validate not needed; P none -> identity operator
  if (P.is_none()) {
    out.smin = 1.0;
    out.converged = true;
    out.iterations = 0;
    return out;
  }
  const GridSpec& s = P.kind == PerturbationOperator::Kind::scalar ? P.V.spec : P.a.spec;
  const cplx z = pt.z();
  const SpectralPoint ptc{pt.lambda, -pt.eps,
                          pt.side == BoundarySide::plus ? BoundarySide::minus : BoundarySide::plus};

  auto apply_op = [&](const Field& u) {
    Field lu = apply_L(u, P);
    Field rlu = apply_r0(lu, pt);
    Field o = u;
    o += rlu;
    return o;
  };
  // Op* u = u + L R0(conj z) u
  auto apply_op_h = [&](const Field& u) {
    Field ru = apply_r0(u, ptc);
    Field lru = apply_L(ru, P);
    Field o = u;
    o += lru;
    return o;
  };

  std::function<Field(const Field&)> inv_op, inv_op_h;
  std::optional<WoodburySolver> wood, wood_conj;
  if (P.kind == PerturbationOperator::Kind::scalar) {
    auto cells = support_cells(P.V);
    if (!cells.empty() && int(cells.size()) <= cfg.woodbury_max_cells) {
      wood.emplace(s, P.V, z, cells);
      wood_conj.emplace(s, P.V, std::conj(z), cells);
    }
  }
  if (wood) {
    inv_op = [&](const Field& b) { return wood->solve(b); };
    // (Id + L R0(zbar))^{-1} b = b - L m with (Id + R0(zbar) L) m = R0(zbar) b
    inv_op_h = [&](const Field& b) {
      SpectralPoint pc = ptc;
      Field rb = apply_r0(b, pc);
      Field m = wood_conj->solve(rb);
      Field lm = apply_L(m, P);
      Field o = b;
      o -= lm;
      return o;
    };
  } else {
    auto krylov_inverse = [&](const Field& b, bool hermitian_side) {
      linalg::Op A = [&, hermitian_side](const Vec& in, Vec& outv) {
        Field u = field_like(s, in);
        outv = (hermitian_side ? apply_op_h(u) : apply_op(u)).v;
      };
      Vec x;
      auto gm = linalg::gmres(A, b.v, x, cfg.restart, cfg.max_iters, std::max(cfg.tol, 1e-9));
      if (!gm.converged)
        throw ConvergenceError("min_singular: inner Krylov solve stagnated");
      return field_like(s, std::move(x));
    };
    inv_op = [krylov_inverse](const Field& b) { return krylov_inverse(b, false); };
    inv_op_h = [krylov_inverse](const Field& b) { return krylov_inverse(b, true); };
  }

  linalg::Op A = [&](const Vec& in, Vec& o) {
    Field u = field_like(s, in);
    o = (wood ? wood->apply(u) : apply_op(u)).v;
  };
  linalg::Op SA = [&](const Vec& in, Vec& o) { o = inv_op(field_like(s, in)).v; };
  linalg::Op SAH = [&](const Vec& in, Vec& o) { o = inv_op_h(field_like(s, in)).v; };

  std::vector<Vec> defl;
  if (deflate)
    for (const auto& f : *deflate) defl.push_back(f.v);
  auto r = linalg::smallest_singular(A, SA, SAH, s.size(), 80, 1e-3, 2024,
                                     defl.empty() ? nullptr : &defl);
  out.smin = r.sigma_min;
  out.iterations = r.iterations;
  out.converged = r.converged;
  out.vector = field_like(s, std::move(r.vector));
  if (!r.converged) throw ConvergenceError("min_singular: inverse iteration stagnated");
  return out;
}

ExceptionalScan scan_exceptional(double lambda_min, double lambda_max, int lambda_count,
                                 const PerturbationOperator& P, const ScanConfig& cfg) {
  if (!(lambda_min < lambda_max)) throw ContractError("scan_exceptional: empty interval");
  if (lambda_min <= 0.0 && lambda_max >= 0.0)
    throw ContractError("scan_exceptional: the interval must not contain 0");
  const GridSpec& s = P.kind == PerturbationOperator::Kind::scalar ? P.V.spec : P.a.spec;

  ExceptionalScan scan;
  std::vector<double> lambdas;
  for (int i = 0; i < lambda_count; ++i) {
    double lam = lambda_min + (lambda_max - lambda_min) * double(i) / double(lambda_count - 1);
    lambdas.push_back(snap_off_lattice(lam, s));
  }

  std::vector<double> per_lambda_min(lambdas.size(), 1e300);
  std::vector<bool> monotone(lambdas.size(), true);
  std::vector<Field> kernel_vec(lambdas.size());

  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    double prev = -1.0;
    for (double e : cfg.eps_ladder) {
      SpectralPoint pt{lambdas[li], e, BoundarySide::plus};
      auto ms = min_singular(pt, P, cfg.solver);
      ScanRecord rec;
      rec.lambda = lambdas[li];
      rec.eps = e;
      rec.side = +1;
      rec.smin = ms.smin;
      rec.iters = ms.iterations;
      rec.residual = 0.0;
      scan.records.push_back(rec);
      if (prev >= 0.0 && ms.smin > prev * 1.05) monotone[li] = false;
      prev = ms.smin;
      if (ms.smin < per_lambda_min[li]) {
        per_lambda_min[li] = ms.smin;
        kernel_vec[li] = ms.vector;
      }
    }
  }

  // dips: below threshold, monotone along the ladder, local minimum in lambda
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    if (per_lambda_min[li] >= cfg.dip_threshold || !monotone[li]) continue;
    bool local_min = true;
    if (li > 0 && per_lambda_min[li] >= per_lambda_min[li - 1]) local_min = false;
    if (li + 1 < lambdas.size() && per_lambda_min[li + 1] < per_lambda_min[li]) local_min = false;
    if (!local_min) continue;
    DipInfo dip;
    dip.lambda = lambdas[li];
    dip.smin = per_lambda_min[li];
    dip.kernel_vector = kernel_vec[li];
    // multiplicity by deflated re-runs at the smallest eps
    std::vector<Field> deflate{kernel_vec[li]};
    SpectralPoint pt{lambdas[li], cfg.eps_ladder.back(), BoundarySide::plus};
    while (dip.multiplicity < cfg.max_multiplicity) {
      MinSingularResult next;
      try {
        next = min_singular(pt, P, cfg.solver, &deflate);
      } catch (const ConvergenceError&) {
        break;
      }
      if (next.smin >= cfg.dip_threshold) break;
      ++dip.multiplicity;
      deflate.push_back(next.vector);
    }
    scan.dips.push_back(std::move(dip));
  }
  return scan;
}

Field apply_h(const Field& u, const PerturbationOperator& P) {
  Field out = apply_multiplier(u, Multiplier::radial("lap", [](double s2) { return cplx(s2, 0.0); }));
  if (!P.is_none()) out += apply_L(u, P);
  return out;
}

std::vector<EigenPairField> eigensolve_direct(const GridSpec& s, const PerturbationOperator& P,
                                              int count,
                                              std::optional<std::pair<double, double>> window,
                                              const EigensolveConfig& cfg) {
  s.validate();
  linalg::Op A = [&](const Vec& in, Vec& out) {
    Field u = field_like(s, in);
    out = apply_h(u, P).v;
  };
  auto pairs = linalg::lowest_eigenpairs(A, s.size(), count, cfg.tol, cfg.max_steps, cfg.seed);
  std::vector<EigenPairField> out;
  for (auto& p : pairs) {
    if (window && (p.value < window->first || p.value > window->second)) continue;
    EigenPairField e;
    e.value = p.value;
    e.residual = p.residual;
    e.u = field_like(s, std::move(p.vector));
    out.push_back(std::move(e));
  }
  return out;
}

DecayReport eigen_decay_check(const EigenPairField& pair, double lambda,
                              const std::vector<double>& N_list) {
  if (pair.residual > 1e-6)
    throw ContractError("eigen_decay_check: eigenpair residual exceeds 1e-6");
  const GridSpec& s = pair.u.spec;
  DecayReport rep;
  rep.N_values = N_list;
  rep.expected_slope = -std::sqrt(std::abs(lambda));

  const double rmask = 0.40 * s.box; // outer region indicating wrap contamination
  for (double N : N_list) {
    Field w(s, Rep::physical);
    Field w_in(s, Rep::physical);
    for (std::size_t i = 0; i < w.size(); ++i) {
      double r2 = radius2_at(s, i);
      cplx val = std::pow(1.0 + r2, N) * pair.u[i];
      w[i] = val;
      w_in[i] = (r2 <= rmask * rmask) ? val : cplx(0.0, 0.0);
    }
    double full = sobolev_norm(w, 1.0, 2.0);
    double inner = sobolev_norm(w_in, 1.0, 2.0);
    rep.weighted_h1.push_back(full);
    rep.tail_fraction.push_back(full > 0.0 ? std::abs(full - inner) / full : 0.0);
  }

  // radial profile fit of log |u| against r
  const double rlo = 2.0, rhi = 0.35 * s.box;
  std::map<int, std::pair<double, int>> bins; // bin -> (sum |u|, count)
  const double db = s.h();
  double peak = 0.0;
  for (std::size_t i = 0; i < pair.u.size(); ++i) {
    double r = std::sqrt(radius2_at(s, i));
    if (r > rhi) continue;
    peak = std::max(peak, std::abs(pair.u[i]));
    if (r < rlo) continue;
    int b = int(r / db);
    auto& e = bins[b];
    e.first += std::abs(pair.u[i]);
    e.second += 1;
  }
  // least squares on log(mean |u| * r^{(d-1)/2}) vs r, restricted to four
  // decades of dynamic range so the band-limit floor stays out of the fit
  const double floor_level = 1e-4 * peak;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (auto& [b, e] : bins) {
    double r = (b + 0.5) * db;
    double mean = e.first / e.second;
    if (mean <= floor_level) continue;
    double y = std::log(mean * std::pow(r, 0.5 * (s.d - 1)));
    sx += r;
    sy += y;
    sxx += r * r;
    sxy += r * y;
    ++m;
  }
  if (m >= 3) {
    rep.slope = (double(m) * sxy - sx * sy) / (double(m) * sxx - sx * sx);
  }
  rep.decaying = rep.slope < -0.05;
  return rep;
}

} // namespace lapkit
