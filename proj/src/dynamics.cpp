#include "lapkit/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "lapkit/fft.hpp"
#include "lapkit/linalg.hpp"

namespace lapkit {

double spectral_radius_estimate(const GridSpec& s, const PerturbationOperator& P) {
  const double kin = double(s.d) * s.xi_max() * s.xi_max();
  double pot = 0.0;
  if (P.kind == PerturbationOperator::Kind::scalar) {
    for (const auto& v : P.V.v) pot = std::max(pot, std::abs(v));
  } else if (P.kind == PerturbationOperator::Kind::first_order) {
    double amax = 0.0;
    for (const auto& v : P.a.v) amax = std::max(amax, std::abs(v));
    pot = 2.0 * amax * s.xi_max();
  }
  return kin + pot;
}

void EvolutionConfig::validate(const GridSpec& s, const PerturbationOperator& P) const {
  if (!(dt > 0.0)) throw ContractError("EvolutionConfig: dt must be positive");
  Method m = method;
  if (m == Method::auto_select)
    m = P.kind == PerturbationOperator::Kind::first_order ? Method::lanczos_exp
                                                          : Method::split_step;
  if (m == Method::split_step && P.kind == PerturbationOperator::Kind::first_order)
    throw ContractError("EvolutionConfig: split-step requires a scalar (or zero) perturbation");
  if (m == Method::lanczos_exp) {
    if (dt * spectral_radius_estimate(s, P) > 0.5)
      throw ContractError("EvolutionConfig: dt times the spectral radius exceeds the Lanczos budget");
  }
}

namespace {

// exact free propagator
Field evolve_free(const Field& f, double t) {
  return apply_multiplier(f, Multiplier::radial("exp_kin", [t](double s2) {
                            return std::exp(cplx(0.0, -t * s2));
                          }));
}

Field evolve_split_step(const Field& f, double t, const PerturbationOperator& P, double dt) {
  const GridSpec& s = f.spec;
  const int steps = std::max(1, int(std::ceil(std::abs(t) / dt)));
  const double step = t / steps;

  // phase tables
  std::vector<cplx> half_pot(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    half_pot[i] = std::exp(cplx(0.0, -0.5 * step * P.V[i].real()));
  std::vector<cplx> kin(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto xi = freq_at(s, i);
    double s2 = 0.0;
    for (int a = 0; a < s.d; ++a) s2 += xi[a] * xi[a];
    kin[i] = std::exp(cplx(0.0, -step * s2));
  }

  Field u = f;
  for (int k = 0; k < steps; ++k) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= half_pot[i];
    Field uh = to_frequency(u);
    for (std::size_t i = 0; i < uh.size(); ++i) uh[i] *= kin[i];
    u = to_physical(uh);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= half_pot[i];
  }
  return u;
}

Field evolve_lanczos(const Field& f, double t, const PerturbationOperator& P,
                     const EvolutionConfig& cfg) {
  const GridSpec& s = f.spec;
  const int steps = std::max(1, int(std::ceil(std::abs(t) / cfg.dt)));
  const double step = t / steps;
  const int m = std::max(6, cfg.krylov_dim);
  auto vec_norm = [](const Field& g) { return linalg::nrm2(g.v); };

  Field u = f;
  const double norm0 = l2_norm(f);
  for (int k = 0; k < steps; ++k) {
    const double beta0 = vec_norm(u);
    if (beta0 == 0.0) return u;
    std::vector<Field> basis;
    basis.push_back(u);
    basis.back() *= 1.0 / beta0;
    std::vector<double> alpha, beta;
    for (int j = 0; j < m; ++j) {
      Field w = apply_h(basis.back(), P);
      cplx a = linalg::dot(w.v, basis.back().v);
      alpha.push_back(a.real());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= a * basis.back()[i];
      if (j > 0)
        for (std::size_t i = 0; i < w.size(); ++i)
          w[i] -= beta.back() * basis[basis.size() - 2][i];
      for (const auto& q : basis) {
        cplx c = linalg::dot(w.v, q.v);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= c * q[i];
      }
      const double b = vec_norm(w);
      if (j + 1 >= m || b < 1e-12 * beta0) break;
      beta.push_back(b);
      w *= 1.0 / b;
      basis.push_back(std::move(w));
    }
    const int mm = int(alpha.size());
    std::vector<double> dd = alpha, oo(alpha.size(), 0.0);
    for (int j = 0; j + 1 < mm; ++j) oo[std::size_t(j)] = beta[std::size_t(j)];
    std::vector<double> zz;
    linalg::tridiag_eigen(dd, oo, &zz);
    // coefficients of e^{-i step T} e1 in the Lanczos basis
    Field next(s, Rep::physical);
    for (int r = 0; r < mm; ++r) {
      cplx acc(0.0, 0.0);
      for (int q = 0; q < mm; ++q)
        acc += zz[std::size_t(r) * std::size_t(mm) + std::size_t(q)] *
               std::exp(cplx(0.0, -step * dd[std::size_t(q)])) *
               zz[std::size_t(q)]; // row 0 of zz
      cplx c = beta0 * acc;
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += c * basis[std::size_t(r)][i];
    }
    u = std::move(next);

    double drift = std::abs(l2_norm(u) - norm0) / std::max(norm0, 1e-300);
    if (drift > 1e-6 * std::abs(step * (k + 1)) + 1e-8)
      throw ConvergenceError("evolve: norm drift exceeds the stability budget");
  }
  return u;
}

} // namespace

Field evolve(const Field& f, double t, const PerturbationOperator& P,
             const EvolutionConfig& cfg) {
  cfg.validate(f.spec, P);
  if (t == 0.0) return f;
  if (P.is_none()) return evolve_free(f, t);
  EvolutionConfig::Method m = cfg.method;
  if (m == EvolutionConfig::Method::auto_select)
    m = P.kind == PerturbationOperator::Kind::first_order ? EvolutionConfig::Method::lanczos_exp
                                                          : EvolutionConfig::Method::split_step;
  if (m == EvolutionConfig::Method::split_step) return evolve_split_step(f, t, P, cfg.dt);
  return evolve_lanczos(f, t, P, cfg);
}

namespace {

// Chebyshev coefficients of the indicator of [x1, x2] in [-1, 1]
std::vector<double> indicator_cheb(double x1, double x2, int degree, bool jackson) {
  const double t1 = std::acos(std::clamp(x1, -1.0, 1.0)); // larger angle
  const double t2 = std::acos(std::clamp(x2, -1.0, 1.0));
  std::vector<double> c(std::size_t(degree) + 1, 0.0);
  c[0] = (t1 - t2) / kPi;
  for (int k = 1; k <= degree; ++k)
    c[std::size_t(k)] = 2.0 / (kPi * k) * (std::sin(k * t1) - std::sin(k * t2));
  if (jackson) {
    const double K = degree + 1.0;
    for (int k = 0; k <= degree; ++k) {
      double g = ((K - k) * std::cos(kPi * k / K) + std::sin(kPi * k / K) / std::tan(kPi / K)) / K;
      c[std::size_t(k)] *= g;
    }
  }
  return c;
}

} // namespace

SpectralProjector spectral_window(const GridSpec& s, const PerturbationOperator& P, double a,
                                  double b, const WindowConfig& cfg,
                                  const std::vector<double>* known_eigenvalues) {
  if (!(a < b)) throw ContractError("spectral_window: empty interval");
  if (known_eigenvalues)
    for (double ev : *known_eigenvalues)
      if (ev >= a && ev <= b)
        throw ContractError("spectral_window: the interval meets a detected eigenvalue");

  SpectralProjector E;
  E.a = a;
  E.b = b;
  E.spec = s;
  E.P = P;
  if (P.is_none()) {
    E.method = "multiplier";
    return E;
  }
  if (s.size() <= cfg.dense_limit && P.kind == PerturbationOperator::Kind::scalar) {
    // dense real-symmetric eigenbasis: H = circulant(-Delta) + diag(V)
    const std::size_t N = s.size();
    std::vector<cplx> lap_col(N);
    for (std::size_t i = 0; i < N; ++i) {
      auto xi = freq_at(s, i);
      double s2 = 0.0;
      for (int aa = 0; aa < s.d; ++aa) s2 += xi[aa] * xi[aa];
      lap_col[i] = s2;
    }
    fft::transform_nd(lap_col.data(), s.d, s.n, +1);
    for (auto& x : lap_col) x /= double(N);
    auto mat = std::make_shared<std::vector<double>>(N * N, 0.0);
    for (std::size_t r = 0; r < N; ++r) {
      auto ri = unflatten(s, r);
      for (std::size_t c = 0; c < N; ++c) {
        auto ci = unflatten(s, c);
        std::size_t idx = 0;
        for (int aa = 0; aa < s.d; ++aa) {
          int dlt = ri[std::size_t(aa)] - ci[std::size_t(aa)];
          if (dlt < 0) dlt += s.n;
          idx = idx * std::size_t(s.n) + std::size_t(dlt);
        }
        (*mat)[r * N + c] = lap_col[idx].real();
      }
      (*mat)[r * N + r] += P.V[r].real();
    }
    auto evals = std::make_shared<std::vector<double>>();
    linalg::dense_sym_eigen(*mat, int(N), *evals);
    E.method = "dense";
    E.basis = mat;
    E.evals = evals;
    return E;
  }
  E.method = "chebyshev";
  double vmin = 0.0, vmax = 0.0;
  if (P.kind == PerturbationOperator::Kind::scalar) {
    for (const auto& v : P.V.v) {
      vmin = std::min(vmin, v.real());
      vmax = std::max(vmax, v.real());
    }
  }
  const double lo = vmin - 0.5;
  const double hi = double(s.d) * s.xi_max() * s.xi_max() + vmax + 0.5;
  E.map_center = 0.5 * (hi + lo);
  E.map_half = 0.5 * (hi - lo);
  double x1 = (a - E.map_center) / E.map_half;
  double x2 = (b - E.map_center) / E.map_half;
  int degree = cfg.cheb_degree;
  if (degree <= 0) {
    // Jackson transition width is about pi * range / degree
    degree = int(std::ceil(kPi * (hi - lo) / std::max(1e-6, cfg.transition)));
    degree = std::min(degree, cfg.max_degree);
    degree = std::max(degree, 32);
  }
  E.coef = indicator_cheb(x1, x2, degree, cfg.jackson);
  return E;
}

Field SpectralProjector::apply(const Field& f) const {
  if (method == "multiplier") {
    return apply_multiplier(f, Multiplier::band_indicator(a, b));
  }
  if (method == "dense") {
    const std::size_t N = spec.size();
    // coefficients <f, phi_k> for eigenvalues inside [a, b]
    Field out(spec, Rep::physical);
    for (std::size_t k = 0; k < N; ++k) {
      double ev = (*evals)[k];
      if (ev < a || ev > b) continue;
      cplx c(0.0, 0.0);
      for (std::size_t i = 0; i < N; ++i) c += f[i] * (*basis)[i * N + k];
      for (std::size_t i = 0; i < N; ++i) out[i] += c * (*basis)[i * N + k];
    }
    return out;
  }
  // chebyshev
  const double ic = 1.0 / map_half;
  auto hmap = [&](const Field& u) {
    Field hu = apply_h(u, P);
    Field out = hu;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (hu[i] - map_center * u[i]) * ic;
    return out;
  };
  Field t0 = f;
  Field t1 = hmap(f);
  Field acc = f;
  acc *= coef[0];
  {
    Field tmp = t1;
    tmp *= coef[1];
    acc += tmp;
  }
  for (std::size_t k = 2; k < coef.size(); ++k) {
    Field t2 = hmap(t1);
    t2 *= 2.0;
    t2 -= t0;
    t0 = std::move(t1);
    t1 = std::move(t2);
    Field tmp = t1;
    tmp *= coef[k];
    acc += tmp;
  }
  return acc;
}

double SpectralProjector::idempotence_defect(const Field& probe) const {
  Field e = apply(probe);
  Field ee = apply(e);
  ee -= e;
  double n = l2_norm(probe);
  return n > 0.0 ? l2_norm(ee) / n : 0.0;
}

double SpectralProjector::symmetry_defect(const Field& u, const Field& v) const {
  cplx lhs = pairing(apply(u), v);
  cplx rhs = pairing(u, apply(v));
  double scale = l2_norm(u) * l2_norm(v);
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

SmoothingReport smoothing_check(const Field& f, const SpectralProjector& E,
                                const PerturbationOperator& P, const std::vector<double>& T_ladder,
                                const EvolutionConfig& cfg) {
  if (T_ladder.empty()) throw ContractError("smoothing_check: empty T ladder");
  const GridSpec& s = f.spec;
  const ShellDecomposition& sh = shells_for(s);
  SmoothingReport rep;
  rep.T_values = T_ladder;
  rep.f_l2 = l2_norm(f);
  const double Tmax = *std::max_element(T_ladder.begin(), T_ladder.end());

  Field u0 = E.apply(f);
  const Multiplier s_rest = Multiplier::sobolev(1.0 / (s.d + 1));
  const Multiplier s_one = Multiplier::sobolev(1.0);

  std::vector<double> acc_rest(s.size(), 0.0), acc_shell(s.size(), 0.0);
  std::vector<std::vector<double>> rest_at_T, shell_at_T;

  const int steps = std::max(1, int(std::ceil(Tmax / cfg.dt)));
  const double step = Tmax / steps;
  std::vector<int> checkpoints;
  for (double T : T_ladder) checkpoints.push_back(int(std::round(T / step)));

  auto accumulate = [&](const Field& u, double w) {
    Field ar = apply_multiplier(u, s_rest);
    Field as = apply_multiplier(u, s_one);
    for (std::size_t i = 0; i < u.size(); ++i) {
      acc_rest[i] += w * std::norm(ar[i]);
      acc_shell[i] += w * std::norm(as[i]);
    }
  };

  // both time directions, trapezoid weights; t = 0 counted once with weight 1
  accumulate(u0, 1.0);
  Field up = u0, um = u0;
  std::size_t next_cp = 0;
  for (int k = 1; k <= steps; ++k) {
    up = evolve(up, step, P, cfg);
    um = evolve(um, -step, P, cfg);
    double w = (k == steps) ? 0.5 : 1.0;
    accumulate(up, w);
    accumulate(um, w);
    while (next_cp < checkpoints.size() && k == checkpoints[next_cp]) {
      std::vector<double> r = acc_rest, sfield = acc_shell;
      rest_at_T.push_back(std::move(r));
      shell_at_T.push_back(std::move(sfield));
      ++next_cp;
    }
  }
  while (rest_at_T.size() < T_ladder.size()) {
    rest_at_T.push_back(acc_rest);
    shell_at_T.push_back(acc_shell);
  }

  for (std::size_t t = 0; t < T_ladder.size(); ++t) {
    Field gr(s, Rep::physical), gs(s, Rep::physical);
    for (std::size_t i = 0; i < s.size(); ++i) {
      gr[i] = std::sqrt(rest_at_T[t][i] * step);
      gs[i] = std::sqrt(shell_at_T[t][i] * step);
    }
    rep.q_restriction.push_back(lp_norm(gr, p_high(s.d)));
    rep.q_shell.push_back(bstar_norm(gs, sh));
  }
  return rep;
}

WaveOpReport wave_operator(const Field& f, double a, double b, const PerturbationOperator& P,
                           std::vector<double> t_ladder, const EvolutionConfig& cfg,
                           const SpectralProjector* E_interacting,
                           const Field* completeness_probe) {
  const GridSpec& s = f.spec;
  WaveOpReport rep;
  std::sort(t_ladder.begin(), t_ladder.end());
  rep.t_ladder = t_ladder;
  const double vmax = 2.0 * std::sqrt(std::max(a, b));
  rep.t_wrap = 0.4 * s.box / (2.0 * vmax);

  Field f0 = apply_multiplier(f, Multiplier::band_indicator(a, b));
  const double f0n = l2_norm(f0);
  if (f0n < 1e-14) throw ContractError("wave_operator: the window annihilates the probe");

  std::vector<Field> W;
  for (double t : t_ladder) {
    Field gt = evolve(f0, t, PerturbationOperator::none_operator(), cfg); // e^{-i t H0} f0
    if (!P.is_none()) {
      rep.intertwining.push_back(l2_norm(apply_L(gt, P)) / f0n);
    } else {
      rep.intertwining.push_back(0.0);
    }
    Field wt = evolve(gt, -t, P, cfg); // e^{+i t H}
    rep.isometry_defect.push_back(std::abs(l2_norm(wt) - f0n) / f0n);
    W.push_back(std::move(wt));
  }
  for (std::size_t k = 0; k + 1 < W.size(); ++k) {
    Field d = W[k + 1];
    d -= W[k];
    rep.cauchy_increments.push_back(l2_norm(d));
  }
  rep.cauchy_decreasing = true;
  for (std::size_t k = 0; k + 1 < rep.cauchy_increments.size(); ++k) {
    if (t_ladder[k + 2] > rep.t_wrap) break; // only pre-wrap increments count
    if (rep.cauchy_increments[k + 1] > rep.cauchy_increments[k]) rep.cauchy_decreasing = false;
  }

  if (P.is_none()) {
    Field d = W.back();
    d -= f0;
    rep.free_case_error = l2_norm(d);
  }

  if (E_interacting && completeness_probe && !P.is_none()) {
    const double t = t_ladder.back();
    Field g = E_interacting->apply(*completeness_probe);
    // W~ g = e^{i t H0} e^{-i t H} g
    Field hg = evolve(g, t, P, cfg);
    Field wtg = evolve(hg, -t, PerturbationOperator::none_operator(), cfg);
    // W (W~ g)
    Field e0w = apply_multiplier(wtg, Multiplier::band_indicator(a, b));
    Field back = evolve(e0w, t, PerturbationOperator::none_operator(), cfg);
    Field ww = evolve(back, -t, P, cfg);
    ww -= g;
    double gn = l2_norm(g);
    rep.completeness_defect = gn > 0.0 ? l2_norm(ww) / gn : 0.0;
  }
  return rep;
}

} // namespace lapkit
