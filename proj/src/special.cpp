#include "lapkit/special.hpp"

#include <cmath>

namespace lapkit {

namespace {

// Taylor coefficients of 1/Gamma(1+x), |x| <= 1/2.
constexpr double kInvGammaCoef[] = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu))/(2 mu), gam2 the even part,
// gampl = 1/Gamma(1+mu), gammi = 1/Gamma(1-mu); |mu| <= 1/2.
void gamma_temme(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
  double odd = 0.0;     // sum over odd m of b_m mu^{m-1}
  double even = 0.0;    // sum over even m of b_m mu^m
  double pw_prev = 0.0; // mu^{m-1}
  double pw = 1.0;      // mu^m
  for (int m = 0; m < int(sizeof(kInvGammaCoef) / sizeof(double)); ++m) {
    if (m % 2 == 0)
      even += kInvGammaCoef[m] * pw;
    else
      odd += kInvGammaCoef[m] * pw_prev;
    pw_prev = pw;
    pw *= mu;
  }
  gam1 = -odd;
  gam2 = even;
  gampl = gam2 - mu * gam1;
  gammi = gam2 + mu * gam1;
}

// K_mu and K_{mu+1} by Temme's series; |w| <= 2, |arg w| < pi, |mu| <= 1/2.
void temme_k(double mu, cplx w, cplx& kmu, cplx& kmup1) {
  const double eps = 1e-17;
  const double mu2 = mu * mu;
  const cplx halfw = 0.5 * w;
  const cplx d = -std::log(halfw);
  const cplx e = mu * d;
  const double pimu = kPi * mu;
  const double fact = (std::abs(pimu) < 1e-8) ? 1.0 + pimu * pimu / 6.0 : pimu / std::sin(pimu);
  const cplx fact2 = (std::abs(e) < 1e-8) ? 1.0 + e * e / 6.0 : std::sinh(e) / e;
  double gam1, gam2, gampl, gammi;
  gamma_temme(mu, gam1, gam2, gampl, gammi);
  cplx ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
  cplx sum = ff;
  const cplx ee = std::exp(e);
  cplx p = 0.5 * ee / gampl;
  cplx q = 0.5 / (ee * gammi);
  cplx c = 1.0;
  const cplx x2 = halfw * halfw;
  cplx sum1 = p;
  for (int i = 1; i <= 2000; ++i) {
    ff = (double(i) * ff + p + q) / (double(i) * double(i) - mu2);
    c *= x2 / double(i);
    p /= (double(i) - mu);
    q /= (double(i) + mu);
    cplx del = c * ff;
    sum += del;
    cplx del1 = c * (p - double(i) * ff);
    sum1 += del1;
    if (std::abs(del) < std::abs(sum) * eps && std::abs(del1) < std::abs(sum1) * eps) break;
  }
  kmu = sum;
  kmup1 = sum1 * (2.0 / w);
}

// K_mu and K_{mu+1} by Steed's continued fraction; Re w >= 0, |w| > 2.
void cf2_k(double mu, cplx w, cplx& kmu, cplx& kmup1) {
  const double eps = 1e-16;
  const int maxit = 200000;
  const double mu2 = mu * mu;
  cplx b = 2.0 * (1.0 + w);
  cplx d = 1.0 / b;
  cplx h = d, delh = d;
  const double a1 = 0.25 - mu2;
  cplx q1 = 0.0, q2 = 1.0;
  cplx q = a1, c = a1;
  cplx a = -a1;
  cplx s = 1.0 + q * delh;
  bool ok = false;
  for (int i = 2; i <= maxit; ++i) {
    a -= 2.0 * (i - 1);
    c = -a * c / double(i);
    cplx qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    cplx dels = q * delh;
    s += dels;
    if (std::abs(dels) < std::abs(s) * eps) {
      ok = true;
      break;
    }
  }
  if (!ok) throw ConvergenceError("bessel_k: continued fraction did not converge");
  h = a1 * h;
  kmu = std::sqrt(kPi / (2.0 * w)) * std::exp(-w) / s;
  kmup1 = kmu * (mu + w + 0.5 - h) / w;
}

// Asymptotic expansion; returns false if the requested tolerance is not
// reachable before the series starts diverging.
bool asym_k(double nu, cplx w, cplx& out, double tol) {
  cplx sum = 1.0, term = 1.0;
  double best = 1.0;
  const double fnu2 = 4.0 * nu * nu;
  for (int k = 1; k <= 60; ++k) {
    term *= (fnu2 - double(2 * k - 1) * double(2 * k - 1)) / (8.0 * double(k) * w);
    double mag = std::abs(term);
    if (mag > best) {
      // diverging; accept only if already below tolerance
      return best < tol * std::abs(sum) ? (out = std::sqrt(kPi / (2.0 * w)) * std::exp(-w) * sum, true)
                                        : false;
    }
    sum += term;
    best = mag;
    if (mag < tol * std::abs(sum)) {
      out = std::sqrt(kPi / (2.0 * w)) * std::exp(-w) * sum;
      return true;
    }
  }
  return false;
}

cplx half_integer_k(int m, cplx w) {
  // K_{m+1/2}(w) = sqrt(pi/(2w)) e^{-w} sum_{k<=m} (m+k)!/(k!(m-k)!) (2w)^{-k}
  cplx sum = 1.0, term = 1.0;
  for (int k = 1; k <= m; ++k) {
    term *= double((m + k) * (m - k + 1)) / (2.0 * double(k));
    sum += term / std::pow(2.0 * w, k);
  }
  return std::sqrt(kPi / (2.0 * w)) * std::exp(-w) * sum;
}

cplx bessel_i_series(double nu, cplx w) {
  const cplx halfw = 0.5 * w;
  cplx pref = std::pow(halfw, nu) / std::tgamma(nu + 1.0);
  cplx sum = 1.0, term = 1.0;
  const cplx x2 = halfw * halfw;
  for (int k = 1; k <= 2000; ++k) {
    term *= x2 / (double(k) * (nu + double(k)));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return pref * sum;
}

cplx bessel_i_asym(double nu, cplx w) {
  // valid Re w > 0, |w| large; both exponential branches kept
  const double fnu2 = 4.0 * nu * nu;
  cplx sp = 1.0, sm = 1.0, term = 1.0;
  for (int k = 1; k <= 40; ++k) {
    term *= (fnu2 - double(2 * k - 1) * double(2 * k - 1)) / (8.0 * double(k) * w);
    sp += (k % 2 == 0) ? term : -term;
    sm += term;
    if (std::abs(term) < 1e-16) break;
  }
  const cplx pref = 1.0 / std::sqrt(2.0 * kPi * w);
  // lower-sign branch of the reflection term (arg w in (-pi/2, pi/2])
  const cplx phase = std::exp(cplx(0.0, -(nu + 0.5) * kPi));
  return pref * (std::exp(w) * sp + phase * std::exp(-w) * sm);
}

// K at purely imaginary w = -i y, y > 0, via Hankel functions of real
// argument: K_nu(-iy) = (pi/2) i^{nu+1} (J_nu(y) + i Y_nu(y)).
cplx axis_k(double nu, double y) {
  double j = std::cyl_bessel_j(nu, y);
  double yn = std::cyl_neumann(nu, y);
  cplx ipow = std::exp(cplx(0.0, 0.5 * kPi * (nu + 1.0)));
  return 0.5 * kPi * ipow * cplx(j, yn);
}

cplx bessel_k_upper(double nu, cplx w); // Im w >= 0

// Right half plane driver: Re w >= 0, Im w >= 0 (or real positive).
cplx bessel_k_right(double nu, cplx w) {
  const double aw = std::abs(w);
  // half-integer orders terminate exactly
  double halfidx = nu - 0.5;
  if (std::abs(halfidx - std::round(halfidx)) < 1e-13 && std::round(halfidx) >= 0.0)
    return half_integer_k(int(std::round(halfidx)), w);

  if (aw >= 12.0) {
    cplx out;
    if (asym_k(nu, w, out, 1e-13)) return out;
  }

  const int l = int(std::lround(nu));
  const double mu = nu - double(l);
  cplx kmu, kmup1;
  if (w.real() == 0.0 && std::abs(w.imag()) > 1e-3) {
    const double y = std::abs(w.imag());
    if (w.imag() < 0.0) { // w = -i y
      kmu = axis_k(mu, y);
      kmup1 = axis_k(mu + 1.0, y);
    } else { // w = +i y, reflect
      kmu = std::conj(axis_k(mu, y));
      kmup1 = std::conj(axis_k(mu + 1.0, y));
    }
  } else if (aw <= 2.0) {
    temme_k(mu, w, kmu, kmup1);
  } else {
    cf2_k(mu, w, kmu, kmup1);
  }
  if (l == 0) return kmu;
  cplx kp = kmu, kc = kmup1;
  for (int j = 1; j <= l - 1; ++j) {
    cplx knew = kp + (2.0 * (mu + double(j)) / w) * kc;
    kp = kc;
    kc = knew;
  }
  return kc;
}

cplx bessel_k_upper(double nu, cplx w) {
  if (w.real() >= 0.0) return bessel_k_right(nu, w);
  const double aw = std::abs(w);
  if (aw <= 2.0) {
    // Temme's series is valid on the whole slit plane
    double halfidx = nu - 0.5;
    if (std::abs(halfidx - std::round(halfidx)) < 1e-13 && std::round(halfidx) >= 0.0)
      return half_integer_k(int(std::round(halfidx)), w);
    const int l = int(std::lround(nu));
    const double mu = nu - double(l);
    cplx kmu, kmup1;
    temme_k(mu, w, kmu, kmup1);
    if (l == 0) return kmu;
    cplx kp = kmu, kc = kmup1;
    for (int j = 1; j <= l - 1; ++j) {
      cplx knew = kp + (2.0 * (mu + double(j)) / w) * kc;
      kp = kc;
      kc = knew;
    }
    return kc;
  }
  // rotate into the right half plane: w = v e^{i pi}
  cplx v = -w; // arg v = arg w - pi in (-pi/2, 0]
  cplx kv = (v.imag() >= 0.0) ? bessel_k_right(nu, v) : std::conj(bessel_k_right(nu, std::conj(v)));
  cplx iv = bessel_i(nu, v);
  cplx rot = std::exp(cplx(0.0, -nu * kPi));
  return rot * kv - cplx(0.0, kPi) * iv;
}

} // namespace

cplx bessel_i(double nu, cplx w) {
  if (w == cplx(0.0, 0.0)) return nu == 0.0 ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
  if (std::abs(w) <= 18.0) return bessel_i_series(nu, w);
  if (w.real() >= 0.0) return bessel_i_asym(nu, w);
  // I_nu(w e^{-i pi}) relation: I_nu(-v) = e^{i pi nu} I_nu(v) for the
  // principal branch approached from above.
  cplx v = -w;
  return std::exp(cplx(0.0, kPi * nu)) * bessel_i_asym(nu, v);
}

cplx bessel_k(double nu, cplx w) {
  nu = std::abs(nu); // K is even in the order
  if (w == cplx(0.0, 0.0)) throw ContractError("bessel_k: singular at w = 0");
  if (w.imag() == 0.0 && w.real() < 0.0)
    throw ContractError("bessel_k: branch cut at arg w = pi");
  if (w.imag() < 0.0) return std::conj(bessel_k_upper(nu, std::conj(w)));
  return bessel_k_upper(nu, w);
}

cplx ResolventKernelParams::sqrt_z() const {
  if (z.imag() == 0.0 && z.real() >= 0.0) {
    double r = std::sqrt(z.real());
    return side == BoundarySide::plus ? cplx(r, 0.0) : cplx(-r, 0.0);
  }
  cplx w = std::sqrt(z);
  if (w.imag() < 0.0) w = -w;
  return w;
}

cplx free_kernel_radial(double r, const ResolventKernelParams& p) {
  if (!(r > 0.0)) throw ContractError("free_kernel: singular at x = 0");
  if (p.d != 2 && p.d != 3) throw ContractError("free_kernel: d must be 2 or 3");
  const cplx kappa = cplx(0.0, -1.0) * p.sqrt_z(); // Re kappa >= 0
  if (p.d == 3) {
    // exact reduction of the half-integer order
    return std::exp(-kappa * r) / (4.0 * kPi * r);
  }
  return bessel_k(0.0, kappa * r) / (2.0 * kPi);
}

cplx free_kernel(const std::array<double, 3>& x, const ResolventKernelParams& p) {
  double r2 = 0.0;
  for (int a = 0; a < p.d; ++a) r2 += x[a] * x[a];
  return free_kernel_radial(std::sqrt(r2), p);
}

double SphereQuadrature::radius() const { return std::sqrt(lambda); }

double SphereQuadrature::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(std::size_t(n), 0.0);
  w.assign(std::size_t(n), 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[std::size_t(i)] = -z;
    x[std::size_t(n - 1 - i)] = z;
    w[std::size_t(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[std::size_t(n - 1 - i)] = w[std::size_t(i)];
  }
}

SphereQuadrature sphere_quadrature(int d, double lambda, int resolution) {
  if (!(lambda > 0.0)) throw ContractError("sphere_quadrature: lambda must be positive");
  if (d != 2 && d != 3) throw ContractError("sphere_quadrature: d must be 2 or 3");
  if (resolution < 4) resolution = 4;
  SphereQuadrature q;
  q.d = d;
  q.lambda = lambda;
  const double rt = std::sqrt(lambda);
  if (d == 2) {
    const int m = resolution;
    const double wgt = 2.0 * kPi * rt / m;
    for (int i = 0; i < m; ++i) {
      double th = 2.0 * kPi * i / m;
      q.nodes.push_back({rt * std::cos(th), rt * std::sin(th), 0.0});
      q.weights.push_back(wgt);
    }
  } else {
    std::vector<double> gx, gw;
    gauss_legendre(resolution, gx, gw);
    const int mphi = 2 * resolution;
    const double wphi = 2.0 * kPi / mphi;
    for (int i = 0; i < resolution; ++i) {
      const double ct = gx[std::size_t(i)];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int j = 0; j < mphi; ++j) {
        double ph = wphi * j;
        q.nodes.push_back({rt * st * std::cos(ph), rt * st * std::sin(ph), rt * ct});
        q.weights.push_back(lambda * gw[std::size_t(i)] * wphi);
      }
    }
  }
  return q;
}

namespace {

// Per-axis phase tables e^{i sgn x_a xi_a} for one off-lattice frequency.
void phase_tables(const GridSpec& s, const std::array<double, 3>& xi, int sgn,
                  std::vector<cplx> tab[3]) {
  for (int a = 0; a < s.d; ++a) {
    tab[a].resize(std::size_t(s.n));
    for (int i = 0; i < s.n; ++i) {
      double ang = sgn * s.coord(i) * xi[a];
      tab[a][std::size_t(i)] = cplx(std::cos(ang), std::sin(ang));
    }
  }
}

} // namespace

std::vector<cplx> evaluate_ghat_on_sphere(const Field& g, const SphereQuadrature& quad) {
  if (g.rep != Rep::physical) throw ContractError("evaluate_ghat_on_sphere: physical representation required");
  const GridSpec& s = g.spec;
  if (s.d != quad.d) throw ContractError("evaluate_ghat_on_sphere: dimension mismatch");
  const double scale = std::pow(2.0 * kPi, -0.5 * s.d) * std::pow(s.h(), s.d);
  std::vector<cplx> out(quad.nodes.size());
  std::vector<cplx> tab[3];
  const int n = s.n;
  for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
    phase_tables(s, quad.nodes[q], -1, tab);
    cplx acc(0.0, 0.0);
    if (s.d == 2) {
      std::size_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0) {
        cplx p0 = tab[0][std::size_t(i0)];
        cplx row(0.0, 0.0);
        for (int i1 = 0; i1 < n; ++i1, ++idx) row += g[idx] * tab[1][std::size_t(i1)];
        acc += p0 * row;
      }
    } else {
      std::size_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0) {
        cplx p0 = tab[0][std::size_t(i0)];
        for (int i1 = 0; i1 < n; ++i1) {
          cplx p01 = p0 * tab[1][std::size_t(i1)];
          cplx row(0.0, 0.0);
          for (int i2 = 0; i2 < n; ++i2, ++idx) row += g[idx] * tab[2][std::size_t(i2)];
          acc += p01 * row;
        }
      }
    }
    out[q] = scale * acc;
  }
  return out;
}

double sphere_restriction_mass(const Field& g, const SphereQuadrature& quad) {
  auto vals = evaluate_ghat_on_sphere(g, quad);
  double acc = 0.0;
  for (std::size_t i = 0; i < vals.size(); ++i) acc += quad.weights[i] * std::norm(vals[i]);
  return acc;
}

Field herglotz_wave(const GridSpec& spec, double lambda, int resolution) {
  if (!(lambda > 0.0)) throw ContractError("herglotz_wave: lambda must be positive");
  spec.validate();
  if (resolution <= 0) {
    double corner = 0.5 * spec.box * std::sqrt(double(spec.d));
    double band = std::sqrt(lambda) * corner;
    // trapezoid in angle needs ~2 nodes per unit of phase; Gauss-Legendre a
    // little more than one
    resolution = spec.d == 2 ? int(std::ceil(2.2 * band)) + 32 : int(std::ceil(1.1 * band)) + 16;
  }
  SphereQuadrature quad = sphere_quadrature(spec.d, lambda, resolution);
  Field u(spec, Rep::physical);
  std::vector<cplx> tab[3];
  const int n = spec.n;
  for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
    phase_tables(spec, quad.nodes[q], -1, tab);
    const double w = quad.weights[q];
    if (spec.d == 2) {
      std::size_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0) {
        cplx p0 = w * tab[0][std::size_t(i0)];
        for (int i1 = 0; i1 < n; ++i1, ++idx) u[idx] += p0 * tab[1][std::size_t(i1)];
      }
    } else {
      std::size_t idx = 0;
      for (int i0 = 0; i0 < n; ++i0) {
        cplx p0 = w * tab[0][std::size_t(i0)];
        for (int i1 = 0; i1 < n; ++i1) {
          cplx p01 = p0 * tab[1][std::size_t(i1)];
          for (int i2 = 0; i2 < n; ++i2, ++idx) u[idx] += p01 * tab[2][std::size_t(i2)];
        }
      }
    }
  }
  return u;
}

double helmholtz_residual_interior(const Field& u, double lambda, double mask_frac) {
  if (u.rep != Rep::physical)
    throw ContractError("helmholtz_residual_interior: physical representation required");
  const GridSpec& s = u.spec;
  // order-8 centered second-derivative stencil
  static const double c[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
  const int reach = 4;
  const double inv_h2 = 1.0 / (s.h() * s.h());
  const int lo = std::max(reach, int(std::ceil(mask_frac * s.n)));
  const int hi = s.n - 1 - lo;
  if (hi <= lo) throw ContractError("helmholtz_residual_interior: mask leaves no interior");

  std::size_t stride[3] = {0, 0, 0};
  std::size_t st = u.size();
  for (int a = 0; a < s.d; ++a) {
    st /= std::size_t(s.n);
    stride[a] = st;
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    auto ix = unflatten(s, i);
    bool interior = true;
    for (int a = 0; a < s.d; ++a) interior = interior && ix[a] >= lo && ix[a] <= hi;
    if (!interior) continue;
    cplx lap(0.0, 0.0);
    for (int a = 0; a < s.d; ++a) {
      cplx acc = c[0] * u[i];
      for (int j = 1; j <= reach; ++j)
        acc += c[j] * (u[i + std::size_t(j) * stride[a]] + u[i - std::size_t(j) * stride[a]]);
      lap += acc * inv_h2;
    }
    num += std::norm(lap + lambda * u[i]);
    den += std::norm(u[i]);
  }
  if (den == 0.0) return 0.0;
  return std::sqrt(num / den);
}

} // namespace lapkit
