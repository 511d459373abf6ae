#include "lapkit/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "lapkit/fft.hpp"

namespace lapkit {

void GridSpec::validate() const {
  if (d != 2 && d != 3) throw ContractError("GridSpec: d must be 2 or 3");
  if (n < 4 || n % 2 != 0) throw ContractError("GridSpec: n must be even and >= 4");
  if (!fft::size_supported(n))
    throw ContractError("GridSpec: n must factor into 2,3,5 (powers of two preferred)");
  if (!(box > 0.0)) throw ContractError("GridSpec: box must be positive");
}

Field& Field::operator+=(const Field& o) {
  if (!(spec == o.spec) || rep != o.rep) throw ContractError("Field +=: mismatched fields");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (!(spec == o.spec) || rep != o.rep) throw ContractError("Field -=: mismatched fields");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= o.v[i];
  return *this;
}

Field& Field::operator*=(cplx a) {
  for (auto& x : v) x *= a;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(cplx a, Field f) { return f *= a; }

double radius2_at(const GridSpec& s, std::size_t idx) {
  auto x = point_at(s, idx);
  double r2 = 0.0;
  for (int a = 0; a < s.d; ++a) r2 += x[a] * x[a];
  return r2;
}

Field make_field(const GridSpec& s, const std::function<cplx(const std::array<double, 3>&)>& f) {
  Field out(s, Rep::physical);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(point_at(s, i));
  return out;
}

namespace {

// (-1)^{sum of signed indices}: the phase carried by the -box/2 grid offset.
void apply_offset_phase(Field& f) {
  const GridSpec& s = f.spec;
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto ix = unflatten(s, i);
    int ksum = 0;
    for (int a = 0; a < s.d; ++a) ksum += s.kindex(ix[a]);
    if (ksum & 1) f[i] = -f[i];
  }
}

} // namespace

Field to_frequency(const Field& f) {
  if (f.rep != Rep::physical) throw ContractError("to_frequency: field is already in frequency representation");
  f.spec.validate();
  Field g = f;
  fft::transform_nd(g.v.data(), g.spec.d, g.spec.n, -1);
  const double scale =
      std::pow(2.0 * kPi, -0.5 * g.spec.d) * std::pow(g.spec.h(), g.spec.d);
  g *= scale;
  apply_offset_phase(g);
  g.rep = Rep::frequency;
  return g;
}

Field to_physical(const Field& f) {
  if (f.rep != Rep::frequency) throw ContractError("to_physical: field is already in physical representation");
  f.spec.validate();
  Field g = f;
  apply_offset_phase(g);
  fft::transform_nd(g.v.data(), g.spec.d, g.spec.n, +1);
  const double dxi = 2.0 * kPi / g.spec.box;
  const double scale = std::pow(2.0 * kPi, -0.5 * g.spec.d) * std::pow(dxi, g.spec.d);
  g *= scale;
  g.rep = Rep::physical;
  return g;
}

Multiplier Multiplier::one() {
  return radial("one", [](double) { return cplx(1.0, 0.0); });
}

Multiplier Multiplier::radial(std::string name, std::function<cplx(double s)> f) {
  Multiplier m;
  m.name = std::move(name);
  m.eval = [f = std::move(f)](const std::array<double, 3>&, double s) { return f(s); };
  return m;
}

Multiplier Multiplier::sobolev(double alpha) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "sobolev(%g)", alpha);
  return radial(buf, [alpha](double s) { return cplx(std::pow(1.0 + s, 0.5 * alpha), 0.0); });
}

Multiplier Multiplier::resolvent(cplx z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "resolvent(%g%+gi)", z.real(), z.imag());
  return radial(buf, [z](double s) { return 1.0 / (cplx(s, 0.0) - z); });
}

Multiplier Multiplier::helmholtz(cplx z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "helmholtz(%g%+gi)", z.real(), z.imag());
  return radial(buf, [z](double s) { return cplx(s, 0.0) - z; });
}

Multiplier Multiplier::derivative(int axis) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "d/dx%d", axis);
  Multiplier m;
  m.name = buf;
  m.eval = [axis](const std::array<double, 3>& xi, double) { return cplx(0.0, xi[axis]); };
  return m;
}

namespace {
// C-infinity transition: 0 for t<=0, 1 for t>=1.
double smoothstep_cinf(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-1.0 / t);
  double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}
} // namespace

Multiplier Multiplier::annulus_cutoff(double lambda) {
  if (!(lambda > 0.0)) throw ContractError("annulus_cutoff: lambda must be positive");
  char buf[64];
  std::snprintf(buf, sizeof buf, "annulus(%g)", lambda);
  double rt = std::sqrt(lambda);
  return radial(buf, [rt](double s) {
    double r = std::sqrt(std::max(s, 0.0)) / rt; // |xi|/sqrt(lambda)
    double up = smoothstep_cinf((r - 0.5) / 0.25);
    double down = smoothstep_cinf((1.5 - r) / 0.25);
    return cplx(up * down, 0.0);
  });
}

Multiplier Multiplier::band_indicator(double a, double b) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "band[%g,%g]", a, b);
  return radial(buf, [a, b](double s) { return cplx(s >= a && s <= b ? 1.0 : 0.0, 0.0); });
}

Multiplier Multiplier::times(const Multiplier& o) const {
  Multiplier m;
  m.name = name + "*" + o.name;
  m.eval = [e1 = eval, e2 = o.eval](const std::array<double, 3>& xi, double s) {
    return e1(xi, s) * e2(xi, s);
  };
  return m;
}

Multiplier Multiplier::complement() const {
  Multiplier m;
  m.name = "1-" + name;
  m.eval = [e = eval](const std::array<double, 3>& xi, double s) {
    return cplx(1.0, 0.0) - e(xi, s);
  };
  return m;
}

Field apply_multiplier(const Field& f, const Multiplier& m) {
  const bool was_physical = (f.rep == Rep::physical);
  Field g = was_physical ? to_frequency(f) : f;
  const GridSpec& s = g.spec;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto xi = freq_at(s, i);
    double s2 = 0.0;
    for (int a = 0; a < s.d; ++a) s2 += xi[a] * xi[a];
    cplx val = m.eval(xi, s2);
    if (!std::isfinite(val.real()) || !std::isfinite(val.imag()) || std::abs(val) > 1e15) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "symbol '%s' is singular on the dual lattice at |xi|^2=%.12g; "
                    "use eps != 0 or an off-lattice spectral parameter",
                    m.name.c_str(), s2);
      throw SingularSymbolError(buf);
    }
    g[i] *= val;
  }
  return was_physical ? to_physical(g) : g;
}

cplx pairing(const Field& u, const Field& f) {
  if (!(u.spec == f.spec)) throw ContractError("pairing: mismatched grids");
  if (u.rep != Rep::physical || f.rep != Rep::physical)
    throw ContractError("pairing: both fields must be in physical representation");
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * std::conj(f[i]);
  return acc * std::pow(u.spec.h(), u.spec.d);
}

double lp_norm(const Field& f, double p) {
  if (f.rep != Rep::physical) throw ContractError("lp_norm: field must be in physical representation");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& x : f.v) m = std::max(m, std::abs(x));
    return m;
  }
  if (!(p >= 1.0)) throw ContractError("lp_norm: p must be >= 1 or infinity");
  const double hd = std::pow(f.spec.h(), f.spec.d);
  if (p == 2.0) {
    double acc = 0.0;
    for (const auto& x : f.v) acc += std::norm(x);
    return std::sqrt(acc * hd);
  }
  double acc = 0.0;
  for (const auto& x : f.v) acc += std::pow(std::abs(x), p);
  return std::pow(acc * hd, 1.0 / p);
}

double freq_l2_norm(const Field& f) {
  if (f.rep != Rep::frequency) throw ContractError("freq_l2_norm: field must be in frequency representation");
  double acc = 0.0;
  for (const auto& x : f.v) acc += std::norm(x);
  const double dxi = 2.0 * kPi / f.spec.box;
  return std::sqrt(acc * std::pow(dxi, f.spec.d));
}

Field pointwise(const Field& u, const Field& w) {
  if (!(u.spec == w.spec)) throw ContractError("pointwise: mismatched grids");
  if (u.rep != Rep::physical || w.rep != Rep::physical)
    throw ContractError("pointwise: both fields must be physical");
  Field out = u;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w[i];
  return out;
}

Field scale_by(const Field& u, const std::function<double(const std::array<double, 3>&)>& w) {
  if (u.rep != Rep::physical) throw ContractError("scale_by: field must be physical");
  Field out = u;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= w(point_at(u.spec, i));
  return out;
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xFF;
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xFF;
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  double x;
  std::memcpy(&x, &v, 8);
  return x;
}

} // namespace

void write_lapf1(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("write_lapf1: cannot open " + path);
  os.write("LAPF", 4);
  char version = 1;
  os.write(&version, 1);
  put_u32(os, std::uint32_t(f.spec.d));
  put_u32(os, std::uint32_t(f.spec.n));
  put_f64(os, f.spec.box);
  char flag = (f.rep == Rep::physical) ? 0 : 1;
  os.write(&flag, 1);
  for (const auto& x : f.v) {
    put_f64(os, x.real());
    put_f64(os, x.imag());
  }
  if (!os) throw Error("write_lapf1: write failed for " + path);
}

Field read_lapf1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("read_lapf1: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "LAPF", 4) != 0) throw Error("read_lapf1: bad magic in " + path);
  char version = 0;
  is.read(&version, 1);
  if (version != 1) throw Error("read_lapf1: unsupported version in " + path);
  GridSpec s;
  s.d = int(get_u32(is));
  s.n = int(get_u32(is));
  s.box = get_f64(is);
  char flag = 0;
  is.read(&flag, 1);
  s.validate();
  Field f(s, flag == 0 ? Rep::physical : Rep::frequency);
  for (auto& x : f.v) {
    double re = get_f64(is);
    double im = get_f64(is);
    x = cplx(re, im);
  }
  if (!is) throw Error("read_lapf1: truncated file " + path);
  return f;
}

} // namespace lapkit
