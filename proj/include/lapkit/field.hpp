#ifndef LAPKIT_FIELD_HPP
#define LAPKIT_FIELD_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lapkit/errors.hpp"

namespace lapkit {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

/// Periodic discretization of R^d: the box [-box/2, box/2)^d sampled on n
/// points per axis. The dual lattice is xi_k = 2 pi k / box, k in [-n/2, n/2).
struct GridSpec {
  int d = 2;
  int n = 64;
  double box = 16.0;

  double h() const { return box / n; }
  std::size_t size() const {
    std::size_t s = 1;
    for (int a = 0; a < d; ++a) s *= std::size_t(n);
    return s;
  }
  /// Physical coordinate of sample i along one axis.
  double coord(int i) const { return -0.5 * box + i * h(); }
  /// Signed frequency index of DFT slot m.
  int kindex(int m) const { return m < n / 2 ? m : m - n; }
  /// Dual-lattice frequency of DFT slot m along one axis.
  double freq(int m) const { return 2.0 * kPi * kindex(m) / box; }
  /// Largest |xi| component on the dual lattice (Nyquist).
  double xi_max() const { return kPi / h(); }

  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

enum class Rep : std::uint8_t { physical = 0, frequency = 1 };

/// Complex samples of a function on the grid, in axis-major order (axis 0
/// slowest). The frequency representation stores the unitary-in-(2pi)
/// transform ghat(xi_k) = (2pi)^{-d/2} h^d sum_x g(x) e^{-i x.xi_k} in DFT
/// slot order; physical and frequency are exact mutual inverses.
struct Field {
  GridSpec spec;
  Rep rep = Rep::physical;
  std::vector<cplx> v;

  Field() = default;
  Field(const GridSpec& s, Rep r = Rep::physical) : spec(s), rep(r), v(s.size()) {}

  std::size_t size() const { return v.size(); }
  cplx& operator[](std::size_t i) { return v[i]; }
  const cplx& operator[](std::size_t i) const { return v[i]; }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(cplx a);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(cplx a, Field f);

/// Decode a flat index into per-axis indices (only the first d entries are
/// meaningful).
inline std::array<int, 3> unflatten(const GridSpec& s, std::size_t idx) {
  std::array<int, 3> i{0, 0, 0};
  for (int a = s.d - 1; a >= 0; --a) {
    i[a] = int(idx % std::size_t(s.n));
    idx /= std::size_t(s.n);
  }
  return i;
}

inline std::size_t flatten(const GridSpec& s, const std::array<int, 3>& i) {
  std::size_t idx = 0;
  for (int a = 0; a < s.d; ++a) idx = idx * std::size_t(s.n) + std::size_t(i[a]);
  return idx;
}

/// Physical coordinates of a flat index.
inline std::array<double, 3> point_at(const GridSpec& s, std::size_t idx) {
  auto i = unflatten(s, idx);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < s.d; ++a) x[a] = s.coord(i[a]);
  return x;
}

/// |x|^2 of a flat index in physical space.
double radius2_at(const GridSpec& s, std::size_t idx);

/// Frequency vector of a flat index in DFT order.
inline std::array<double, 3> freq_at(const GridSpec& s, std::size_t idx) {
  auto i = unflatten(s, idx);
  std::array<double, 3> xi{0.0, 0.0, 0.0};
  for (int a = 0; a < s.d; ++a) xi[a] = s.freq(i[a]);
  return xi;
}

/// Build a physical-representation field from a pointwise function of x.
Field make_field(const GridSpec& s, const std::function<cplx(const std::array<double, 3>&)>& f);

/// A scalar complex symbol of frequency, evaluated exactly on the dual
/// lattice. Carries a name for reports.
struct Multiplier {
  std::string name;
  // xi: frequency vector; s = |xi|^2.
  std::function<cplx(const std::array<double, 3>& xi, double s)> eval;

  static Multiplier one();
  static Multiplier radial(std::string name, std::function<cplx(double s)> f);
  /// (1+|xi|^2)^{alpha/2}
  static Multiplier sobolev(double alpha);
  /// (|xi|^2 - z)^{-1}
  static Multiplier resolvent(cplx z);
  /// (|xi|^2 - z)
  static Multiplier helmholtz(cplx z);
  /// i xi_axis
  static Multiplier derivative(int axis);
  /// Smooth radial cutoff equal to 1 on |xi| in sqrt(lambda)[3/4,5/4] and
  /// supported in sqrt(lambda)[1/2,3/2].
  static Multiplier annulus_cutoff(double lambda);
  /// Indicator of |xi|^2 in [a,b].
  static Multiplier band_indicator(double a, double b);

  Multiplier times(const Multiplier& o) const;
  Multiplier complement() const; // 1 - m
};

/// Forward transform; requires physical representation.
Field to_frequency(const Field& f);
/// Backward transform; requires frequency representation.
Field to_physical(const Field& f);

/// Apply a Fourier multiplier. Accepts either representation and returns the
/// same representation. Throws SingularSymbolError if the symbol is
/// non-finite on a lattice point.
Field apply_multiplier(const Field& f, const Multiplier& m);

/// <u,f> = sum u(x) conj(f(x)) h^d, the Riemann sum of the L^2 pairing.
cplx pairing(const Field& u, const Field& f);

/// (sum |f|^p h^d)^{1/p}; p = infinity gives the sample max.
double lp_norm(const Field& f, double p);
inline double l2_norm(const Field& f) { return lp_norm(f, 2.0); }

/// l^2 norm of the frequency samples under the dual measure (2pi/box)^d.
/// Equals lp_norm(.,2) of the physical field (Parseval).
double freq_l2_norm(const Field& f);

/// Pointwise product u*w (both physical).
Field pointwise(const Field& u, const Field& w);
/// Multiply by a real-valued weight function of x.
Field scale_by(const Field& u, const std::function<double(const std::array<double, 3>&)>& w);

/// Binary field format "LAPF1".
void write_lapf1(const std::string& path, const Field& f);
Field read_lapf1(const std::string& path);

} // namespace lapkit

#endif
