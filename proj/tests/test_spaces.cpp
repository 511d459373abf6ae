#include <cmath>

#include "doctest.h"
#include "lapkit/spaces.hpp"
#include "lapkit/special.hpp"
#include "test_util.hpp"

using namespace lapkit;

namespace {

// bump of unit L2 norm supported in the dyadic region D_j
Field shell_bump(const GridSpec& s, int j) {
  double rin = j == 0 ? 0.0 : std::pow(2.0, j - 1);
  double rout = std::pow(2.0, j);
  Field f = make_field(s, [&](const std::array<double, 3>& x) {
    double r = 0.0;
    for (int a = 0; a < s.d; ++a) r += x[a] * x[a];
    r = std::sqrt(r);
    if (r <= rin || r >= rout) return cplx(0.0, 0.0);
    double t = (r - rin) / (rout - rin);
    return cplx(t * (1.0 - t), 0.0);
  });
  double n2 = l2_norm(f);
  f *= 1.0 / n2;
  return f;
}

} // namespace

TEST_CASE("shell decomposition covers the grid with dyadic regions") {
  GridSpec s{2, 64, 16.0};
  const ShellDecomposition& sh = shells_for(s);
  CHECK(sh.j_max == int(std::ceil(std::log2(std::sqrt(2.0) * 8.0))));
  std::size_t total = 0;
  for (const auto& m : sh.members) total += m.size();
  CHECK(total == s.size());
  // boundary points go to the smaller shell: |x| = 1 exactly is in D_0
  // (box 16, h = 0.25, the sample (1, 0) exists)
  std::array<int, 3> i1{s.n / 2 + 4, s.n / 2, 0};
  CHECK(sh.shell_of[flatten(s, i1)] == 0);
}

TEST_CASE("b and bstar norms of single-shell bumps") {
  GridSpec s{2, 128, 16.0};
  const ShellDecomposition& sh = shells_for(s);
  SUBCASE("bump in D_0") {
    Field f = shell_bump(s, 0);
    CHECK(b_norm(f, sh) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bstar_norm(f, sh) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("bump in D_2") {
    Field f = shell_bump(s, 2);
    CHECK(b_norm(f, sh) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bstar_norm(f, sh) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("imbedding chain bstar <= l2 <= b on random fields") {
  GridSpec s{2, 32, 16.0};
  const ShellDecomposition& sh = shells_for(s);
  for (int t = 0; t < 100; ++t) {
    Field f = testutil::random_field(s, 1000 + t);
    double bs = bstar_norm(f, sh), l2 = l2_norm(f), b = b_norm(f, sh);
    CHECK(bs <= l2 * (1.0 + 1e-12));
    CHECK(l2 <= b * (1.0 + 1e-12));
  }
}

TEST_CASE("y norm membership witnesses") {
  SUBCASE("indicator of the unit ball") {
    GridSpec s{2, 64, 16.0};
    const ShellDecomposition& sh = shells_for(s);
    Field f = make_field(s, [](const std::array<double, 3>& x) {
      return cplx(x[0] * x[0] + x[1] * x[1] <= 1.0 ? 1.0 : 0.0, 0.0);
    });
    CHECK(y_norm(f, sh) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("integrable power law against the analytic shell-sup sum") {
    GridSpec s{2, 128, 32.0};
    const ShellDecomposition& sh = shells_for(s);
    Field f = make_field(s, [](const std::array<double, 3>& x) {
      double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
      return cplx(std::pow(1.0 + r, -2.0), 0.0);
    });
    double got = y_norm(f, sh);
    double want = 1.0; // shell D_0 sup attained at the origin
    for (int j = 1; j <= sh.j_max; ++j)
      want += std::pow(2.0, j) * std::pow(1.0 + std::pow(2.0, j - 1), -2.0);
    CHECK(got == doctest::Approx(want).epsilon(0.05));
  }
  SUBCASE("borderline power law diverges with the box") {
    auto yn = [](int n, double box) {
      GridSpec s{2, n, box};
      const ShellDecomposition& sh = shells_for(s);
      Field f = make_field(s, [](const std::array<double, 3>& x) {
        double r = std::sqrt(x[0] * x[0] + x[1] * x[1]);
        return cplx(1.0 / (1.0 + r), 0.0);
      });
      return y_norm(f, sh);
    };
    double y_small = yn(32, 16.0);
    double y_large = yn(128, 64.0); // same h, two more dyadic shells
    CHECK(y_large > y_small + 0.8);
  }
}

TEST_CASE("sobolev norms") {
  GridSpec s{2, 64, 16.0};
  SUBCASE("alpha = 0 is the lp norm") {
    Field f = testutil::random_smooth_field(s, 3);
    CHECK(sobolev_norm(f, 0.0, 2.0) == doctest::Approx(lp_norm(f, 2.0)).epsilon(1e-12));
  }
  SUBCASE("plane wave sup value") {
    const double xi0 = 2.0 * kPi * 3.0 / s.box;
    Field pw = make_field(s, [&](const std::array<double, 3>& x) {
      return std::exp(cplx(0.0, xi0 * x[0]));
    });
    double want = std::pow(1.0 + xi0 * xi0, 0.75);
    CHECK(sobolev_norm(pw, 1.5, std::numeric_limits<double>::infinity()) ==
          doctest::Approx(want).epsilon(1e-10));
  }
  SUBCASE("gaussian H1 norm against the analytic frequency integral") {
    GridSpec s2{2, 128, 16.0};
    Field g = make_field(s2, [](const std::array<double, 3>& x) {
      return cplx(std::exp(-(x[0] * x[0] + x[1] * x[1])), 0.0);
    });
    CHECK(sobolev_norm(g, 1.0, 2.0) == doctest::Approx(std::sqrt(1.5 * kPi)).epsilon(1e-6));
  }
}

TEST_CASE("x norms") {
  GridSpec s{2, 64, 16.0};
  const ShellDecomposition& sh = shells_for(s);
  SUBCASE("zero field") {
    Field z(s);
    CHECK(x_star_norm(z, sh) == 0.0);
    CHECK(x_norm_upper(z, sh).value == 0.0);
  }
  SUBCASE("upper bound dominates the duality lower bound") {
    Field f = testutil::gaussian_field(s, 1.5);
    auto xu = x_norm_upper(f, sh, {1.0});
    double lower = 0.0;
    std::vector<Field> probes;
    for (int t = 0; t < 44; ++t) probes.push_back(testutil::random_smooth_field(s, 400 + t, 0.3));
    for (double w : {0.75, 1.0, 1.5, 2.0, 3.0, 4.0}) probes.push_back(testutil::gaussian_field(s, w));
    for (const Field& phi : probes) {
      double xs = x_star_norm(phi, sh);
      if (xs > 1e-12) lower = std::max(lower, std::abs(pairing(f, phi)) / xs);
    }
    CHECK(lower <= xu.value * (1.0 + 1e-10));
    // and the bracket is reasonably tight for a gaussian
    CHECK(xu.value <= 3.0 * lower);
  }
  SUBCASE("smooth compactly supported field controlled by W^{1,2}") {
    for (int t = 0; t < 10; ++t) {
      Field u = testutil::random_smooth_field(s, 700 + t, 1.0);
      double xs = x_star_norm(u, sh);
      double w12 = sobolev_norm(u, 1.0, 2.0);
      CHECK(xs <= 5.0 * w12);
      CHECK(xs > 0.0);
    }
  }
}

TEST_CASE("x star norm of the herglotz wave stabilizes under box doubling") {
  const double lam = 1.0;
  GridSpec s1{2, 64, 16.0};
  GridSpec s2{2, 128, 32.0}; // same h
  Field u1 = herglotz_wave(s1, lam);
  Field u2 = herglotz_wave(s2, lam);
  double xs1 = x_star_norm(u1, shells_for(s1));
  double xs2 = x_star_norm(u2, shells_for(s2));
  CHECK(std::abs(xs2 - xs1) / xs1 < 0.15);
  double w1 = sobolev_norm(u1, 1.0, 2.0);
  double w2 = sobolev_norm(u2, 1.0, 2.0);
  CHECK(w2 / w1 == doctest::Approx(std::sqrt(2.0)).epsilon(0.10));
}

TEST_CASE("pairing duality chain on random pairs") {
  GridSpec s{2, 32, 16.0};
  const ShellDecomposition& sh = shells_for(s);
  for (int t = 0; t < 30; ++t) {
    Field u = testutil::random_smooth_field(s, 2000 + t, 0.2);
    Field f = testutil::random_smooth_field(s, 3000 + t, 0.2);
    double p = std::abs(pairing(u, f));
    CHECK(p <= l2_norm(u) * l2_norm(f) * (1.0 + 1e-10));
    CHECK(p <= sobolev_norm(u, -1.0, 2.0) * sobolev_norm(f, 1.0, 2.0) * (1.0 + 1e-10));
    CHECK(p <= x_norm_upper(u, sh, {1.0}).value * x_star_norm(f, sh) * (1.0 + 1e-10));
  }
}

TEST_CASE("restriction mass is controlled by the x upper norm, stably") {
  // measure C = sup sqrt(restriction mass)/x_upper over probes at two
  // resolutions; the constant should be stable under refinement
  auto measure = [](int n) {
    GridSpec s{2, n, 16.0};
    const ShellDecomposition& sh = shells_for(s);
    auto quad = sphere_quadrature(2, 1.0, 64);
    double c = 0.0;
    for (int t = 0; t < 20; ++t) {
      Field f = testutil::random_smooth_field(s, 5000 + t, 0.4);
      double mass = std::sqrt(sphere_restriction_mass(f, quad));
      double xu = x_norm_upper(f, sh, {1.0}).value;
      if (xu > 1e-12) c = std::max(c, mass / xu);
    }
    return c;
  };
  double c64 = measure(64), c128 = measure(128);
  CHECK(c64 > 0.0);
  CHECK(c128 / c64 < 1.2);
  CHECK(c64 / c128 < 1.2);
}

TEST_CASE("norm report data is consistent") {
  GridSpec s{2, 32, 8.0};
  const ShellDecomposition& sh = shells_for(s);
  Field f = testutil::gaussian_field(s, 1.0);
  NormReport r = norm_report(f, sh, 1.0, 2.0, {1.0});
  CHECK(r.b_star <= r.l2 * (1.0 + 1e-12));
  CHECK(r.l2 <= r.b * (1.0 + 1e-12));
  CHECK(r.x_upper_surrogate);
  CHECK(r.w_alpha_p == doctest::Approx(sobolev_norm(f, 1.0, 2.0)).epsilon(1e-12));
  CHECK(!r.x_upper_splitting.empty());
}
