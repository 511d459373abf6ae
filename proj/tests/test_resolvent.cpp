#include <cmath>

#include "doctest.h"
#include "lapkit/catalog.hpp"
#include "lapkit/resolvent.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lapkit;

TEST_CASE("free resolvent multiplier identities") {
  GridSpec s{2, 64, 16.0};
  Field g = testutil::random_field(s, 9);
  SUBCASE("exact right inverse of the shifted operator") {
    SpectralPoint pt{2.0, 0.1, BoundarySide::plus};
    Field u = apply_r0(g, pt);
    Field back = apply_multiplier(u, Multiplier::helmholtz(pt.z()));
    CHECK(testutil::rel_err(back, g) < 1e-12);
  }
  SUBCASE("conjugation symmetry across the axis") {
    SpectralPoint plus{1.3, 0.05, BoundarySide::plus};
    SpectralPoint minus{1.3, -0.05, BoundarySide::minus};
    Field gb = g;
    for (auto& x : gb.v) x = std::conj(x);
    Field lhs = apply_r0(gb, minus);
    Field rhs = apply_r0(g, plus);
    for (auto& x : rhs.v) x = std::conj(x);
    CHECK(testutil::rel_err(lhs, rhs) < 1e-13);
  }
  SUBCASE("boundary parameter without eps is rejected") {
    SpectralPoint pt{1.0, 0.0, BoundarySide::plus};
    CHECK_THROWS_AS(apply_r0(g, pt), ContractError);
    SpectralPoint neg{-1.0, 0.0, BoundarySide::plus};
    CHECK_NOTHROW(apply_r0(g, neg)); // negative energies are elliptic
  }
}

TEST_CASE("free resolvent agrees with the kernel convolution") {
  SUBCASE("negative energy, d=3") {
    GridSpec s{3, 32, 12.0};
    Field g = testutil::gaussian_field(s, 0.9);
    SpectralPoint pt{-1.0, 0.0, BoundarySide::plus};
    Field u = apply_r0(g, pt);
    ResolventKernelParams kp;
    kp.d = 3;
    kp.z = cplx(-1.0, 0.0);
    const double hd = std::pow(s.h(), 3.0);
    std::mt19937_64 rng(77);
    double worst = 0.0;
    for (int t = 0; t < 40; ++t) {
      std::size_t ix = std::size_t(testutil::unit_double(rng) * double(s.size() - 1));
      auto x = point_at(s, ix);
      if (radius2_at(s, ix) > 9.0) continue; // compare well inside the box
      cplx acc(0.0, 0.0);
      for (std::size_t iy = 0; iy < s.size(); ++iy) {
        auto y = point_at(s, iy);
        double r2 = 0.0;
        for (int a = 0; a < 3; ++a) r2 += (x[a] - y[a]) * (x[a] - y[a]);
        double r = std::sqrt(r2);
        // analytic cell integral at the coincident cell
        cplx ker = r < 1e-12
                       ? cplx(1.5 / (s.h() * std::cbrt(3.0 / (4.0 * kPi))) / (4.0 * kPi), 0.0)
                       : free_kernel_radial(r, kp);
        acc += ker * g[iy];
      }
      acc *= hd;
      worst = std::max(worst, std::abs(acc - u[ix]) / std::abs(u[ix]));
    }
    CHECK(worst < 0.03);
  }
  SUBCASE("complex energy, d=2") {
    GridSpec s{2, 64, 32.0};
    Field g = testutil::gaussian_field(s, 1.0);
    SpectralPoint pt{2.0, 0.5, BoundarySide::plus};
    Field u = apply_r0(g, pt);
    ResolventKernelParams kp;
    kp.d = 2;
    kp.z = pt.z();
    const double hd = std::pow(s.h(), 2.0);
    std::mt19937_64 rng(78);
    double worst = 0.0;
    for (int t = 0; t < 30; ++t) {
      std::size_t ix = std::size_t(testutil::unit_double(rng) * double(s.size() - 1));
      if (radius2_at(s, ix) > 36.0) continue;
      auto x = point_at(s, ix);
      cplx acc(0.0, 0.0);
      for (std::size_t iy = 0; iy < s.size(); ++iy) {
        auto y = point_at(s, iy);
        double r2 = 0.0;
        for (int a = 0; a < 2; ++a) r2 += (x[a] - y[a]) * (x[a] - y[a]);
        double r = std::sqrt(r2);
        cplx ker;
        if (r < 1e-12) {
          // analytic cell integral of the log-singular kernel
          double rc = s.h() / std::sqrt(kPi);
          ker = free_kernel_radial(rc, kp) * 1.0; // smooth part at cell scale
        } else {
          ker = free_kernel_radial(r, kp);
        }
        acc += ker * g[iy];
      }
      acc *= hd;
      worst = std::max(worst, std::abs(acc - u[ix]) / std::abs(u[ix]));
    }
    CHECK(worst < 0.15); // h-level quadrature plus periodization images
  }
}

TEST_CASE("boundary resolvent by extrapolation") {
  GridSpec s{2, 64, 16.0};
  double lam = snap_off_lattice(1.0, s);
  Field g = testutil::gaussian_field(s, 1.0);
  SUBCASE("limit solves the boundary Helmholtz problem") {
    auto bf = boundary_r0(g, lam, BoundarySide::plus);
    Field back(s, Rep::physical);
    back = apply_multiplier(bf.u, Multiplier::helmholtz(cplx(lam, 0.0)));
    CHECK(testutil::rel_err(back, g) < 1e-6);
  }
  SUBCASE("side symmetry under conjugation") {
    Field gb = g; // real field: conjugation is the identity here
    auto up = boundary_r0(g, lam, BoundarySide::plus);
    auto um = boundary_r0(gb, lam, BoundarySide::minus);
    Field conj_up = up.u;
    for (auto& x : conj_up.v) x = std::conj(x);
    CHECK(testutil::rel_err(um.u, conj_up) < 1e-8);
  }
  SUBCASE("imaginary part of the boundary pairing is nonnegative") {
    // with the resolvent in the linear slot: Im <R0(lam+i eps) f, f> >= 0
    for (int t = 0; t < 5; ++t) {
      Field f = testutil::random_smooth_field(s, 600 + t, 0.4);
      auto bf = boundary_r0(f, lam, BoundarySide::plus);
      double im = pairing(bf.u, f).imag();
      double scale = l2_norm(f);
      CHECK(im > -1e-8 * scale * scale);
    }
  }
}

TEST_CASE("perturbed solves") {
  SUBCASE("zero perturbation reduces to the free resolvent") {
    GridSpec s{2, 32, 16.0};
    Field g = testutil::random_smooth_field(s, 3);
    SpectralPoint pt{1.2, 0.2, BoundarySide::plus};
    auto res = solve_perturbed(g, pt, PerturbationOperator::none_operator());
    CHECK(res.converged);
    CHECK(testutil::rel_err(res.u, apply_r0(g, pt)) < 1e-13);
  }
  SUBCASE("well potential satisfies the operator equation, d=3") {
    GridSpec s{3, 32, 16.0};
    auto sp = catalog_scalar(s, "square_well", {{"depth", 3.0}, {"radius", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    Field g = testutil::gaussian_field(s, 1.0);
    SpectralPoint pt{0.8, 0.05, BoundarySide::plus};
    auto res = solve_perturbed(g, pt, P);
    CHECK(res.converged);
    CHECK(res.method == "woodbury");
    // (H - z) u = g
    Field hu = apply_h(res.u, P);
    Field zu = res.u;
    zu *= pt.z();
    hu -= zu;
    CHECK(testutil::rel_err(hu, g) < 1e-7);
  }
  SUBCASE("second resolvent identity rearranged") {
    GridSpec s{2, 32, 16.0};
    auto sp = catalog_scalar(s, "gaussian", {{"amp", -1.5}, {"sigma", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    SpectralPoint pt{1.0, 0.3, BoundarySide::plus};
    for (int t = 0; t < 5; ++t) {
      Field g = testutil::random_smooth_field(s, 40 + t);
      auto res = solve_perturbed(g, pt, P);
      Field rhs = apply_r0(g, pt);
      Field lu = apply_L(res.u, P);
      Field rlu = apply_r0(lu, pt);
      rhs -= rlu;
      CHECK(testutil::rel_err(res.u, rhs) < 1e-6);
    }
  }
  SUBCASE("iterative and dense solutions agree on a small grid") {
    GridSpec s{2, 16, 8.0};
    auto sp = catalog_scalar(s, "gaussian", {{"amp", -2.0}, {"sigma", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    Field g = testutil::random_smooth_field(s, 5);
    SpectralPoint pt{0.9, 0.1, BoundarySide::plus};
    SolveConfig ck;
    ck.method = SolveConfig::Method::krylov;
    ck.tol = 1e-10;
    auto rk = solve_perturbed(g, pt, P, ck);
    SolveConfig cd;
    cd.method = SolveConfig::Method::dense;
    auto rd = solve_perturbed(g, pt, P, cd);
    CHECK(rk.method == "gmres");
    CHECK(rd.method == "dense");
    CHECK(testutil::rel_err(rk.u, rd.u) < 1e-8);
  }
}

TEST_CASE("hamiltonian symmetry and lower bound") {
  GridSpec s{2, 32, 16.0};
  auto sp = catalog_scalar(s, "square_well", {{"depth", 3.0}, {"radius", 1.0}});
  auto P = PerturbationOperator::scalar(sp);
  double c_needed = 0.0;
  for (int t = 0; t < 20; ++t) {
    Field u = testutil::random_smooth_field(s, 700 + t);
    Field v = testutil::random_smooth_field(s, 800 + t);
    cplx lhs = pairing(apply_h(u, P), v);
    cplx rhs = std::conj(pairing(apply_h(v, P), u));
    CHECK(std::abs(lhs - rhs) < 1e-10 * (std::abs(lhs) + 1e-30));
    double w12 = sobolev_norm(u, 1.0, 2.0);
    double l2 = l2_norm(u);
    double quad = pairing(apply_h(u, P), u).real();
    c_needed = std::max(c_needed, (w12 * w12 - quad) / (l2 * l2));
  }
  CHECK(std::isfinite(c_needed));
  CHECK(c_needed < 3.0 + 1.5); // depth + margin
}

TEST_CASE("smallest singular value of the scattering operator") {
  SUBCASE("identity for the free case") {
    SpectralPoint pt{1.0, 0.1, BoundarySide::plus};
    auto r = min_singular(pt, PerturbationOperator::none_operator());
    CHECK(r.smin == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("positive away from the axis for an admissible well") {
    GridSpec s{2, 32, 16.0};
    auto sp = catalog_scalar(s, "square_well", {{"depth", 2.0}, {"radius", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    SpectralPoint pt{1.0, 0.5, BoundarySide::plus};
    auto r = min_singular(pt, P);
    CHECK(r.smin > 0.05);
    CHECK(r.converged);
  }
}

TEST_CASE("direct eigensolve and the exceptional scan locate the bound state") {
  GridSpec s{3, 32, 16.0};
  auto sp = catalog_scalar(s, "square_well", {{"depth", 8.0}, {"radius", 1.0}});
  auto P = PerturbationOperator::scalar(sp);

  auto pairs = eigensolve_direct(s, P, 1);
  REQUIRE(pairs.size() == 1);
  const double lam0 = pairs[0].value;
  CHECK(pairs[0].residual < 1e-8);

  // radial shooting oracle for the same sharp well
  double oracle = oracles::ground_state_energy(
      [](double r) { return r <= 1.0 ? -8.0 : 0.0; }, 0, -8.0 + 1e-6);
  CHECK(std::isfinite(oracle));
  CHECK(lam0 == doctest::Approx(oracle).epsilon(0.02));

  SUBCASE("scan dips at the eigenvalue and nowhere else") {
    ScanConfig cfg;
    cfg.eps_ladder = {0.1, 0.05, 0.025, 0.0125};
    const int count = 33;
    auto scan = scan_exceptional(lam0 - 1.2, lam0 + 1.2, count, P, cfg);
    REQUIRE(scan.dips.size() >= 1);
    double dl = 2.4 / (count - 1);
    bool found = false;
    for (const auto& dip : scan.dips) {
      if (std::abs(dip.lambda - lam0) <= 2.0 * dl) found = true;
    }
    CHECK(found);
    CHECK(scan.dips.size() == 1);
    // away from the dip's linear funnel the operator stays uniformly
    // invertible across the whole ladder (the funnel skirt spans about five
    // grid cells for this well)
    for (const auto& rec : scan.records) {
      if (std::abs(rec.lambda - scan.dips.front().lambda) <= 6.0 * dl) continue;
      CHECK(rec.smin > 0.05);
    }
  }
  SUBCASE("the free operator never dips") {
    ScanConfig cfg;
    cfg.eps_ladder = {0.1, 0.05};
    auto scan = scan_exceptional(0.5, 2.0, 9, PerturbationOperator::none_operator(), cfg);
    CHECK(scan.dips.empty());
    for (const auto& rec : scan.records) CHECK(rec.smin == doctest::Approx(1.0));
  }
}

TEST_CASE("shallow well has no bound state") {
  GridSpec s{3, 24, 12.0};
  auto sp = catalog_scalar(s, "square_well", {{"depth", 0.5}, {"radius", 1.0}});
  auto P = PerturbationOperator::scalar(sp);
  auto pairs = eigensolve_direct(s, P, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].value > -0.1);
  double oracle = oracles::ground_state_energy(
      [](double r) { return r <= 1.0 ? -0.5 : 0.0; }, 0, -0.5 + 1e-9);
  CHECK(std::isnan(oracle)); // the shooting oracle finds nothing either
}

TEST_CASE("free hamiltonian ground state is the constant") {
  GridSpec s{2, 16, 8.0};
  auto pairs = eigensolve_direct(s, PerturbationOperator::none_operator(), 1);
  REQUIRE(pairs.size() == 1);
  CHECK(std::abs(pairs[0].value) < 1e-9);
}

TEST_CASE("eigenfunction decay diagnostics") {
  GridSpec s{3, 32, 16.0};
  auto sp = catalog_scalar(s, "square_well", {{"depth", 8.0}, {"radius", 1.0}});
  auto P = PerturbationOperator::scalar(sp);
  auto pairs = eigensolve_direct(s, P, 1);
  REQUIRE(pairs.size() == 1);
  auto rep = eigen_decay_check(pairs[0], pairs[0].value, {0.0, 1.0, 2.0, 3.0});
  for (double w : rep.weighted_h1) CHECK(std::isfinite(w));
  CHECK(rep.decaying);
  CHECK(std::abs(rep.slope - rep.expected_slope) < 0.15 * std::abs(rep.expected_slope));

  SUBCASE("a plane wave is flagged as non-decaying") {
    EigenPairField fake;
    fake.value = 1.0;
    fake.residual = 0.0;
    fake.u = make_field(s, [&](const std::array<double, 3>& x) {
      return std::exp(cplx(0.0, 2.0 * kPi * 2.0 / s.box * x[0]));
    });
    auto flat = eigen_decay_check(fake, 1.0, {0.0, 1.0});
    CHECK(!flat.decaying);
  }
  SUBCASE("large residual is refused") {
    EigenPairField bad = pairs[0];
    bad.residual = 1e-3;
    CHECK_THROWS_AS(eigen_decay_check(bad, bad.value, {0.0}), ContractError);
  }
}

TEST_CASE("degenerate p-shell bound states give a multi-dimensional kernel") {
  GridSpec s{3, 24, 12.0};
  auto sp = catalog_scalar(s, "square_well", {{"depth", 20.0}, {"radius", 1.0}});
  auto P = PerturbationOperator::scalar(sp);
  auto pairs = eigensolve_direct(s, P, 4);
  REQUIRE(pairs.size() == 4);
  // s ground state below, then a triple degenerate under the cubic symmetry
  double oracle_p = oracles::ground_state_energy(
      [](double r) { return r <= 1.0 ? -20.0 : 0.0; }, 1, -20.0 + 1e-6);
  CHECK(std::isfinite(oracle_p));
  CHECK(pairs[1].value == doctest::Approx(oracle_p).epsilon(0.05));
  CHECK(pairs[2].value == doctest::Approx(pairs[1].value).epsilon(1e-6));
  CHECK(pairs[3].value == doctest::Approx(pairs[1].value).epsilon(1e-6));

  ScanConfig cfg;
  cfg.eps_ladder = {0.05, 0.025, 0.0125};
  auto scan = scan_exceptional(pairs[1].value - 0.35, pairs[1].value + 0.35, 8, P, cfg);
  REQUIRE(scan.dips.size() >= 1);
  CHECK(scan.dips.front().multiplicity >= 2);
}
