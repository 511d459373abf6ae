#include <cmath>

#include "doctest.h"
#include "lapkit/catalog.hpp"
#include "lapkit/dynamics.hpp"
#include "test_util.hpp"

using namespace lapkit;

TEST_CASE("free evolution matches the spreading gaussian") {
  GridSpec s{2, 128, 32.0};
  const double sigma = 1.0, t = 1.0;
  Field f = testutil::gaussian_field(s, sigma);
  Field u = evolve(f, t, PerturbationOperator::none_operator());
  const cplx a(0.5 * sigma * sigma, 0.0);
  Field want = make_field(s, [&](const std::array<double, 3>& x) {
    double r2 = x[0] * x[0] + x[1] * x[1];
    cplx denom = a + cplx(0.0, t);
    return std::pow(a / denom, 1.0) * std::exp(-r2 / (4.0 * denom));
  });
  CHECK(testutil::rel_err(u, want) < 1e-6);
}

TEST_CASE("split step unitarity and group property") {
  GridSpec s{2, 64, 16.0};
  auto sp = catalog_scalar(s, "gaussian", {{"amp", -2.0}, {"sigma", 1.0}});
  auto P = PerturbationOperator::scalar(sp);
  Field f = testutil::random_smooth_field(s, 3);
  EvolutionConfig cfg;
  cfg.dt = 0.05;

  Field u = evolve(f, 1.0, P, cfg);
  CHECK(std::abs(l2_norm(u) - l2_norm(f)) < 1e-10 * l2_norm(f));

  // step-aligned times compose exactly
  Field ab = evolve(evolve(f, 0.1, P, cfg), 0.15, P, cfg);
  Field once = evolve(f, 0.25, P, cfg);
  CHECK(testutil::rel_err(ab, once) < 1e-12);

  // generic times compose within the step tolerance
  Field cdp = evolve(evolve(f, 0.13, P, cfg), 0.21, P, cfg);
  Field once2 = evolve(f, 0.34, P, cfg);
  CHECK(testutil::rel_err(cdp, once2) < 5e-3);
}

TEST_CASE("energy is conserved along the well trajectory") {
  GridSpec s{2, 64, 16.0};
  auto sp = catalog_scalar(s, "square_well",
                           {{"depth", 3.0}, {"radius", 1.0}, {"edge_width", 0.5}});
  auto P = PerturbationOperator::scalar(sp);
  Field f = testutil::gaussian_field(s, 1.2);
  f *= 1.0 / l2_norm(f);
  EvolutionConfig cfg;
  cfg.dt = 5e-4;
  double e0 = pairing(apply_h(f, P), f).real();
  Field u = f;
  for (int k = 0; k < 5; ++k) {
    u = evolve(u, 1.0, P, cfg);
    double e = pairing(apply_h(u, P), u).real();
    CHECK(std::abs(e - e0) < 1e-6 * std::abs(e0));
  }
}

TEST_CASE("lanczos exponential agrees with split step on a scalar potential") {
  GridSpec s{2, 32, 16.0};
  auto sp = catalog_scalar(s, "gaussian", {{"amp", -1.5}, {"sigma", 1.2}});
  auto P = PerturbationOperator::scalar(sp);
  Field f = testutil::gaussian_field(s, 1.0);
  EvolutionConfig ss;
  ss.dt = 1e-3;
  EvolutionConfig lz;
  lz.method = EvolutionConfig::Method::lanczos_exp;
  lz.dt = 1e-3; // spectral radius ~ 3 pi^2/h^2: keep dt within the budget
  lz.krylov_dim = 20;
  Field a = evolve(f, 0.2, P, ss);
  Field b = evolve(f, 0.2, P, lz);
  CHECK(testutil::rel_err(a, b) < 1e-6);
}

TEST_CASE("lanczos budget gate") {
  GridSpec s{2, 64, 16.0};
  auto vp = catalog_vector(s, "vector_bump", {{"amp_re", 0.4}, {"sigma", 1.0}});
  auto P = PerturbationOperator::first_order(vp);
  EvolutionConfig cfg;
  cfg.dt = 0.05; // far beyond 0.5/spectral_radius on this grid
  Field f = testutil::gaussian_field(s, 1.0);
  CHECK_THROWS_AS(evolve(f, 0.1, P, cfg), ContractError);
}

TEST_CASE("first order evolution is unitary") {
  GridSpec s{2, 32, 8.0};
  auto vp = catalog_vector(s, "vector_bump", {{"amp_re", 0.4}, {"amp_im", 0.2}, {"sigma", 1.0}});
  auto P = PerturbationOperator::first_order(vp);
  EvolutionConfig cfg;
  cfg.method = EvolutionConfig::Method::lanczos_exp;
  cfg.dt = 0.5 / spectral_radius_estimate(s, P);
  cfg.krylov_dim = 16;
  Field f = testutil::gaussian_field(s, 0.8);
  Field u = evolve(f, 0.5, P, cfg);
  CHECK(std::abs(l2_norm(u) - l2_norm(f)) < 1e-7 * l2_norm(f));
}

TEST_CASE("spectral windows") {
  SUBCASE("free window is the exact band indicator") {
    GridSpec s{2, 32, 16.0};
    auto E = spectral_window(s, PerturbationOperator::none_operator(), 0.5, 2.0);
    CHECK(E.method == "multiplier");
    Field f = testutil::random_smooth_field(s, 9);
    CHECK(E.idempotence_defect(f) < 1e-13);
    Field ef = E.apply(f);
    Field eef = E.apply(ef);
    CHECK(testutil::rel_err(eef, ef) < 1e-13);
  }
  SUBCASE("dense eigenbasis window on a small grid") {
    GridSpec s{2, 16, 8.0};
    auto sp = catalog_scalar(s, "gaussian", {{"amp", -2.0}, {"sigma", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    auto E = spectral_window(s, P, 0.5, 3.0);
    CHECK(E.method == "dense");
    Field f = testutil::random_smooth_field(s, 4);
    CHECK(E.idempotence_defect(f) < 1e-10);
    Field g = testutil::random_smooth_field(s, 5);
    CHECK(E.symmetry_defect(f, g) < 1e-10);

    // nested windows compose to the intersection
    auto E2 = spectral_window(s, P, 1.0, 3.0);
    auto Ei = spectral_window(s, P, 1.0, 3.0);
    Field lhs = E.apply(E2.apply(f));
    Field rhs = Ei.apply(f);
    CHECK(testutil::rel_err(lhs, rhs) < 1e-10);

    // commutes with the evolution generated by the same operator, up to
    // the split-step method error at this dt
    EvolutionConfig cfg;
    cfg.dt = 0.002;
    Field a = evolve(E.apply(f), 0.4, P, cfg);
    Field b = E.apply(evolve(f, 0.4, P, cfg));
    CHECK(testutil::rel_err(a, b) < 5e-5);

    // the full spectral range reproduces the field
    auto Efull = spectral_window(s, P, -10.0, 1e5);
    CHECK(testutil::rel_err(Efull.apply(f), f) < 1e-9);
  }
  SUBCASE("window must avoid detected eigenvalues") {
    GridSpec s{2, 16, 8.0};
    auto sp = catalog_scalar(s, "gaussian", {{"amp", -2.0}, {"sigma", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    std::vector<double> eigs = {1.25};
    CHECK_THROWS_AS(spectral_window(s, P, 0.5, 2.0, {}, &eigs), ContractError);
  }
  SUBCASE("chebyshev filter approximates the projection away from edges") {
    GridSpec s{2, 32, 16.0}; // h = 0.5 keeps the spectral range moderate
    auto sp = catalog_scalar(s, "square_well", {{"depth", 2.0}, {"radius", 1.0}});
    auto P = PerturbationOperator::scalar(sp);
    WindowConfig wc;
    wc.transition = 0.3;
    wc.dense_limit = 0; // force the polynomial path
    auto E = spectral_window(s, P, 0.5, 2.0, wc);
    CHECK(E.method == "chebyshev");
    // probe with spectral mass well inside the window
    Field f0 = testutil::random_smooth_field(s, 12, 0.1);
    Field f = apply_multiplier(f0, Multiplier::band_indicator(0.8, 1.7));
    Field ef = E.apply(f);
    CHECK(testutil::rel_err(ef, f) < 0.08);
    CHECK(E.idempotence_defect(f) < 0.05);
  }
}

TEST_CASE("kato smoothing mixed norms are T stable for the free flow") {
  GridSpec s{2, 128, 64.0};
  auto E = spectral_window(s, PerturbationOperator::none_operator(), 0.5, 2.0);
  // a localized packet; an extended state would keep feeding every shell
  Field f = E.apply(testutil::gaussian_field(s, 2.0));
  f *= 1.0 / l2_norm(f);
  EvolutionConfig cfg;
  cfg.dt = 0.04;
  auto rep = smoothing_check(f, E, PerturbationOperator::none_operator(), {4.0, 8.0}, cfg);
  REQUIRE(rep.q_restriction.size() == 2);
  // the planar case is the slowest-dispersing one; its tail integral is
  // still shrinking at these times
  CHECK(rep.q_restriction[1] <= 1.12 * rep.q_restriction[0]);
  CHECK(rep.q_shell[1] <= 1.10 * rep.q_shell[0]);
  CHECK(rep.q_restriction[0] > 0.0);

  // a probe orthogonal to the window contributes only filter leakage
  Field f0 = testutil::random_smooth_field(s, 21, 0.2);
  Field g = f0;
  g -= E.apply(f0);
  auto rep0 = smoothing_check(g, E, PerturbationOperator::none_operator(), {2.0}, cfg);
  CHECK(rep0.q_restriction[0] < 1e-10 * rep.q_restriction[0] + 1e-12);
}

TEST_CASE("wave operator approximants") {
  SUBCASE("free case collapses to the window projection") {
    GridSpec s{2, 64, 16.0};
    Field f = testutil::random_smooth_field(s, 31, 0.2);
    auto rep = wave_operator(f, 0.5, 1.5, PerturbationOperator::none_operator(), {1.0, 2.0, 4.0});
    CHECK(rep.free_case_error < 1e-12);
    for (double dfl : rep.isometry_defect) CHECK(dfl < 1e-12);
  }
  SUBCASE("well potential: isometry and intertwining decay") {
    GridSpec s{2, 96, 48.0};
    auto sp = catalog_scalar(s, "square_well",
                             {{"depth", 3.0}, {"radius", 1.0}, {"edge_width", 0.5}});
    auto P = PerturbationOperator::scalar(sp);
    Field f = testutil::gaussian_field(s, 1.5);
    EvolutionConfig cfg;
    cfg.dt = 0.02;
    auto rep = wave_operator(f, 0.5, 1.5, P, {0.5, 1.0, 2.0, 4.0}, cfg);
    CHECK(rep.t_wrap > 2.0);
    for (double dfl : rep.isometry_defect) CHECK(dfl < 0.05);
    // the packet leaves the well, so the commutator term decays; planar
    // dispersion is slow, so the asymptotic Cauchy trend is exercised in
    // the three-dimensional runs instead
    CHECK(rep.intertwining.back() < 0.6 * rep.intertwining.front());
    REQUIRE(rep.cauchy_increments.size() == 3);
    for (double c : rep.cauchy_increments) CHECK(std::isfinite(c));
  }
}
