#ifndef LAPKIT_HARNESS_HPP
#define LAPKIT_HARNESS_HPP

#include <functional>
#include <string>
#include <vector>

#include "lapkit/resolvent.hpp"
#include "lapkit/spaces.hpp"
#include "lapkit/special.hpp"

namespace lapkit {

/// A deterministic finite family of unit-scale probe fields: gaussians,
/// dyadic shell bumps, annular wave packets around the given energies, a
/// herglotz wave, seeded smooth noise, and near-resonant lattice plane
/// waves (flagged sharp).
struct ProbeFamily {
  std::vector<Field> fields;
  std::vector<std::string> labels;
  std::vector<bool> sharp;

  std::size_t size() const { return fields.size(); }
  void push(Field f, std::string label, bool is_sharp = false);

  static ProbeFamily standard(const GridSpec& s, const std::vector<double>& lambdas,
                              std::uint64_t seed, int n_random = 3);
};

struct NormSpec {
  enum class Kind { l2, lp, sobolev, b, bstar, x_upper, x_star };
  Kind kind = Kind::l2;
  double p = 2.0;
  double alpha = 0.0;
  std::vector<double> split_lambdas; // for x_upper

  static NormSpec L2() { return {}; }
  static NormSpec Lp(double p);
  static NormSpec W(double alpha, double p);
  static NormSpec B();
  static NormSpec Bstar();
  static NormSpec XUpper(std::vector<double> lambdas = {});
  static NormSpec Xstar();
};

double eval_norm(const Field& f, const NormSpec& spec, const ShellDecomposition& sh);

using FieldOp = std::function<Field(const Field&)>;

/// Probe lower-bound estimate of ||op||_{src -> dst}: the max over probes of
/// dst(op f)/src(f). Never an upper bound.
double probe_operator_norm(const FieldOp& op, const NormSpec& src, const NormSpec& dst,
                           const ProbeFamily& probes, const ShellDecomposition& sh,
                           bool include_sharp = true);

/// Exact W^{-1,2} -> W^{1,2} norm of the free resolvent on the grid
/// (attained by a lattice plane wave).
double elliptic_norm_exact(const GridSpec& s, cplx z);

struct SweepRecord {
  double lambda = 0.0;
  double eps = 0.0;
  int side = +1;
  bool resonant = false;
  double est_x_xstar = 0.0;
  double est_elliptic = 0.0;
  // probe estimates of the four localized component norms:
  // B->B*, Lp->Lp', Lp->B*, B->Lp' (all with the annular localization)
  double comp_b_bstar = 0.0;
  double comp_lp_lp = 0.0;
  double comp_lp_bstar = 0.0;
  double comp_b_lp = 0.0;
  double wall_ms = 0.0;
};

struct SweepConfig {
  double lambda_min = 0.5;
  double lambda_max = 2.0;
  int lambda_count = 24;  // generic rows, snapped off the lattice
  int resonant_count = 6; // rows placed exactly on lattice energies
  std::vector<double> eps_ladder; // default: geometric 1e-1 .. 1e-3, 7 rungs
  bool components = false;        // also estimate the four component norms
  int workers = 0;                // 0: hardware concurrency
  std::uint64_t seed = 1;
  SolveConfig solver;
};

/// The main experiment: per (lambda, eps) probe estimates of the
/// X -> X* resolvent norm and of the elliptic W^{-1,2} -> W^{1,2} norm,
/// free or perturbed. Records are ordered by (lambda, eps).
std::vector<SweepRecord> lap_sweep(const GridSpec& s, const SweepConfig& cfg,
                                   const PerturbationOperator& P);

struct SweepSummary {
  std::vector<double> eps;
  std::vector<double> max_x_xstar_generic;  // per eps, max over generic rows
  std::vector<double> max_elliptic_resonant; // per eps, max over resonant rows
  double plateau_ratio = 0.0; // x_xstar at smallest eps / largest eps
  double elliptic_ratio = 0.0;
};

SweepSummary sweep_summary(const std::vector<SweepRecord>& records);

struct TraceReport {
  double lambda = 0.0;
  int side = +1;
  double lhs = 0.0;          // extrapolated Im <R0 g, g>
  double lhs_err = 0.0;      // extrapolation error estimate
  double c1 = 0.0;           // +- pi/(2 sqrt(lambda))
  double sphere = 0.0;       // restriction mass on the energy sphere
  double rel_error = 0.0;    // |lhs - c1*sphere| / |c1*sphere|
  // radial-average identity: Q(R) = R^{-1} int |R0 g|^2 phi(x/R)
  std::vector<std::pair<double, double>> q_curve;
  double c2 = 0.0;           // Q(R_max)/sphere for this g
};

struct TraceConfig {
  std::vector<double> eps_ladder = {0.8, 0.4, 0.2, 0.1, 0.05, 0.025};
  int quad_resolution = 96;
  double eps_radial = 0.0; // 0: automatic (a few box-scale widths)
};

TraceReport trace_identity_check(const Field& g, double lambda, BoundarySide side,
                                 const TraceConfig& cfg = {});

struct WeightedReport {
  double lambda = 0.0;
  double N = 0.0;
  std::vector<double> gammas;
  std::vector<double> ratios;       // x*(mu u) / x_upper(mu (Delta+lambda) u)
  double ratio_spread = 0.0;        // max/min over the ladder
  double ratio_vs_unit = 0.0;       // max over gamma of r(gamma)/r(1)
  bool counterexample_regime = false; // (Delta+lambda) u vanishes on the interior
  double interior_residual = 0.0;
  std::vector<std::pair<double, double>> shell_averages; // (R, R^{-1} int_{R..2R} |u|^2)
  bool shell_average_stable = false; // top three values within 20 percent
};

WeightedReport weighted_estimate_check(const Field& u, double lambda, double N,
                                       const std::vector<double>& gammas);

struct CommutationReport {
  struct Entry {
    double alpha = 0.0;
    std::string norm;
    std::vector<double> est_per_gamma; // est of mu S_a mu^-1 S_-a
    std::vector<double> est_swapped;   // est of S_a mu S_-a mu^-1
    double uniformity = 0.0;           // max/min over the gamma ladder
  };
  double N = 0.0;
  std::vector<Entry> entries;
  bool gamma_uniform = false; // all entries within factor 2
};

CommutationReport commutation_check(const std::vector<double>& alphas, double N,
                                    const std::vector<double>& gammas,
                                    const ProbeFamily& probes);

/// Richardson extrapolation at 0 of samples f(t_k) on a decreasing ladder
/// using a quadratic model on consecutive triples; returns the extrapolant
/// with the smallest successive-difference error estimate.
std::pair<double, double> richardson_extrapolate(const std::vector<double>& ladder,
                                                 const std::vector<double>& values);

/// Geometric ladder from start down to stop (inclusive-ish), count rungs.
std::vector<double> geometric_ladder(double start, double stop, int count);

} // namespace lapkit

#endif
