#ifndef LAPKIT_PERTURB_HPP
#define LAPKIT_PERTURB_HPP

#include <functional>
#include <string>
#include <vector>

#include "lapkit/field.hpp"
#include "lapkit/spaces.hpp"

namespace lapkit {

/// Parameters of the interpolation weight (1+|x|^2)^N / (1+gamma|x|^2)^N.
struct WeightParams {
  double N = 1.0;
  double gamma = 1.0; // in (0, 1]

  void validate() const;
  double operator()(double r2) const {
    return std::pow((1.0 + r2) / (1.0 + gamma * r2), N);
  }
};

/// Pointwise weight evaluation.
double weight_eval(const std::array<double, 3>& x, int d, const WeightParams& p);
/// The weight materialized on a grid (real positive field).
Field weight_field(const GridSpec& s, const WeightParams& p);

/// Finite-difference diagnostics for the logarithmic derivatives of the
/// weight: max over the grid of
///   sum_j |b_j|(1+|x|^2)^{1/2} + |b|(1+|x|^2) + |bt|(1+|x|^2),
/// where grad mu = mu b_j, Lap mu = mu b, Lap mu^{-1} = mu^{-1} bt.
double weight_derivative_bound(const GridSpec& s, const WeightParams& p);

/// Local maximal function M_q(V)(x) = [int_{|y|<=1/2} |V(x+y)|^q dy]^{1/q},
/// realized as an FFT convolution against the ball indicator whose total
/// discrete mass equals the exact ball volume.
Field maximal_mq(const Field& V, double q);

/// |V| convolved with the truncated kernel 1_{|x|<=delta} |x|^{-(d-2)}
/// (d = 3) or 1_{|x|<=delta} log(1/|x|) (d = 2); the origin cell carries the
/// analytic cell integral and the total mass is exact.
Field kato_convolve(const Field& V, double delta);

/// Truncate-and-mollify approximation chi_n (V * phi_{1/n}) with a smooth
/// bump mollifier of radius 1/n and a smooth cutoff equal to 1 on |x| <= n.
Field mollify_truncate(const Field& V, int n);

/// Circular convolution sum_y f(y) k(x-y) h^d for a kernel given as a
/// function of the displacement vector.
Field convolve_kernel(const Field& f, const std::function<double(const std::array<double, 3>&)>& k);

struct ScalarPotential {
  Field V;     // real-valued
  double q0;   // d/2 for d = 3; > 1 for d = 2 (default 9/8)

  explicit ScalarPotential(Field v);
  ScalarPotential(Field v, double q0_) : V(std::move(v)), q0(q0_) {}
};

enum class OmegaRecipe { lp_optimized, y_optimized, kato_optimized };

/// Piecewise-dyadic weight built from the first-order potential; theta is
/// the 2^{-|j-j'|}-smoothed shell profile so consecutive ratios stay in
/// [1/2, 2], omega the recipe-specific power of theta.
struct OmegaWeight {
  OmegaRecipe recipe = OmegaRecipe::lp_optimized;
  std::vector<double> base;  // per-shell raw profile
  std::vector<double> theta; // smoothed profile
  std::vector<double> omega; // per-shell weight
  double rhs_functional = 0.0; // right-hand constant of the mapping bound

  /// omega(x) = 2^{-j/2} omega_j on D_j.
  Field materialize(const GridSpec& s) const;
};

struct VectorPotential {
  Field a;   // complex amplitude of the axis-d component
  double q0; // matches ScalarPotential

  explicit VectorPotential(Field a_);
  VectorPotential(Field a_, double q0_) : a(std::move(a_)), q0(q0_) {}
};

OmegaWeight build_omega(const VectorPotential& vp, OmegaRecipe recipe,
                        const ShellDecomposition& sh);

/// Admissibility functionals and verdicts for one perturbation.
struct AdmissibilityReport {
  std::string kind; // "scalar" or "first_order"
  double q0 = 0.0;
  // scalar functionals: N1 = ||M_q0 V||_{L^{(d+1)/2}}, N2 = ||M_q0 V||_Y,
  // N3 = || |V| * K_{d,1/2} ||_Y; first-order analogues use M_{2 q0}|a| and
  // the dyadic-lp profile for N1.
  double n1 = 0.0, n2 = 0.0, n3 = 0.0;
  std::vector<std::pair<double, double>> kato_curve; // (delta, Y norm)
  bool n1_pass = false, n2_pass = false, n3_pass = false;
  bool passed = false;
  std::string notes;
};

AdmissibilityReport admissibility_check(const ScalarPotential& sp);
AdmissibilityReport admissibility_check(const VectorPotential& vp);

/// One A/B factor pair acting on fields.
struct FactorPair {
  std::function<Field(const Field&)> A;
  std::function<Field(const Field&)> B;
};

struct PerturbationOperator {
  enum class Kind { none, scalar, first_order };
  Kind kind = Kind::none;
  Field V;            // scalar case
  Field a;            // first-order case
  double q0 = 1.5;
  OmegaWeight omega;  // first-order case
  AdmissibilityReport report;
  bool force = false; // allow application despite a failing report

  static PerturbationOperator none_operator();
  static PerturbationOperator scalar(const ScalarPotential& sp);
  static PerturbationOperator first_order(const VectorPotential& vp,
                                          OmegaRecipe recipe = OmegaRecipe::y_optimized);

  bool is_none() const { return kind == Kind::none; }
};

/// u -> L u. Scalar: V u. First-order: a d_d u - d_d(conj(a) u) with the
/// spectral derivative. Throws unless the report passed or force is set.
Field apply_L(const Field& u, const PerturbationOperator& P);

/// The factorization L = sum_j A_j^* B_j through L^2: scalar J = 1 with
/// A u = |V|^{1/2} u, B u = |V|^{1/2} sign(V) u; first-order J = 2 with
/// A1 = B2 = omega^{-1} conj(a) u and B1 = A2 = omega d_d u.
std::vector<FactorPair> factorize(const PerturbationOperator& P);

/// Measured constants (A, R) of the weighted smallness decomposition
///   ||mu L u||_X <= eps ||mu u||_X* + A ||u 1_{|x|<=R}||_2
/// over a probe family, for one (N, gamma, eps).
struct SmallnessRecord {
  double eps = 0.0;
  double A = 0.0;
  double R = 0.0;
};

SmallnessRecord smallness_decomposition(const PerturbationOperator& P, double N, double gamma,
                                        double eps, const std::vector<Field>& probes,
                                        const ShellDecomposition& sh);

} // namespace lapkit

#endif
