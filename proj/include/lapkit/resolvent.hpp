#ifndef LAPKIT_RESOLVENT_HPP
#define LAPKIT_RESOLVENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "lapkit/field.hpp"
#include "lapkit/perturb.hpp"
#include "lapkit/special.hpp"

namespace lapkit {

/// Spectral parameter lambda + i eps with boundary-side bookkeeping.
/// Direct multiplier use requires eps != 0 whenever lambda >= 0; boundary
/// values are reached through the extrapolation ladder only.
struct SpectralPoint {
  double lambda = 1.0;
  double eps = 0.1;
  BoundarySide side = BoundarySide::plus;

  cplx z() const { return cplx(lambda, eps); }
  int side_sign() const {
    if (eps != 0.0) return eps > 0.0 ? +1 : -1;
    return side == BoundarySide::plus ? +1 : -1;
  }
  void validate_for_multiplier() const;
};

/// Sorted distinct values of |xi|^2 on the dual lattice.
const std::vector<double>& lattice_spectrum(const GridSpec& s);
/// Distance from lambda to the nearest lattice value of |xi|^2.
double lattice_distance(double lambda, const GridSpec& s);
/// Move lambda to the midpoint of its lattice gap if it sits within half a
/// local spectral cell of a lattice value.
double snap_off_lattice(double lambda, const GridSpec& s);
/// The lattice value of |xi|^2 nearest to lambda.
double nearest_lattice_value(double lambda, const GridSpec& s);

/// R_0(z) g via the Fourier multiplier (|xi|^2 - z)^{-1}.
Field apply_r0(const Field& g, const SpectralPoint& pt);

struct BoundaryField {
  Field u;
  double err_l2 = 0.0;  // extrapolation error estimate, L2 scale
  std::vector<double> ladder;
};

/// Boundary value R_0(lambda +- i0) g by a geometric eps ladder and
/// pointwise quadratic Richardson extrapolation.
BoundaryField boundary_r0(const Field& g, double lambda, BoundarySide side,
                          std::vector<double> ladder = {});

struct SolveConfig {
  enum class Method { auto_select, krylov, dense };
  Method method = Method::auto_select;
  int restart = 50;
  int max_iters = 4000;
  double tol = 1e-8;
  int woodbury_max_cells = 2500; // compact-support fast path bound
};

struct SolveResult {
  Field u;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;   // || u + R0 L u - R0 g || / || R0 g ||
  std::string method;
};

/// Solve (Id + R_0(z) L) u = R_0(z) g, i.e. u = R_L(z) g.
SolveResult solve_perturbed(const Field& g, const SpectralPoint& pt,
                            const PerturbationOperator& P, const SolveConfig& cfg = {});

struct MinSingularResult {
  double smin = 0.0;
  int iterations = 0;
  bool converged = false;
  Field vector;
};

/// Smallest singular value of Id + R_0(z) L by inverse power iteration on
/// the normal operator, matrix-free; inner inverses reuse the solver above.
MinSingularResult min_singular(const SpectralPoint& pt, const PerturbationOperator& P,
                               const SolveConfig& cfg = {},
                               const std::vector<Field>* deflate = nullptr);

struct ScanRecord {
  double lambda = 0.0;
  double eps = 0.0;
  int side = +1;
  double smin = 0.0;
  int iters = 0;
  double residual = 0.0;
};

struct DipInfo {
  double lambda = 0.0;
  double smin = 0.0;
  int multiplicity = 1;
  Field kernel_vector;
};

struct ExceptionalScan {
  std::vector<ScanRecord> records;
  std::vector<DipInfo> dips;
};

struct ScanConfig {
  std::vector<double> eps_ladder = {0.1, 0.05, 0.025, 0.0125, 0.00625};
  double dip_threshold = 0.05;
  int max_multiplicity = 4;
  SolveConfig solver;
};

/// Sweep the interval for kernel candidates of Id + R_0(lambda + i eps) L.
ExceptionalScan scan_exceptional(double lambda_min, double lambda_max, int lambda_count,
                                 const PerturbationOperator& P, const ScanConfig& cfg = {});

struct EigenPairField {
  double value = 0.0;
  Field u;
  double residual = 0.0;
};

struct EigensolveConfig {
  double tol = 1e-8;
  int max_steps = 260;
  std::uint64_t seed = 4242;
};

/// Lowest eigenpairs of H = -Delta + L on the grid (Lanczos with full
/// reorthogonalization and deflation). window, when finite, filters the
/// reported pairs.
std::vector<EigenPairField> eigensolve_direct(const GridSpec& s, const PerturbationOperator& P,
                                              int count,
                                              std::optional<std::pair<double, double>> window = {},
                                              const EigensolveConfig& cfg = {});

/// H u for the discrete Hamiltonian -Delta + L.
Field apply_h(const Field& u, const PerturbationOperator& P);

struct DecayReport {
  std::vector<double> N_values;
  std::vector<double> weighted_h1;    // ||(1+|x|^2)^N u||_{W^{1,2}}
  std::vector<double> tail_fraction;  // contribution of the masked outer region
  double slope = 0.0;                 // fitted decay rate of log(radial profile)
  double expected_slope = 0.0;        // -sqrt(|lambda|)
  bool decaying = false;
};

/// Weighted-norm finiteness and decay-slope diagnostics for an eigenpair.
/// Refuses pairs whose residual exceeds 1e-6.
DecayReport eigen_decay_check(const EigenPairField& pair, double lambda,
                              const std::vector<double>& N_list);

} // namespace lapkit

#endif
