#ifndef LAPKIT_DYNAMICS_HPP
#define LAPKIT_DYNAMICS_HPP

#include <memory>
#include <string>
#include <vector>

#include "lapkit/perturb.hpp"
#include "lapkit/resolvent.hpp"

namespace lapkit {

struct EvolutionConfig {
  double dt = 0.01;
  double t_max = 16.0;
  enum class Method { auto_select, split_step, lanczos_exp };
  Method method = Method::auto_select;
  double tol = 1e-8;   // lanczos step tolerance
  int krylov_dim = 24; // lanczos subspace size

  void validate(const GridSpec& s, const PerturbationOperator& P) const;
};

/// Estimate of the spectral radius of H = -Delta + L on the grid.
double spectral_radius_estimate(const GridSpec& s, const PerturbationOperator& P);

/// e^{-i t H} f. Free evolution is the exact multiplier; scalar potentials
/// use Strang split-step (unitary by construction); first-order
/// perturbations use the Lanczos exponential. Negative t propagates
/// backwards. Aborts on norm drift beyond 1e-6 per unit time.
Field evolve(const Field& f, double t, const PerturbationOperator& P,
             const EvolutionConfig& cfg = {});

struct WindowConfig {
  int cheb_degree = 0;       // 0: choose from the transition target
  double transition = 0.4;   // polynomial filter edge width (energy units)
  int max_degree = 6000;
  bool jackson = true;
  std::size_t dense_limit = 1100; // dense eigenbasis below this dimension
};

/// Spectral projection E([a,b]) of H, realized as an exact multiplier
/// (free), a dense eigenbasis filter (small grids), or a Jackson-damped
/// Chebyshev polynomial filter (matrix-free).
class SpectralProjector {
 public:
  double a = 0.0, b = 1.0;
  std::string method;

  Field apply(const Field& f) const;
  /// ||E^2 f - E f||_2 / ||f||_2
  double idempotence_defect(const Field& probe) const;
  /// |<E u, v> - <u, E v>| / (||u|| ||v||)
  double symmetry_defect(const Field& u, const Field& v) const;

  // wiring
  GridSpec spec;
  PerturbationOperator P;
  // dense realization
  std::shared_ptr<std::vector<double>> basis; // row-major eigenvectors in columns
  std::shared_ptr<std::vector<double>> evals;
  // chebyshev realization
  std::vector<double> coef;
  double map_center = 0.0, map_half = 1.0;
};

/// Build E([a, b]). known_eigenvalues, when given, must not meet [a, b]
/// (the projection window must avoid the point spectrum).
SpectralProjector spectral_window(const GridSpec& s, const PerturbationOperator& P, double a,
                                  double b, const WindowConfig& cfg = {},
                                  const std::vector<double>* known_eigenvalues = nullptr);

struct SmoothingReport {
  std::vector<double> T_values;
  std::vector<double> q_restriction; // || S_{1/(d+1)} u ||_{L^{p'}_x L^2_t}
  std::vector<double> q_shell;       // || S_1 u ||_{B*_x L^2_t}
  double f_l2 = 0.0;
};

/// Time-integrated mixed norms of e^{-itH} E f over [-T, T] for each T in
/// the ladder (trapezoid in t at the evolution step size).
SmoothingReport smoothing_check(const Field& f, const SpectralProjector& E,
                                const PerturbationOperator& P, const std::vector<double>& T_ladder,
                                const EvolutionConfig& cfg = {});

struct WaveOpReport {
  std::vector<double> t_ladder;
  double t_wrap = 0.0;
  std::vector<double> isometry_defect;    // per t
  std::vector<double> intertwining;       // ||L e^{-i t H0} f0|| / ||f0|| per t
  std::vector<double> cauchy_increments;  // ||W(t_{k+1}) f - W(t_k) f||
  bool cauchy_decreasing = false;         // over the pre-wrap ladder
  double completeness_defect = -1.0;      // ||W W~ g - E g|| / ||g||, if probed
  double free_case_error = -1.0;          // ||W(t) f - E0 f|| for the free operator
};

/// Local wave operator approximants W(t) f = e^{i t H} e^{-i t H0} E0([a,b]) f
/// on the t ladder, with isometry, intertwining, Cauchy and (optionally)
/// completeness diagnostics.
WaveOpReport wave_operator(const Field& f, double a, double b, const PerturbationOperator& P,
                           std::vector<double> t_ladder, const EvolutionConfig& cfg = {},
                           const SpectralProjector* E_interacting = nullptr,
                           const Field* completeness_probe = nullptr);

} // namespace lapkit

#endif
