#ifndef LAPKIT_SPACES_HPP
#define LAPKIT_SPACES_HPP

#include <memory>
#include <string>
#include <vector>

#include "lapkit/field.hpp"

namespace lapkit {

/// Dyadic regions D_0 = {|x| <= 1}, D_j = {|x| in [2^{j-1}, 2^j]} for j >= 1.
/// Grid points on a boundary sphere |x| = 2^j belong to the smaller j.
struct ShellDecomposition {
  GridSpec spec;
  int j_max = 0;                        // ceil(log2(sqrt(d) box/2))
  std::vector<std::uint8_t> shell_of;   // per grid point
  std::vector<std::vector<std::uint32_t>> members; // per shell

  explicit ShellDecomposition(const GridSpec& s);
};

/// Shared, lazily built decomposition per grid.
const ShellDecomposition& shells_for(const GridSpec& s);

/// Per-shell L^2 norms (Riemann sums) of a physical field.
std::vector<double> shell_l2(const Field& f, const ShellDecomposition& sh);
/// Per-shell sup norms of a physical field.
std::vector<double> shell_sup(const Field& f, const ShellDecomposition& sh);

/// sum_j 2^{j/2} ||f||_{L^2(D_j)}
double b_norm(const Field& f, const ShellDecomposition& sh);
/// sup_j 2^{-j/2} ||u||_{L^2(D_j)}
double bstar_norm(const Field& u, const ShellDecomposition& sh);
/// sum_j 2^j ||V||_{L^infty(D_j)}
double y_norm(const Field& V, const ShellDecomposition& sh);

/// ||S_alpha u||_{L^p}
double sobolev_norm(const Field& u, double alpha, double p);

/// Stein-Tomas restriction exponents.
inline double p_low(int d) { return (2.0 * d + 2.0) / (d + 3.0); }
inline double p_high(int d) { return (2.0 * d + 2.0) / (d - 1.0); }

/// max(||S_{1/(d+1)} u||_{L^{p'_d}}, ||S_1 u||_{B*})
double x_star_norm(const Field& u, const ShellDecomposition& sh);

struct XUpperResult {
  double value = 0.0;
  std::string splitting; // label of the achieving splitting
  bool surrogate = true; // always: the value is an upper bound on the infimum
};

/// Upper bound on inf_{f1+f2=f} ||S_{-1/(d+1)} f1||_{L^{p_d}} + ||S_{-1} f2||_B
/// over a finite splitting family: the two trivial splittings plus, for each
/// given lambda, the annular frequency splitting (both assignments).
XUpperResult x_norm_upper(const Field& f, const ShellDecomposition& sh,
                          const std::vector<double>& split_lambdas = {});

/// Flat report of the norms of one field.
struct NormReport {
  double b = 0.0, b_star = 0.0, y = 0.0, l2 = 0.0;
  double w_alpha_p = 0.0;
  double alpha = 0.0, p = 2.0;
  double x_star = 0.0, x_upper = 0.0;
  std::string x_upper_splitting;
  bool x_upper_surrogate = true;
};

NormReport norm_report(const Field& f, const ShellDecomposition& sh, double alpha, double p,
                       const std::vector<double>& split_lambdas = {});

} // namespace lapkit

#endif
