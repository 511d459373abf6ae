#ifndef LAPKIT_SPECIAL_HPP
#define LAPKIT_SPECIAL_HPP

#include <array>
#include <vector>

#include "lapkit/field.hpp"

namespace lapkit {

/// Modified Bessel function of the second kind K_nu(w) for real order
/// nu >= 0 and complex w with |arg w| < pi. Series (Temme) for |w| <= 2,
/// Steed's continued fraction for moderate |w|, asymptotic expansion for
/// large |w|; half-integer orders use the closed form.
cplx bessel_k(double nu, cplx w);

/// Modified Bessel function of the first kind (same domain machinery);
/// used by the left-half-plane continuation of bessel_k.
cplx bessel_i(double nu, cplx w);

enum class BoundarySide : int { plus = +1, minus = -1 };

/// Spectral parameter with the branch Im(z^{1/2}) > 0; on [0, infinity) the
/// side picks the boundary value lambda +- i0.
struct ResolventKernelParams {
  cplx z;
  int d = 3;
  BoundarySide side = BoundarySide::plus; // used only when z is on [0,inf)

  /// z^{1/2} with Im >= 0 (the declared side resolves real z >= 0).
  cplx sqrt_z() const;
};

/// Convolution kernel of (-Delta - z)^{-1} on R^d evaluated at x != 0:
/// the inverse Fourier transform of (|xi|^2 - z)^{-1} under the pairing
/// convention of this toolkit. d=3: e^{i sqrt(z)|x|}/(4 pi |x|).
cplx free_kernel(const std::array<double, 3>& x, const ResolventKernelParams& p);
cplx free_kernel_radial(double r, const ResolventKernelParams& p);

/// Quadrature on the sphere of radius sqrt(lambda): nodes and positive
/// weights summing to the surface measure (2 pi sqrt(lambda) for d=2,
/// 4 pi lambda for d=3).
struct SphereQuadrature {
  int d = 3;
  double lambda = 1.0;
  std::vector<std::array<double, 3>> nodes;
  std::vector<double> weights;

  double radius() const;
  double total_weight() const;
};

/// d=2: uniform trapezoid in angle; d=3: Gauss-Legendre in the polar
/// direction times trapezoid in azimuth. resolution controls the node count.
SphereQuadrature sphere_quadrature(int d, double lambda, int resolution);

/// ghat(xi) = (2pi)^{-d/2} h^d sum_x g(x) e^{-i x.xi} at the (off-lattice)
/// quadrature nodes; direct summation.
std::vector<cplx> evaluate_ghat_on_sphere(const Field& g, const SphereQuadrature& quad);

/// integral over the sphere of |ghat|^2 against the quadrature.
double sphere_restriction_mass(const Field& g, const SphereQuadrature& quad);

/// u(x) = integral over the sphere of radius sqrt(lambda) of e^{-i x.xi};
/// a generalized Helmholtz eigenfunction. resolution <= 0 picks an
/// automatic node count for the grid size.
Field herglotz_wave(const GridSpec& spec, double lambda, int resolution = 0);

/// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

/// ||(Delta + lambda) u||_2 / ||u||_2 measured with an order-8 centered
/// finite-difference Laplacian on the interior of the box (the outer
/// mask_frac of each axis is excluded, so the periodic seam cannot leak in).
double helmholtz_residual_interior(const Field& u, double lambda, double mask_frac = 0.1);

} // namespace lapkit

#endif
