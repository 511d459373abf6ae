#ifndef LAPKIT_LINALG_HPP
#define LAPKIT_LINALG_HPP

#include <complex>
#include <functional>
#include <vector>

namespace lapkit {
namespace linalg {

using cplx = std::complex<double>;
using Vec = std::vector<cplx>;
using Op = std::function<void(const Vec& in, Vec& out)>;

double nrm2(const Vec& v);
cplx dot(const Vec& a, const Vec& b); // sum a_i conj(b_i)
void axpy(cplx alpha, const Vec& x, Vec& y);

struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0; // relative to ||rhs||
};

/// Restarted GMRES for A x = b, matrix-free. right_prec, if given, applies
/// an approximate inverse M^{-1}; the returned residual is for the
/// unpreconditioned system.
GmresResult gmres(const Op& A, const Vec& b, Vec& x, int restart, int max_iters, double tol,
                  const Op* right_prec = nullptr);

struct EigenPair {
  double value = 0.0;
  Vec vector;
  double residual = 0.0;
};

/// Lowest `count` eigenpairs of a Hermitian operator by Lanczos with full
/// reorthogonalization and deflation restarts. dim is the vector length,
/// tol the residual target for ||A u - lambda u||.
std::vector<EigenPair> lowest_eigenpairs(const Op& A, std::size_t dim, int count, double tol,
                                         int max_steps, std::uint64_t seed = 12345);

/// Symmetric tridiagonal eigensolve (implicit QL). diag/off are modified;
/// returns eigenvalues ascending and, if z != nullptr, accumulates the
/// orthogonal transform into the m x m matrix z (row-major).
void tridiag_eigen(std::vector<double>& diag, std::vector<double>& off, std::vector<double>* z);

/// Dense complex LU with partial pivoting; a is n x n row-major, overwritten.
void lu_factor(std::vector<cplx>& a, std::vector<int>& piv, int n);
void lu_solve(const std::vector<cplx>& a, const std::vector<int>& piv, int n, Vec& b);

/// Full eigendecomposition of a dense real symmetric matrix (Householder
/// tridiagonalization + implicit QL). a is n x n row-major; on return its
/// columns hold the eigenvectors and evals the ascending eigenvalues.
void dense_sym_eigen(std::vector<double>& a, int n, std::vector<double>& evals);

/// Smallest singular value of a matrix-free operator by inverse power
/// iteration on A* A; solve_A and solve_Ah apply A^{-1} and (A*)^{-1}.
struct SigmaMinResult {
  double sigma_min = 0.0;
  int iterations = 0;
  bool converged = false;
  Vec vector; // right singular vector estimate
};

SigmaMinResult smallest_singular(const Op& A, const Op& solve_A, const Op& solve_Ah,
                                 std::size_t dim, int max_iters, double tol,
                                 std::uint64_t seed = 999,
                                 const std::vector<Vec>* deflate = nullptr);

/// Preconditioned conjugate gradients for a Hermitian positive definite
/// operator. Returns the iteration count, or -1 on non-convergence.
int pcg(const Op& A, const Vec& b, Vec& x, int max_iters, double tol, const Op* prec = nullptr);

/// Refine an approximate eigenpair of a Hermitian operator by shifted
/// inverse power iteration; inner solves use pcg on (A - shift), which must
/// be positive definite (shift below the spectrum).
EigenPair refine_eigenpair(const Op& A, const Vec& guess, double shift, std::size_t dim,
                           double tol, int max_outer, const Op* prec = nullptr,
                           double inner_tol = 1e-10);

/// Deterministic pseudo-random complex vector (mt19937_64 + Box-Muller).
Vec random_vector(std::size_t dim, std::uint64_t seed);

} // namespace linalg
} // namespace lapkit

#endif
