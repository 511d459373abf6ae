#ifndef LAPKIT_FFT_HPP
#define LAPKIT_FFT_HPP

#include <complex>
#include <memory>
#include <vector>

namespace lapkit {
namespace fft {

using cplx = std::complex<double>;

/// True if n is a product of the supported radices 2, 3, 5.
bool size_supported(int n);

/// In-place complex DFT of length n along a contiguous array.
/// sign = -1: forward (e^{-2pi i jk/n}), sign = +1: backward (unscaled).
void transform(cplx* data, int n, int sign);

/// d-dimensional transform on an axis-major cube of side n (axis 0 slowest).
/// Unscaled; the caller owns normalization.
void transform_nd(cplx* data, int d, int n, int sign);

} // namespace fft
} // namespace lapkit

#endif
