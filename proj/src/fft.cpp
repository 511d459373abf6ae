#include "lapkit/fft.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace lapkit {
namespace fft {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

struct Plan {
  int n = 0;
  std::vector<cplx> tw;      // tw[k] = exp(-2 pi i k / n)
  std::vector<int> factors;  // prime factors of n, smallest first

  explicit Plan(int n_) : n(n_) {
    tw.resize(n);
    for (int k = 0; k < n; ++k) {
      double ang = -2.0 * kPi * double(k) / double(n);
      tw[k] = cplx(std::cos(ang), std::sin(ang));
    }
    int m = n;
    for (int p : {2, 3, 5}) {
      while (m % p == 0) {
        factors.push_back(p);
        m /= p;
      }
    }
    if (m != 1) throw std::invalid_argument("fft: size must factor into 2,3,5");
  }
};

const Plan& plan_for(int n) {
  thread_local std::unordered_map<int, std::unique_ptr<Plan>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
  return *it->second;
}

// Recursive decimation-in-time over the factor list. x holds the input and
// receives the output; tmp is scratch of the same length. step maps local
// twiddle exponents onto the root table: w_n^q = tw[q * step] (conjugated for
// the backward direction by index reflection).
void rec(cplx* x, cplx* tmp, int n, int step, const Plan& plan, int sign,
         const int* factor) {
  if (n == 1) return;
  const int p = *factor;
  const int m = n / p;
  for (int r = 0; r < p; ++r) {
    cplx* dst = tmp + std::size_t(r) * m;
    const cplx* src = x + r;
    for (int j = 0; j < m; ++j) dst[j] = src[std::size_t(j) * p];
  }
  for (int r = 0; r < p; ++r)
    rec(tmp + std::size_t(r) * m, x + std::size_t(r) * m, m, step * p, plan,
        sign, factor + 1);

  const cplx* tw = plan.tw.data();
  const int N = plan.n;
  auto twiddle = [&](long q) -> cplx {
    long idx = (q * step) % N;
    cplx w = tw[idx];
    return sign < 0 ? w : std::conj(w);
  };

  if (p == 2) {
    for (int k = 0; k < m; ++k) {
      cplx t = twiddle(k) * tmp[m + k];
      x[k] = tmp[k] + t;
      x[k + m] = tmp[k] - t;
    }
  } else {
    for (int k = 0; k < n; ++k) {
      const int km = k % m;
      cplx acc = tmp[km];
      long rk = 0;
      for (int r = 1; r < p; ++r) {
        rk += k;
        acc += twiddle(rk % n) * tmp[std::size_t(r) * m + km];
      }
      x[k] = acc;
    }
  }
}

void transform_with_scratch(cplx* data, int n, int sign, cplx* scratch) {
  const Plan& plan = plan_for(n);
  rec(data, scratch, n, 1, plan, sign, plan.factors.data());
}

} // namespace

bool size_supported(int n) {
  if (n < 2) return false;
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

void transform(cplx* data, int n, int sign) {
  thread_local std::vector<cplx> scratch;
  if (int(scratch.size()) < n) scratch.resize(n);
  transform_with_scratch(data, n, sign, scratch.data());
}

void transform_nd(cplx* data, int d, int n, int sign) {
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= std::size_t(n);

  thread_local std::vector<cplx> line, scratch;
  if (int(line.size()) < n) line.resize(n);
  if (int(scratch.size()) < n) scratch.resize(n);

  // Axis a has stride n^(d-1-a) in the axis-major layout.
  std::size_t stride = total;
  for (int a = 0; a < d; ++a) {
    stride /= std::size_t(n);
    const std::size_t block = stride * std::size_t(n);
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t off = 0; off < stride; ++off) {
        cplx* p = data + base + off;
        if (stride == 1) {
          transform_with_scratch(p, n, sign, scratch.data());
        } else {
          for (int j = 0; j < n; ++j) line[j] = p[std::size_t(j) * stride];
          transform_with_scratch(line.data(), n, sign, scratch.data());
          for (int j = 0; j < n; ++j) p[std::size_t(j) * stride] = line[j];
        }
      }
    }
  }
}

} // namespace fft
} // namespace lapkit
