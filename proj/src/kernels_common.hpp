#pragma once

// Per-line bodies shared by the serial and OpenMP kernels.

#include <complex>
#include <span>

#include "toa/kernels.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#endif

namespace toa::kernels::detail {

// Flush-to-zero / denormals-are-zero for the lifetime of the guard. Far
// Gaussian tails and the decaying Green's function of the implicit solve
// otherwise leave long stretches of subnormal numbers that slow the sweeps
// down by an order of magnitude.
class FlushDenormals {
 public:
  FlushDenormals() {
#if defined(__SSE__)
    saved_ = _mm_getcsr();
    _mm_setcsr(saved_ | 0x8040);
#endif
  }
  ~FlushDenormals() {
#if defined(__SSE__)
    _mm_setcsr(saved_);
#endif
  }
  FlushDenormals(const FlushDenormals &) = delete;
  FlushDenormals &operator=(const FlushDenormals &) = delete;

 private:
  unsigned saved_ = 0;
};

// x_new = L^{-1} R x_old on one line. The product with R is fused into the
// forward elimination; tmp holds the eliminated values.
inline void line_step(const LineStep &step, cd *line, std::size_t stride, std::size_t n, cd *tmp) {
  const Tridiagonal &r = step.rhs;
  const cd *ll = step.lhs.lower().data();
  const cd *up = step.lhs.upper_prime().data();
  const cd *inv = step.lhs.inv_pivot().data();
  if (n == 1) {
    line[0] = r.diag[0] * line[0] * inv[0];
    return;
  }
  tmp[0] = (r.diag[0] * line[0] + r.upper[0] * line[stride]) * inv[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const cd b = r.lower[i] * line[(i - 1) * stride] + r.diag[i] * line[i * stride] +
                 r.upper[i] * line[(i + 1) * stride];
    tmp[i] = (b - ll[i] * tmp[i - 1]) * inv[i];
  }
  {
    const std::size_t i = n - 1;
    const cd b = r.lower[i] * line[(i - 1) * stride] + r.diag[i] * line[i * stride];
    tmp[i] = (b - ll[i] * tmp[i - 1]) * inv[i];
  }
  line[(n - 1) * stride] = tmp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    tmp[i] -= up[i] * tmp[i + 1];
    line[i * stride] = tmp[i];
  }
}

template <typename T>
inline T derivative(const T *f, std::size_t stride, std::size_t i, std::size_t n, double h) {
  if (i == 0) return (-3.0 * f[0] + 4.0 * f[stride] - f[2 * stride]) / (2.0 * h);
  if (i == n - 1)
    return (3.0 * f[(n - 1) * stride] - 4.0 * f[(n - 2) * stride] + f[(n - 3) * stride]) / (2.0 * h);
  return (f[(i + 1) * stride] - f[(i - 1) * stride]) / (2.0 * h);
}

inline double row_sum(const cd *row, std::span<const double> wx) {
  double acc = 0.0;
  for (std::size_t i = 0; i < wx.size(); ++i)
    if (wx[i] != 0.0) acc += wx[i] * std::norm(row[i]);
  return acc;
}

}  // namespace toa::kernels::detail
