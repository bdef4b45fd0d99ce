#include "toa/tridiagonal.hpp"

#include <cmath>
#include <limits>

#include "toa/errors.hpp"

namespace toa {

Tridiagonal Tridiagonal::constant(std::size_t n, cd off, cd d) {
  Tridiagonal t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.lower[i] = off;
    t.diag[i] = d;
    t.upper[i] = off;
  }
  if (n > 0) {
    t.lower[0] = 0.0;
    t.upper[n - 1] = 0.0;
  }
  return t;
}

void Tridiagonal::apply(std::span<const cd> in, std::span<cd> out) const {
  const std::size_t n = size();
  if (n == 0) return;
  if (n == 1) {
    out[0] = diag[0] * in[0];
    return;
  }
  out[0] = diag[0] * in[0] + upper[0] * in[1];
  for (std::size_t i = 1; i + 1 < n; ++i)
    out[i] = lower[i] * in[i - 1] + diag[i] * in[i] + upper[i] * in[i + 1];
  out[n - 1] = lower[n - 1] * in[n - 2] + diag[n - 1] * in[n - 1];
}

void Tridiagonal::pin_row(std::size_t i, cd value) {
  lower[i] = 0.0;
  upper[i] = 0.0;
  diag[i] = value;
}

TridiagonalFactor::TridiagonalFactor(const Tridiagonal &a)
    : lower_(a.lower), upper_prime_(a.size()), inv_pivot_(a.size()) {
  const std::size_t n = a.size();
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a.diag[i]));
  const double tiny = 64.0 * std::numeric_limits<double>::epsilon() * (scale > 0.0 ? scale : 1.0);
  cd prev_upper_prime = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cd pivot = a.diag[i] - (i > 0 ? a.lower[i] * prev_upper_prime : cd{0.0});
    if (!(std::abs(pivot) > tiny) || !std::isfinite(std::abs(pivot)))
      throw NumericalError("tridiagonal factorization broke down at row " + std::to_string(i));
    inv_pivot_[i] = 1.0 / pivot;
    upper_prime_[i] = (i + 1 < n ? a.upper[i] : cd{0.0}) * inv_pivot_[i];
    prev_upper_prime = upper_prime_[i];
  }
}

void TridiagonalFactor::solve_in_place(std::span<cd> b) const { solve_strided(b.data(), 1); }

void TridiagonalFactor::solve_strided(cd *b, std::size_t stride) const {
  const std::size_t n = inv_pivot_.size();
  if (n == 0) return;
  b[0] *= inv_pivot_[0];
  for (std::size_t i = 1; i < n; ++i)
    b[i * stride] = (b[i * stride] - lower_[i] * b[(i - 1) * stride]) * inv_pivot_[i];
  for (std::size_t i = n - 1; i-- > 0;) b[i * stride] -= upper_prime_[i] * b[(i + 1) * stride];
}

}  // namespace toa
