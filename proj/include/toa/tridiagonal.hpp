#pragma once

#include <complex>
#include <span>
#include <vector>

namespace toa {

using cd = std::complex<double>;

/// Complex tridiagonal matrix stored by diagonals. lower[0] and upper[n-1]
/// are ignored.
struct Tridiagonal {
  std::vector<cd> lower, diag, upper;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower(n), diag(n), upper(n) {}
  /// Constant-coefficient matrix with `off` on both off-diagonals.
  static Tridiagonal constant(std::size_t n, cd off, cd diag);

  std::size_t size() const { return diag.size(); }
  /// out = A * in. `in` and `out` must not alias.
  void apply(std::span<const cd> in, std::span<cd> out) const;
  /// Replace row i by the identity row (Dirichlet node).
  void pin_row(std::size_t i, cd value = 1.0);
};

/// LU factorization (Thomas algorithm, no pivoting) reused across solves.
class TridiagonalFactor {
 public:
  TridiagonalFactor() = default;
  /// Throws NumericalError when a pivot vanishes.
  explicit TridiagonalFactor(const Tridiagonal &a);

  std::size_t size() const { return inv_pivot_.size(); }
  /// Solves A x = b, overwriting b with x.
  void solve_in_place(std::span<cd> b) const;
  /// Same, for a line of the unknowns laid out with a constant stride.
  void solve_strided(cd *b, std::size_t stride) const;

  const std::vector<cd> &lower() const { return lower_; }
  const std::vector<cd> &upper_prime() const { return upper_prime_; }
  const std::vector<cd> &inv_pivot() const { return inv_pivot_; }

 private:
  std::vector<cd> lower_, upper_prime_, inv_pivot_;
};

/// A Cayley-form step (L x_new = R x_old) along one axis.
struct LineStep {
  Tridiagonal rhs;
  TridiagonalFactor lhs;
};

}  // namespace toa
