#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernels_common.hpp"

namespace toa::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void sweep_x(const LineStep &step, Shape s, std::span<cd> psi) {
#pragma omp parallel
  {
    detail::FlushDenormals ftz;
    std::vector<cd> tmp(static_cast<std::size_t>(s.nx));
#pragma omp for schedule(static)
    for (int j = 0; j < s.ny; ++j)
      detail::line_step(step, psi.data() + static_cast<std::size_t>(j) * s.nx, 1,
                        static_cast<std::size_t>(s.nx), tmp.data());
  }
}

void sweep_y(const LineStep &step, Shape s, std::span<cd> psi) {
#pragma omp parallel
  {
    detail::FlushDenormals ftz;
    std::vector<cd> tmp(static_cast<std::size_t>(s.ny));
#pragma omp for schedule(static)
    for (int i = 0; i < s.nx; ++i)
      detail::line_step(step, psi.data() + i, static_cast<std::size_t>(s.nx),
                        static_cast<std::size_t>(s.ny), tmp.data());
  }
}

void density(std::span<const cd> psi, std::span<double> rho) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(psi.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) rho[k] = std::norm(psi[k]);
}

void row_probability(Shape s, std::span<const double> wx, std::span<const cd> psi,
                     std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < s.ny; ++j)
    out[static_cast<std::size_t>(j)] =
        detail::row_sum(psi.data() + static_cast<std::size_t>(j) * s.nx, wx);
}

void gradient_products(Shape s, Axis axis, double h, std::span<const cd> psi,
                       std::span<double> im, std::span<double> re) {
  const std::size_t nx = static_cast<std::size_t>(s.nx);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < s.ny; ++j)
    for (int i = 0; i < s.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(i) + nx * j;
      const cd d = axis == Axis::X
                       ? detail::derivative(psi.data() + nx * j, 1, i, nx, h)
                       : detail::derivative(psi.data() + i, nx, j, static_cast<std::size_t>(s.ny), h);
      const cd p = std::conj(psi[k]) * d;
      im[k] = p.imag();
      re[k] = p.real();
    }
}

void gradient(Shape s, Axis axis, double h, std::span<const double> f, std::span<double> out) {
  const std::size_t nx = static_cast<std::size_t>(s.nx);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < s.ny; ++j)
    for (int i = 0; i < s.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(i) + nx * j;
      out[k] = axis == Axis::X
                   ? detail::derivative(f.data() + nx * j, 1, i, nx, h)
                   : detail::derivative(f.data() + i, nx, j, static_cast<std::size_t>(s.ny), h);
    }
}

}  // namespace toa::kernels
