#pragma once

// Data-parallel inner loops of the propagators and field transforms.
//
// Every kernel exists twice: an OpenMP version in toa::kernels and a plain
// serial version in toa::kernels::serial. Both perform the same floating
// point operations in the same order per output element, so their results
// agree bit for bit; the serial copies are kept as the reference for tests
// and for the benchmark.

#include <complex>
#include <span>
#include <vector>

#include "toa/tridiagonal.hpp"

namespace toa::kernels {

/// Layout of a field: x fastest, nx * ny entries.
struct Shape {
  int nx = 0;
  int ny = 1;
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
};

enum class Axis { X, Y };

/// Apply `step` to every x-line (row) of psi.
void sweep_x(const LineStep &step, Shape s, std::span<cd> psi);
/// Apply `step` to every y-line (column) of psi.
void sweep_y(const LineStep &step, Shape s, std::span<cd> psi);
/// rho = |psi|^2.
void density(std::span<const cd> psi, std::span<double> rho);
/// Per row j: sum_i wx[i] |psi(i,j)|^2 (rows are not scaled by dy).
void row_probability(Shape s, std::span<const double> wx, std::span<const cd> psi,
                     std::span<double> out);
/// im = Im(conj(psi) d_axis psi), re = Re(conj(psi) d_axis psi). Centered
/// second-order differences inside, one-sided second-order at the ends.
void gradient_products(Shape s, Axis axis, double h, std::span<const cd> psi,
                       std::span<double> im, std::span<double> re);
/// Centered/one-sided derivative of a real field along an axis.
void gradient(Shape s, Axis axis, double h, std::span<const double> f, std::span<double> out);

namespace serial {
void sweep_x(const LineStep &step, Shape s, std::span<cd> psi);
void sweep_y(const LineStep &step, Shape s, std::span<cd> psi);
void density(std::span<const cd> psi, std::span<double> rho);
void row_probability(Shape s, std::span<const double> wx, std::span<const cd> psi,
                     std::span<double> out);
void gradient_products(Shape s, Axis axis, double h, std::span<const cd> psi,
                       std::span<double> im, std::span<double> re);
void gradient(Shape s, Axis axis, double h, std::span<const double> f, std::span<double> out);
}  // namespace serial

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace toa::kernels
