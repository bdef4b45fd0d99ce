#include "toa/propagators.hpp"

#include <cmath>
#include <numbers>

#include <fftw3.h>

#include "fftw_lock.hpp"

#include "toa/errors.hpp"

namespace toa {

namespace {
const cd I{0.0, 1.0};
}

LineStep numerov_cn_line(int n, double h, double dt, const PhysicalConstants &c) {
  if (n < 3) throw DomainError("line too short");
  const cd a = I * (c.hbar * dt / (4.0 * c.mass * h * h));
  Tridiagonal lhs = Tridiagonal::constant(static_cast<std::size_t>(n), 1.0 / 12.0 - a, 10.0 / 12.0 + 2.0 * a);
  Tridiagonal rhs = Tridiagonal::constant(static_cast<std::size_t>(n), 1.0 / 12.0 + a, 10.0 / 12.0 - 2.0 * a);
  lhs.pin_row(0);
  lhs.pin_row(static_cast<std::size_t>(n - 1));
  rhs.pin_row(0, 0.0);
  rhs.pin_row(static_cast<std::size_t>(n - 1), 0.0);
  return {std::move(rhs), TridiagonalFactor(lhs)};
}

LineStep robin_cn_line(int n, double h, double dt, cd beta, const PhysicalConstants &c) {
  if (n < 3) throw DomainError("line too short");
  const cd a = I * (c.hbar * dt / (4.0 * c.mass * h * h));
  Tridiagonal lhs = Tridiagonal::constant(static_cast<std::size_t>(n), -a, 1.0 + 2.0 * a);
  Tridiagonal rhs = Tridiagonal::constant(static_cast<std::size_t>(n), a, 1.0 - 2.0 * a);
  lhs.pin_row(0);
  rhs.pin_row(0, 0.0);
  const std::size_t d = static_cast<std::size_t>(n - 1);
  // ghost psi_{d+1} = psi_{d-1} + 2 h beta psi_d
  lhs.lower[d] = -2.0 * a;
  lhs.diag[d] = 1.0 + 2.0 * a - 2.0 * a * h * beta;
  rhs.lower[d] = 2.0 * a;
  rhs.diag[d] = 1.0 - 2.0 * a + 2.0 * a * h * beta;
  return {std::move(rhs), TridiagonalFactor(lhs)};
}

CayleyPropagator::CayleyPropagator(const Grid &g, double dt, const PhysicalConstants &c)
    : shape_{g.nx(), g.ny()}, dt_(dt), has_y_(g.dim() == 2) {
  x_ = numerov_cn_line(g.nx(), g.dx(), dt, c);
  if (has_y_) y_ = numerov_cn_line(g.ny(), g.dy(), dt, c);
}

CayleyPropagator CayleyPropagator::robin(const Grid &g, double dt, cd beta, const PhysicalConstants &c) {
  if (g.dim() != 1) throw DomainError("Robin propagator is 1D only");
  if (g.buffer_nodes() != 0) throw ConfigError("Robin engine needs a grid without buffer", "grid.buffer");
  CayleyPropagator p;
  p.shape_ = {g.nx(), 1};
  p.dt_ = dt;
  p.x_ = robin_cn_line(g.nx(), g.dx(), dt, beta, c);
  return p;
}

void CayleyPropagator::sweep_x(WaveField &w) const { kernels::sweep_x(x_, shape_, w.psi); }

void CayleyPropagator::sweep_y(WaveField &w) const {
  if (has_y_) kernels::sweep_y(y_, shape_, w.psi);
}

void CayleyPropagator::step(WaveField &w) const {
  sweep_x(w);
  sweep_y(w);
  w.t += dt_;
}

void CayleyPropagator::step_serial(WaveField &w) const {
  kernels::serial::sweep_x(x_, shape_, w.psi);
  if (has_y_) kernels::serial::sweep_y(y_, shape_, w.psi);
  w.t += dt_;
}

void spectral_propagate(WaveField &w, const PhysicalConstants &c, double t) {
  const Grid &g = w.grid;
  const int nx = g.nx(), ny = g.ny();
  const std::size_t n = g.size();
  fftw_complex *buf = fftw_alloc_complex(n);
  fftw_plan fwd, bwd;
  std::unique_lock lock(detail::fftw_planner_mutex());
  // FFTW is row-major: the last dimension varies fastest, which is x here
  if (g.dim() == 2) {
    fwd = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_2d(ny, nx, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  } else {
    fwd = fftw_plan_dft_1d(nx, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(nx, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  lock.unlock();
  for (std::size_t k = 0; k < n; ++k) {
    buf[k][0] = w.psi[k].real();
    buf[k][1] = w.psi[k].imag();
  }
  fftw_execute(fwd);
  // periodic length n*h so that the sample spacing is kept
  const double Lx = nx * g.dx(), Ly = ny * g.dy();
  auto wavenumber = [](int i, int m, double L) {
    const int q = i <= m / 2 ? i : i - m;
    return 2.0 * std::numbers::pi * q / L;
  };
  for (int j = 0; j < ny; ++j) {
    const double ky = g.dim() == 2 ? wavenumber(j, ny, Ly) : 0.0;
    for (int i = 0; i < nx; ++i) {
      const double kx = wavenumber(i, nx, Lx);
      const cd ph = std::exp(-I * (c.hbar * (kx * kx + ky * ky) * t / (2.0 * c.mass))) / static_cast<double>(n);
      const std::size_t k = g.index(i, j);
      const cd v = cd(buf[k][0], buf[k][1]) * ph;
      buf[k][0] = v.real();
      buf[k][1] = v.imag();
    }
  }
  fftw_execute(bwd);
  for (std::size_t k = 0; k < n; ++k) w.psi[k] = cd(buf[k][0], buf[k][1]);
  lock.lock();
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  fftw_free(buf);
  w.t += t;
}

}  // namespace toa
