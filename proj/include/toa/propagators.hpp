#pragma once

#include "toa/fields.hpp"
#include "toa/kernels.hpp"

namespace toa {

/// Crank-Nicolson line step for -(hbar^2/2m) d^2/dx^2 with the compact
/// fourth-order (Numerov) Laplacian. Nodes 0 and n-1 are homogeneous
/// Dirichlet walls. Exactly unitary on the remaining nodes.
LineStep numerov_cn_line(int n, double h, double dt, const PhysicalConstants &c);

/// Second-order Crank-Nicolson line step with the Robin condition
/// d psi/dx = beta psi folded into the last node through a ghost node.
/// Node 0 is a Dirichlet wall.
LineStep robin_cn_line(int n, double h, double dt, cd beta, const PhysicalConstants &c);

/// Alternating-direction Cayley product on a grid (x sweep, then y sweep).
/// The two axis operators commute on a rectangle with Dirichlet walls.
class CayleyPropagator {
 public:
  CayleyPropagator() = default;
  CayleyPropagator(const Grid &g, double dt, const PhysicalConstants &c);
  /// Robin variant (1D only): the detector node carries d psi/dx = beta psi.
  static CayleyPropagator robin(const Grid &g, double dt, cd beta, const PhysicalConstants &c);

  void sweep_x(WaveField &w) const;
  void sweep_y(WaveField &w) const;
  void step(WaveField &w) const;
  void step_serial(WaveField &w) const;
  double dt() const { return dt_; }

 private:
  kernels::Shape shape_;
  LineStep x_, y_;
  double dt_ = 0.0;
  bool has_y_ = false;
};

/// Exact free propagation over time t on the periodic extension of the grid
/// (FFT split-step with V = 0). Used only as an oracle.
void spectral_propagate(WaveField &w, const PhysicalConstants &c, double t);

}  // namespace toa
