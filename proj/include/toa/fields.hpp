#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "toa/grid.hpp"
#include "toa/tridiagonal.hpp"

namespace toa {

/// Cartesian components sampled on the grid; `y` is empty in 1D.
struct VectorField {
  std::vector<double> x;
  std::vector<double> y;
};

/// Samples of the wave function on every grid node (interior and buffer).
struct WaveField {
  Grid grid;
  std::vector<cd> psi;
  double t = 0.0;

  WaveField() = default;
  explicit WaveField(Grid g, double time = 0.0) : grid(std::move(g)), psi(grid.size()), t(time) {}
};

/// Hydrodynamic variables. mask[k] != 0 marks nodes where rho is below the
/// node threshold and v, u are undefined (stored as 0).
struct MadelungState {
  Grid grid;
  std::vector<double> rho;
  VectorField v;
  VectorField u;
  std::vector<std::uint8_t> mask;
  double t = 0.0;

  std::size_t masked_count() const;
};

/// Probability per unit area on the detector nodes.
struct SurfaceDensity {
  std::vector<double> sigma;
  std::vector<double> area;
  double t = 0.0;

  static SurfaceDensity empty(const Grid &g, double t = 0.0);
  double total() const;
};

/// A velocity-like field with its node mask.
struct MaskedField {
  VectorField value;
  std::vector<std::uint8_t> mask;
};

/// Scalar field with per-node definedness (undefined entries hold NaN).
struct ScalarWithMask {
  std::vector<double> value;
  std::vector<std::uint8_t> undefined;
};

/// rho = |psi|^2. Throws NumericalError on a non-finite amplitude.
std::vector<double> density_from_wave(const WaveField &psi);

/// j = (hbar/m) Im(conj(psi) grad psi).
VectorField current_from_wave(const WaveField &psi, const PhysicalConstants &c);

/// Absolute node threshold used when none is given: 1e-12 * max rho.
double default_node_threshold(const std::vector<double> &rho);

/// (rho, v, u) from psi. Nodes with rho < eps_node are masked.
MadelungState velocity_fields_from_wave(const WaveField &psi, const PhysicalConstants &c,
                                        std::optional<double> eps_node = std::nullopt);

/// u = (hbar/2m) grad(rho)/rho on nodes with rho >= eps_node.
MaskedField stochastic_velocity_from_density(const Grid &g, const std::vector<double> &rho,
                                             const PhysicalConstants &c,
                                             std::optional<double> eps_node = std::nullopt);

/// E = (m/2) v^2 + V - (m/2) u^2 - (hbar/2) div u. Entries touching a masked
/// node are undefined.
ScalarWithMask energy_field(const MadelungState &s, const PhysicalConstants &c);

/// Trapezoid integral of rho over the interior (buffer excluded).
double interior_probability(const Grid &g, const std::vector<double> &rho);
double interior_probability(const WaveField &psi);
/// Interior integral plus surface probability.
double total_probability(const Grid &g, const std::vector<double> &rho, const SurfaceDensity &s);

/// n.j at every detector node, using a one-sided second-order stencil into
/// the interior. Positive means outflow into the detector.
std::vector<double> boundary_flux(const WaveField &psi, const PhysicalConstants &c);
/// rho * v_x at the detector nodes of a hydrodynamic state.
std::vector<double> boundary_flux(const MadelungState &s, const PhysicalConstants &c);

/// Discrete curl dv_y/dx - dv_x/dy (2D). Entries whose stencil touches a
/// masked node are undefined.
ScalarWithMask curl(const Grid &g, const VectorField &v, const std::vector<std::uint8_t> &mask);

}  // namespace toa
