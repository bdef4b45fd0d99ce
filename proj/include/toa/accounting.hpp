#pragma once

#include <array>
#include <vector>

#include "toa/engines.hpp"

namespace toa {

/// Axis-aligned box; the y bounds are ignored in 1D.
struct Box {
  double x_lo = 0.0, x_hi = 0.0;
  double y_lo = 0.0, y_hi = 0.0;
};

/// P_t(U): integral of the linear interpolant of rho over U and the interior
/// plus the surface probability on U and the detector face.
double position_measure(const EvolutionSnapshot &s, const Grid &g, const Box &u);

/// T([0, t]) = P_t(D), linear between steps. Throws SemanticsError for
/// records of engines without an absorbing detector.
double arrival_cumulative(const DetectorRecord &r, double t);
/// T([t, t + dt]).
double arrival_interval(const DetectorRecord &r, double t, double dt);

struct ArrivalDistribution {
  std::vector<double> edges;  ///< bin edges, size = bins + 1
  std::vector<double> mass;
  double never = 0.0;  ///< mass of the never-arrived event
  double horizon = 0.0;
  double p_inf = 0.0;  ///< surface probability at the horizon
  /// Interior probability at the horizon exceeds the stop threshold; `never`
  /// is then only an upper bound.
  bool truncated = false;

  double total() const;
};

ArrivalDistribution arrival_distribution(const DetectorRecord &r, double bin_width);

struct DetectorDistribution {
  std::vector<double> time_edges;
  std::vector<double> surface_edges;  ///< lateral bin edges (one bin in 1D)
  /// mass[surface_bin][time_bin]
  std::vector<std::vector<double>> mass;
  double never = 0.0;
  bool truncated = false;

  std::vector<double> time_marginal() const;
  std::vector<double> surface_marginal() const;
  double total() const;
};

/// `surface_bins` equal lateral bins over the detector edge.
DetectorDistribution detector_distribution(const DetectorRecord &r, int surface_bins, double time_bin_width);

/// P_t(U | D).
double conditional_measure(const EvolutionSnapshot &s, const Grid &g, const Box &u);

/// E_t(p | D) at time t: impact momenta recorded at transfer, weighted by the
/// surface density they produced. Components (normal, lateral).
std::array<double, 2> conditional_momentum(const DetectorRecord &r, double t);

/// Signed bins of the flux through the detector plane without the gate.
struct SignedDistribution {
  std::vector<double> edges;
  std::vector<double> mass;
};
SignedDistribution daumer_flux_distribution(const DetectorRecord &r, double bin_width);

/// Cumulative curves at the step times (first entry is the start time).
struct Curve {
  std::vector<double> t;
  std::vector<double> value;
  /// No decrease larger than tol between consecutive entries.
  bool monotone(double tol = 0.0) const;
};
Curve arrival_curve(const DetectorRecord &r);
Curve daumer_curve(const DetectorRecord &r);
/// 1 - interior probability.
Curve interior_loss_curve(const DetectorRecord &r);

}  // namespace toa
