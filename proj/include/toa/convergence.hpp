#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toa/config.hpp"

namespace toa {

struct LadderRung {
  int nodes = 0;  ///< interior nodes along x
  double dx = 0.0;
  double dt = 0.0;
  int steps = 0;
  ResolutionReport resolution;
  bool flagged = false;  ///< fails the resolution guard; excluded from fits
  std::string error;     ///< engine failure on this rung, if any

  // errors against the oracle at the horizon
  double rho_l1 = 0.0, rho_l2 = 0.0, rho_sup = 0.0;
  std::optional<double> psi_l2;       ///< wave engines only
  std::optional<double> arrival_sup;  ///< ideal engines: sup |T - flux integral|
  double budget_error = 0.0;
};

struct ConvergenceReport {
  EngineKind kind = EngineKind::Reference;
  double horizon = 0.0;
  std::vector<LadderRung> rungs;
  /// Fitted log-log slopes against dx (absent with fewer than two usable rungs).
  std::optional<double> order_rho_l1, order_rho_l2, order_rho_sup, order_psi_l2, order_arrival;
  std::string metric;  ///< quantity the verdict is based on
  double expected_order = 2.0;
  double order_tolerance = 0.0;  ///< 0: one-sided (fitted >= expected)
  bool non_convergent = false;   ///< primary error does not decrease along the ladder
  bool pass = false;

  std::optional<double> primary_order() const;
};

/// Runs the configured scenario over the ladder (interior nodes, dt pairs)
/// to the horizon engine.steps * engine.dt. Rungs run on up to `jobs`
/// threads; the report does not depend on `jobs`. Throws ConfigError on a
/// non-refining ladder or an engine without an oracle.
ConvergenceReport convergence_study(const RunConfig &cfg, EngineKind kind, const std::vector<int> &nodes,
                                    const std::vector<double> &dts, int jobs = 1);

/// Least-squares slope of log(err) against log(dx).
double fit_order(const std::vector<double> &dx, const std::vector<double> &err);

}  // namespace toa
