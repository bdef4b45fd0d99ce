#include "toa/convergence.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "toa/accounting.hpp"
#include "toa/errors.hpp"

namespace toa {

double fit_order(const std::vector<double> &dx, const std::vector<double> &err) {
  const std::size_t n = dx.size();
  if (n < 2 || err.size() != n) throw DomainError("need at least two points for a fit");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(dx[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("degenerate ladder");
  return (n * sxy - sx * sy) / den;
}

std::optional<double> ConvergenceReport::primary_order() const {
  if (metric == "psi_l2") return order_psi_l2;
  if (metric == "arrival_sup") return order_arrival;
  if (metric == "rho_l1") return order_rho_l1;
  return order_rho_l2;
}

namespace {

void run_rung(const RunConfig &cfg, EngineKind kind, const Scenario &sc, double horizon,
              const std::vector<double> &sample_t, const std::vector<double> &oracle_T, LadderRung &rung) {
  EngineConfig ec = cfg.engine;
  ec.kind = kind;
  ec.dt = rung.dt;
  ec.steps = rung.steps;
  ec.stop_threshold = 0.0;  // every rung reaches the same horizon
  ec.snapshot_stride = std::max(1, rung.steps);
  const Grid &g = sc.grid;
  DetectorRecord r = run_evolution(sc.initial, SurfaceDensity::empty(g), ec, sc.constants);
  rung.budget_error = r.flags.max_budget_error;
  const EvolutionSnapshot &last = r.snapshots.back();

  // density on the nodes the engine evolves as free motion
  const bool whole = kind == EngineKind::Reference;
  const int ni = whole ? g.nx() : g.interior_nodes_x();
  std::vector<double> rho;
  if (last.wave) {
    rho = density_from_wave(*last.wave);
  } else if (last.madelung) {
    rho = last.madelung->rho;
  } else {
    throw NumericalError("record carries no final field");
  }
  double l1 = 0, l2 = 0, sup = 0, p2 = 0;
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < ni; ++i) {
      const double x = g.x().coord(i);
      double w = whole ? g.dx() : g.interior_weight_x(i);
      if (whole && (i == 0 || i == g.nx() - 1)) w *= 0.5;
      w *= g.weight_y(j);
      const std::size_t k = g.index(i, j);
      const double e = std::abs(rho[k] - sc.analytic.density(sc.constants, x, horizon));
      l1 += w * e;
      l2 += w * e * e;
      sup = std::max(sup, e);
      if (last.wave) p2 += w * std::norm(last.wave->psi[k] - sc.analytic.psi(sc.constants, x, horizon));
    }
  }
  rung.rho_l1 = l1;
  rung.rho_l2 = std::sqrt(l2);
  rung.rho_sup = sup;
  if (last.wave) rung.psi_l2 = std::sqrt(p2);
  if (r.ideal()) {
    double gap = 0.0;
    for (std::size_t k = 0; k < sample_t.size(); ++k)
      gap = std::max(gap, std::abs(arrival_cumulative(r, sample_t[k]) - oracle_T[k]));
    rung.arrival_sup = gap;
  }
}

std::optional<double> fit_metric(const std::vector<LadderRung> &rungs, double LadderRung::*m) {
  std::vector<double> dx, e;
  for (const auto &r : rungs)
    if (!r.flagged && r.error.empty() && r.*m > 0.0) {
      dx.push_back(r.dx);
      e.push_back(r.*m);
    }
  if (dx.size() < 2) return std::nullopt;
  return fit_order(dx, e);
}

std::optional<double> fit_optional(const std::vector<LadderRung> &rungs, std::optional<double> LadderRung::*m) {
  std::vector<double> dx, e;
  for (const auto &r : rungs)
    if (!r.flagged && r.error.empty() && (r.*m).has_value() && *(r.*m) > 0.0) {
      dx.push_back(r.dx);
      e.push_back(*(r.*m));
    }
  if (dx.size() < 2) return std::nullopt;
  return fit_order(dx, e);
}

}  // namespace

ConvergenceReport convergence_study(const RunConfig &cfg, EngineKind kind, const std::vector<int> &nodes,
                                    const std::vector<double> &dts, int jobs) {
  if (nodes.size() != dts.size())
    throw ConfigError("convergence.nodes and convergence.dt must have the same length", "convergence.dt");
  if (nodes.size() < 2) throw ConfigError("a ladder needs at least two rungs", "convergence.nodes");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (nodes[i] <= nodes[i - 1]) throw ConfigError("ladder is not refining: node counts must increase", "convergence.nodes");
    if (!(dts[i] <= dts[i - 1])) throw ConfigError("ladder is not refining: time steps must not grow", "convergence.dt");
  }
  for (double dt : dts)
    if (!(dt > 0.0)) throw ConfigError("ladder time steps must be positive", "convergence.dt");
  if (kind == EngineKind::Robin)
    throw ConfigError("no oracle for the Robin engine; use reference, ideal-psi or ideal-hydro", "engine.kind");
  if (cfg.dim != 1) throw ConfigError("convergence studies are 1D (the oracle is the x-motion)", "grid.dim");

  ConvergenceReport rep;
  rep.kind = kind;
  rep.horizon = cfg.engine.steps * cfg.engine.dt;
  RunConfig rc = cfg;
  if (kind == EngineKind::IdealHydro) rc.buffer_length = 0.0;

  std::vector<Scenario> scenarios;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    LadderRung rung;
    rung.nodes = nodes[i];
    rung.dt = dts[i];
    rung.steps = static_cast<int>(std::lround(rep.horizon / dts[i]));
    if (std::abs(rung.steps * dts[i] - rep.horizon) > 1e-9 * std::max(1.0, rep.horizon))
      throw ConfigError("ladder time step does not divide the horizon", "convergence.dt");
    scenarios.push_back(build_scenario(rc, nodes[i]));
    rung.dx = scenarios.back().grid.dx();
    rung.resolution = resolution_check(scenarios.back().initial, cfg.min_points);
    rung.flagged = !rung.resolution.ok;
    rep.rungs.push_back(rung);
  }

  // common sample times: the coarsest rung's step ends
  std::vector<double> sample_t;
  std::vector<double> oracle_T;
  if (kind != EngineKind::Reference) {
    const int n0 = rep.rungs.front().steps;
    for (int k = 0; k <= n0; ++k) sample_t.push_back(rep.horizon * k / std::max(1, n0));
    oracle_T = flux_cumulative(scenarios.front().analytic, cfg.constants, 0.0, sample_t);
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rep.rungs.size(); i = next++) {
      try {
        run_rung(rc, kind, scenarios[i], rep.horizon, sample_t, oracle_T, rep.rungs[i]);
      } catch (const std::exception &e) {
        rep.rungs[i].error = e.what();
      }
    }
  };
  const int nt = std::clamp(jobs, 1, static_cast<int>(rep.rungs.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  rep.order_rho_l1 = fit_metric(rep.rungs, &LadderRung::rho_l1);
  rep.order_rho_l2 = fit_metric(rep.rungs, &LadderRung::rho_l2);
  rep.order_rho_sup = fit_metric(rep.rungs, &LadderRung::rho_sup);
  rep.order_psi_l2 = fit_optional(rep.rungs, &LadderRung::psi_l2);
  rep.order_arrival = fit_optional(rep.rungs, &LadderRung::arrival_sup);

  switch (kind) {
    case EngineKind::Reference:
      rep.metric = "psi_l2";
      rep.expected_order = 2.0;
      rep.order_tolerance = 0.2;
      break;
    case EngineKind::IdealPsi:
      rep.metric = "arrival_sup";
      rep.expected_order = 1.8;
      break;
    default:
      rep.metric = "rho_l1";
      rep.expected_order = 1.0;
      break;
  }
  auto primary = [&](const LadderRung &r) -> double {
    if (rep.metric == "psi_l2") return r.psi_l2.value_or(NAN);
    if (rep.metric == "arrival_sup") return r.arrival_sup.value_or(NAN);
    return r.rho_l1;
  };
  double prev = INFINITY;
  for (const auto &r : rep.rungs) {
    if (r.flagged || !r.error.empty()) continue;
    const double e = primary(r);
    if (!std::isfinite(e) || !(e < prev)) rep.non_convergent = true;
    prev = e;
  }
  const auto ord = rep.primary_order();
  if (ord && !rep.non_convergent) {
    rep.pass = rep.order_tolerance > 0.0 ? std::abs(*ord - rep.expected_order) <= rep.order_tolerance
                                         : *ord >= rep.expected_order;
  }
  return rep;
}

}  // namespace toa
