#include "toa/engines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "toa/errors.hpp"
#include "toa/kernels.hpp"

namespace toa {

std::unique_ptr<Engine> make_hydro_engine(const EngineConfig &, const Grid &, std::vector<double>,
                                          std::vector<double>, const SurfaceDensity &, const PhysicalConstants &,
                                          double);

const char *engine_name(EngineKind k) {
  switch (k) {
    case EngineKind::Reference: return "reference";
    case EngineKind::Robin: return "robin";
    case EngineKind::IdealPsi: return "ideal-psi";
    case EngineKind::IdealHydro: return "ideal-hydro";
  }
  return "?";
}

EngineKind parse_engine_kind(const std::string &s) {
  if (s == "reference") return EngineKind::Reference;
  if (s == "robin") return EngineKind::Robin;
  if (s == "ideal-psi" || s == "ideal-detector-psi") return EngineKind::IdealPsi;
  if (s == "ideal-hydro" || s == "ideal-detector-hydro") return EngineKind::IdealHydro;
  throw ConfigError("unknown engine kind '" + s + "'", "engine.kind");
}

void EngineConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive", "engine.dt");
  if (steps < 0) throw ConfigError("step count must be non-negative", "engine.steps");
  if (kind == EngineKind::Robin && beta.imag() < 0.0)
    throw ConfigError("Robin parameter needs Im beta >= 0 (a negative imaginary part injects probability)",
                      "robin.beta_im");
  if (!std::isfinite(beta.real()) || !std::isfinite(beta.imag()))
    throw ConfigError("Robin parameter must be finite", "robin.beta_re");
  if (window < 1) throw ConfigError("absorption window must be at least one cell", "engine.window");
  if (!(cfl_safety > 0.0)) throw ConfigError("CFL safety factor must be positive", "engine.cfl_safety");
  if (!(conservation_tol > 0.0)) throw ConfigError("conservation tolerance must be positive", "engine.tolerance");
  if (!(stop_threshold >= 0.0)) throw ConfigError("stop threshold must be non-negative", "engine.stop_threshold");
  if (snapshot_stride < 1) throw ConfigError("snapshot stride must be at least 1", "engine.snapshot_stride");
  if (field_stride < 0) throw ConfigError("field stride must be non-negative", "engine.field_stride");
  if (far_wall_cells < 1) throw ConfigError("far-wall monitor needs at least one cell", "engine.far_wall_cells");
  if (!(mask_threshold > 0.0)) throw ConfigError("mask threshold must be positive", "engine.mask_threshold");
}

namespace {

// row-probability differences below this fraction of the largest row are round-off
constexpr double kRoundoffFloor = 1e-13;

bool exchanges(const EngineConfig &cfg) {
  return (cfg.kind == EngineKind::IdealPsi || cfg.kind == EngineKind::IdealHydro) &&
         cfg.detector == DetectorMode::Open;
}

// Reference, Robin and the psi realization of the ideal detector share the
// transport; they differ in the matrix (Robin) and in the exchange.
class PsiEngine final : public Engine {
 public:
  PsiEngine(const EngineConfig &cfg, const WaveField &init, const SurfaceDensity &s0, const PhysicalConstants &c)
      : cfg_(cfg), c_(c), w_(init), sigma_(s0) {
    const Grid &g = w_.grid;
    if (!c.is_free()) throw ConfigError("time-stepping engines support V = 0 only", "physics.potential");
    if (cfg.kind == EngineKind::Robin) {
      prop_ = CayleyPropagator::robin(g, cfg.dt, cfg.beta, c);
    } else {
      if (cfg.detector == DetectorMode::Walled && g.buffer_nodes() != 0)
        throw ConfigError("a walled detector needs grid.buffer = 0", "grid.buffer");
      prop_ = CayleyPropagator(g, cfg.dt, c);
    }
    // the buffer has zero weight, so the rows stop at the detector column
    wx_.resize(static_cast<std::size_t>(g.interior_nodes_x()));
    for (int i = 0; i < g.interior_nodes_x(); ++i) wx_[static_cast<std::size_t>(i)] = g.interior_weight_x(i);
    rows_before_.resize(static_cast<std::size_t>(g.ny()));
    rows_after_.resize(static_cast<std::size_t>(g.ny()));
    if (sigma_.sigma.size() != static_cast<std::size_t>(g.ny())) throw DomainError("surface density does not match grid");
    if (cfg.detector == DetectorMode::Walled)
      for (double s : sigma_.sigma)
        if (s != 0.0) throw ConfigError("a walled detector starts with sigma = 0", "detector.mode");
  }

  StepOutcome step() override {
    const Grid &g = w_.grid;
    const kernels::Shape sh{g.nx(), g.ny()};
    const int d = g.detector_column();
    const int ny = g.ny();
    const auto nyz = static_cast<std::size_t>(ny);
    StepOutcome out;
    out.flux.assign(nyz, 0.0);
    out.dsigma.assign(nyz, 0.0);
    out.boundary_density.assign(nyz, 0.0);
    out.impact_momentum.assign(nyz, 0.0);
    out.impact_momentum_y.assign(nyz, 0.0);

    kernels::row_probability(sh, wx_, w_.psi, rows_before_);
    // old values around the detector column for mid-step diagnostics
    const bool right = d + 1 < g.nx();
    old_.resize(3 * nyz);
    for (int j = 0; j < ny; ++j) {
      old_[3 * j] = w_.psi[g.index(d - 1, j)];
      old_[3 * j + 1] = w_.psi[g.index(d, j)];
      old_[3 * j + 2] = right ? w_.psi[g.index(d + 1, j)] : cd{};
    }

    prop_.sweep_x(w_);
    kernels::row_probability(sh, wx_, w_.psi, rows_after_);

    const bool open = exchanges(cfg_);
    const double h = g.dx();
    for (int j = 0; j < ny; ++j) {
      const auto jz = static_cast<std::size_t>(j);
      const double phi = rows_before_[jz] - rows_after_[jz];
      out.flux[jz] = phi;
      const cd pd = 0.5 * (old_[3 * j + 1] + w_.psi[g.index(d, j)]);
      out.boundary_density[jz] = 0.5 * (std::norm(old_[3 * j + 1]) + std::norm(w_.psi[g.index(d, j)]));
      const cd pm = 0.5 * (old_[3 * j] + w_.psi[g.index(d - 1, j)]);
      cd dpsi;
      if (right) {
        const cd pp = 0.5 * (old_[3 * j + 2] + w_.psi[g.index(d + 1, j)]);
        dpsi = (pp - pm) / (2.0 * h);
      } else {
        dpsi = (pd - pm) / h;
      }
      const double rd = std::norm(pd);
      out.impact_momentum[jz] = rd > 0.0 ? c_.hbar * (std::conj(pd) * dpsi).imag() / rd : 0.0;
      if (g.dim() == 2 && j > 0 && j + 1 < ny && rd > 0.0) {
        const cd up = 0.5 * (old_[3 * (j + 1) + 1] + w_.psi[g.index(d, j + 1)]);
        const cd dn = 0.5 * (old_[3 * (j - 1) + 1] + w_.psi[g.index(d, j - 1)]);
        out.impact_momentum_y[jz] = c_.hbar * (std::conj(pd) * (up - dn) / (2.0 * g.dy())).imag() / rd;
      }
    }
    // the y-sweep spreads absolute round-off across rows, so the floor
    // follows the largest row
    const double noise = kRoundoffFloor * *std::max_element(rows_before_.begin(), rows_before_.end());
    for (int j = 0; open && j < ny; ++j) {
      const auto jz = static_cast<std::size_t>(j);
      const double phi = out.flux[jz];
      if (phi > 0.0) {
        out.dsigma[jz] = phi;
        sigma_.sigma[jz] += phi;
      } else if (phi < 0.0) {
        // reentry: remove what came back through the plane. Below the
        // round-off of the row totals it is not counted.
        const int widened = remove_near_detector(j, -phi);
        if (-phi > noise) {
          ++out.blocked_reentry;
          out.clamp_events += widened;
        }
      }
    }

    prop_.sweep_y(w_);
    w_.t += cfg_.dt;
    sigma_.t = w_.t;
    return out;
  }

  double time() const override { return w_.t; }

  double interior_probability() const override {
    const Grid &g = w_.grid;
    std::vector<double> rows(static_cast<std::size_t>(g.ny()));
    kernels::row_probability({g.nx(), g.ny()}, wx_, w_.psi, rows);
    double acc = 0.0;
    for (int j = 0; j < g.ny(); ++j) acc += g.weight_y(j) * rows[static_cast<std::size_t>(j)];
    return acc;
  }

  const SurfaceDensity &surface() const override { return sigma_; }

  double far_wall_probability(int cells) const override {
    const Grid &g = w_.grid;
    const double dA = g.dx() * g.dy();
    auto strip = [&](int i0, int i1, int j0, int j1) {
      double acc = 0.0;
      for (int j = j0; j < j1; ++j)
        for (int i = i0; i < i1; ++i) acc += std::norm(w_.psi[g.index(i, j)]);
      return acc * dA;
    };
    const int nx = g.nx(), ny = g.ny();
    const int cx = std::min(cells, nx), cy = std::min(cells, ny);
    double p = strip(0, cx, 0, ny);
    if (g.buffer_nodes() > 0) p = std::max(p, strip(nx - cx, nx, 0, ny));
    if (g.dim() == 2) {
      p = std::max(p, strip(0, nx, 0, cy));
      p = std::max(p, strip(0, nx, ny - cy, ny));
    }
    return p;
  }

  std::shared_ptr<const WaveField> wave() const override { return std::make_shared<const WaveField>(w_); }
  bool carries_detector() const override { return exchanges(cfg_); }

 private:
  // Scales the amplitude on the cells next to the detector so that the row
  // loses exactly `amount`. Returns 1 if the window had to be widened.
  int remove_near_detector(int j, double amount) {
    const Grid &g = w_.grid;
    const int d = g.detector_column();
    int width = cfg_.window;
    int clamp = 0;
    for (;;) {
      const int i0 = std::max(0, d - width + 1);
      double pw = 0.0;
      for (int i = i0; i <= d; ++i) pw += wx_[static_cast<std::size_t>(i)] * std::norm(w_.psi[g.index(i, j)]);
      if (pw >= amount || i0 == 0) {
        const double f = pw > amount ? std::sqrt(1.0 - amount / pw) : 0.0;
        for (int i = i0; i <= d; ++i) w_.psi[g.index(i, j)] *= f;
        return clamp;
      }
      clamp = 1;
      width *= 2;
    }
  }

  EngineConfig cfg_;
  PhysicalConstants c_;
  WaveField w_;
  SurfaceDensity sigma_;
  CayleyPropagator prop_;
  std::vector<double> wx_, rows_before_, rows_after_;
  std::vector<cd> old_;
};

std::shared_ptr<const WaveField> maybe(const Engine &e, bool keep) { return keep ? e.wave() : nullptr; }

EvolutionSnapshot take_snapshot(const Engine &e, std::vector<double> flux, bool keep_fields) {
  EvolutionSnapshot s;
  s.t = e.time();
  s.interior = e.interior_probability();
  s.sigma = e.surface();
  s.surface = s.sigma.total();
  s.flux_since_last = std::move(flux);
  s.wave = maybe(e, keep_fields);
  if (keep_fields) s.madelung = e.madelung();
  return s;
}

}  // namespace

std::unique_ptr<Engine> make_engine(const EngineConfig &cfg, const WaveField &initial,
                                    const SurfaceDensity &sigma0, const PhysicalConstants &c) {
  cfg.validate();
  c.validate();
  if (cfg.kind == EngineKind::IdealHydro) {
    const Grid &g = initial.grid;
    if (g.dim() != 1) throw ConfigError("hydro engine is 1D only", "grid.dim");
    const int n = g.nx();
    std::vector<double> rho(static_cast<std::size_t>(n)), vf(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) rho[static_cast<std::size_t>(i)] = std::norm(initial.psi[static_cast<std::size_t>(i)]);
    const double h = g.dx();
    for (int i = 0; i + 1 < n; ++i) {
      const cd a = initial.psi[static_cast<std::size_t>(i)], b = initial.psi[static_cast<std::size_t>(i + 1)];
      const cd pf = 0.5 * (a + b), dpf = (b - a) / h;
      const double r = std::norm(pf);
      vf[static_cast<std::size_t>(i)] = r > 0.0 ? c.hbar / c.mass * (std::conj(pf) * dpf).imag() / r : 0.0;
    }
    return make_hydro_engine(cfg, g, std::move(rho), std::move(vf), sigma0, c, initial.t);
  }
  return std::make_unique<PsiEngine>(cfg, initial, sigma0, c);
}

std::unique_ptr<Engine> make_engine(const EngineConfig &cfg, const MadelungState &initial,
                                    const SurfaceDensity &sigma0, const PhysicalConstants &c) {
  cfg.validate();
  c.validate();
  if (cfg.kind != EngineKind::IdealHydro) throw ConfigError("a Madelung initial state needs the hydro engine", "engine.kind");
  const Grid &g = initial.grid;
  if (g.dim() != 1) throw ConfigError("hydro engine is 1D only", "grid.dim");
  const std::size_t n = static_cast<std::size_t>(g.nx());
  std::vector<double> vf(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) vf[i] = 0.5 * (initial.v.x[i] + initial.v.x[i + 1]);
  return make_hydro_engine(cfg, g, initial.rho, std::move(vf), sigma0, c, initial.t);
}

DetectorRecord run_engine(Engine &e, const EngineConfig &cfg, const Grid &g, const PhysicalConstants &c) {
  DetectorRecord r;
  r.kind = cfg.kind;
  r.mode = cfg.detector;
  r.grid = g;
  r.constants = c;
  r.dt = cfg.dt;
  r.stop_threshold = cfg.stop_threshold;
  const std::size_t nd = static_cast<std::size_t>(g.detector_nodes());
  r.impact_momentum_sum.assign(nd, 0.0);
  r.impact_mass.assign(nd, 0.0);

  r.snapshots.push_back(take_snapshot(e, std::vector<double>(nd, 0.0), true));
  const bool ideal_open = exchanges(cfg);
  double prev_total = r.snapshots.front().interior + r.snapshots.front().surface;
  double prev_interior = r.snapshots.front().interior;
  std::vector<double> prev_sigma = e.surface().sigma;
  std::vector<double> flux_acc(nd, 0.0);
  r.flags.far_wall_max = e.far_wall_probability(cfg.far_wall_cells);
  r.flags.max_budget_error = ideal_open ? std::abs(prev_total - 1.0) : 0.0;
  int since_snapshot = 0, snapshot_count = 0;

  for (int n = 0; n < cfg.steps; ++n) {
    if (prev_interior < cfg.stop_threshold) {
      r.flags.stopped_early = true;
      break;
    }
    StepOutcome o = e.step();
    ++r.flags.steps_taken;
    const double interior = e.interior_probability();
    const SurfaceDensity &sd = e.surface();
    const double surface = sd.total();
    if (!std::isfinite(interior)) throw NumericalError("interior probability became non-finite");

    if (ideal_open) {
      const double total = interior + surface;
      r.flags.max_budget_error = std::max(r.flags.max_budget_error, std::abs(total - 1.0));
      if (std::abs(total - prev_total) > cfg.conservation_tol) {
        std::ostringstream os;
        os.precision(17);
        os << "probability budget violated at t=" << e.time() << ": interior+surface moved by "
           << total - prev_total << " in one step";
        throw ValidityError(os.str());
      }
      prev_total = total;
      for (std::size_t j = 0; j < nd; ++j)
        if (sd.sigma[j] < prev_sigma[j] || o.dsigma[j] < 0.0) ++r.flags.sigma_violations;
      prev_sigma = sd.sigma;
    }
    if (cfg.kind == EngineKind::Robin && interior > prev_interior + cfg.conservation_tol) {
      ++r.flags.robin_decay_violations;
      throw ValidityError("Robin engine gained interior probability at t=" + std::to_string(e.time()));
    }
    prev_interior = interior;

    r.flags.clamp_events += o.clamp_events;
    if (o.blocked_reentry > 0) ++r.flags.blocked_reentry_steps;
    r.flags.mask_events += o.masked;
    r.flags.far_wall_max = std::max(r.flags.far_wall_max, e.far_wall_probability(cfg.far_wall_cells));

    for (std::size_t j = 0; j < nd; ++j) {
      flux_acc[j] += o.flux[j];
      if (o.dsigma[j] > 0.0) {
        r.impact_mass[j] += o.dsigma[j];
        r.impact_momentum_sum[j] += o.dsigma[j] * o.impact_momentum[j];
      }
    }
    r.step_time.push_back(e.time());
    r.step_interior.push_back(interior);
    r.step_surface.push_back(surface);
    r.step_flux.push_back(std::move(o.flux));
    r.step_dsigma.push_back(std::move(o.dsigma));
    r.step_boundary_density.push_back(std::move(o.boundary_density));
    r.step_impact_momentum.push_back(std::move(o.impact_momentum));
    r.step_impact_momentum_y.push_back(o.impact_momentum_y.empty() ? std::vector<double>(nd, 0.0)
                                                                    : std::move(o.impact_momentum_y));

    ++since_snapshot;
    const bool last = n + 1 == cfg.steps || interior < cfg.stop_threshold;
    if (since_snapshot == cfg.snapshot_stride || last) {
      ++snapshot_count;
      const bool keep = last || (cfg.field_stride > 0 && snapshot_count % cfg.field_stride == 0);
      r.snapshots.push_back(take_snapshot(e, flux_acc, keep));
      std::fill(flux_acc.begin(), flux_acc.end(), 0.0);
      since_snapshot = 0;
    }
  }
  if (since_snapshot > 0) r.snapshots.push_back(take_snapshot(e, flux_acc, true));

  r.flags.far_wall_contaminated = r.flags.far_wall_max >= cfg.far_wall_limit;
  r.flags.truncated = r.snapshots.back().interior > cfg.stop_threshold;
  r.flags.clamp_warning = r.flags.steps_taken > 0 && r.flags.clamp_events > 0.01 * r.flags.steps_taken;
  return r;
}

DetectorRecord run_evolution(const WaveField &initial, const SurfaceDensity &sigma0, const EngineConfig &cfg,
                             const PhysicalConstants &c) {
  auto e = make_engine(cfg, initial, sigma0, c);
  DetectorRecord r = run_engine(*e, cfg, initial.grid, c);
  // probability that starts beyond the detector plane
  double buf = 0.0;
  const Grid &g = initial.grid;
  for (int j = 0; j < g.ny(); ++j)
    for (int i = g.detector_column() + 1; i < g.nx(); ++i) buf += std::norm(initial.psi[g.index(i, j)]) * g.dx() * g.weight_y(j);
  r.flags.tail_mass = buf;
  return r;
}

DetectorRecord run_evolution(const MadelungState &initial, const SurfaceDensity &sigma0, const EngineConfig &cfg,
                             const PhysicalConstants &c) {
  auto e = make_engine(cfg, initial, sigma0, c);
  return run_engine(*e, cfg, initial.grid, c);
}

WaveField step_reference(const WaveField &psi, double dt, const PhysicalConstants &c) {
  WaveField w = psi;
  if (dt == 0.0) return w;
  CayleyPropagator(psi.grid, dt, c).step(w);
  return w;
}

WaveField step_robin(const WaveField &psi, double dt, cd beta, const PhysicalConstants &c) {
  if (beta.imag() < 0.0) throw ConfigError("Robin parameter needs Im beta >= 0", "robin.beta_im");
  WaveField w = psi;
  if (dt == 0.0) return w;
  CayleyPropagator::robin(psi.grid, dt, beta, c).step(w);
  return w;
}

std::pair<WaveField, SurfaceDensity> step_ideal_detector_psi(const WaveField &psi, const SurfaceDensity &sigma,
                                                            double dt, const PhysicalConstants &c, int window) {
  EngineConfig cfg;
  cfg.kind = EngineKind::IdealPsi;
  cfg.dt = dt;
  cfg.window = window;
  cfg.validate();
  PsiEngine e(cfg, psi, sigma, c);
  e.step();
  return {*e.wave(), e.surface()};
}

std::pair<MadelungState, SurfaceDensity> step_ideal_detector_hydro(const MadelungState &s,
                                                                  const SurfaceDensity &sigma, double dt,
                                                                  const PhysicalConstants &c) {
  EngineConfig cfg;
  cfg.kind = EngineKind::IdealHydro;
  cfg.dt = dt;
  auto e = make_engine(cfg, s, sigma, c);
  e->step();
  return {*e->madelung(), e->surface()};
}

}  // namespace toa
