#include "toa/accounting.hpp"

#include <algorithm>
#include <cmath>

#include "toa/errors.hpp"

namespace toa {

namespace {

constexpr double kSlack = 1e-12;

// Integral over [a, b] of the hat function of every node of the axis.
std::vector<double> hat_weights(const Axis &ax, int last, double a, double b) {
  std::vector<double> w(static_cast<std::size_t>(ax.nodes), 0.0);
  const double h = ax.spacing();
  for (int i = 0; i < last; ++i) {
    const double x0 = ax.coord(i), x1 = ax.coord(i + 1);
    const double p = std::max(a, x0), q = std::min(b, x1);
    if (q <= p) continue;
    // linear pieces: phi_i = (x1 - x)/h, phi_{i+1} = (x - x0)/h
    const double len = q - p;
    const double mid = 0.5 * (p + q);
    w[static_cast<std::size_t>(i)] += len * (x1 - mid) / h;
    w[static_cast<std::size_t>(i + 1)] += len * (mid - x0) / h;
  }
  return w;
}

void check_region(const Grid &g, const Box &u) {
  const double tol = kSlack * (1.0 + std::abs(g.x().lo));
  if (u.x_lo > u.x_hi) throw DomainError("region has x_lo > x_hi");
  if (u.x_lo < g.x().lo - tol || u.x_hi > tol) throw DomainError("region leaves the domain along x");
  if (g.dim() == 2) {
    if (u.y_lo > u.y_hi) throw DomainError("region has y_lo > y_hi");
    const double ty = kSlack * (1.0 + std::abs(g.y().lo) + std::abs(g.y().hi));
    if (u.y_lo < g.y().lo - ty || u.y_hi > g.y().hi + ty) throw DomainError("region leaves the domain along y");
  }
}

// Surface probability of the detector nodes inside [y_lo, y_hi].
double surface_part(const EvolutionSnapshot &s, const Grid &g, const Box &u) {
  if (u.x_hi < -kSlack * (1.0 + std::abs(g.x().lo))) return 0.0;
  if (g.dim() == 1) return s.sigma.total();
  const double lo = std::max(u.y_lo, g.y().lo), hi = std::min(u.y_hi, g.y().hi);
  if (hi - lo >= g.y().hi - g.y().lo) return s.sigma.total();
  const auto wy = hat_weights(g.y(), g.ny() - 1, lo, hi);
  double acc = 0.0;
  for (int j = 0; j < g.ny(); ++j) acc += wy[static_cast<std::size_t>(j)] * s.sigma.sigma[static_cast<std::size_t>(j)];
  return acc;
}

void require_arrival_semantics(const DetectorRecord &r) {
  if (!r.ideal())
    throw SemanticsError(std::string("arrival-time quantities are undefined for a ") + engine_name(r.kind) +
                         " record: its detector is not absorbing, so the surface does not carry arrivals");
}

// Spreads `inc`, assumed uniform over [ta, tb], over the bins.
void deposit(std::vector<double> &bins, const std::vector<double> &edges, double ta, double tb, double inc) {
  if (inc == 0.0) return;
  const double t0 = edges.front();
  const double bw = edges.size() > 1 ? edges[1] - edges[0] : 1.0;
  const std::size_t nb = bins.size();
  if (tb <= ta) {
    std::size_t k = std::min<std::size_t>(nb - 1, static_cast<std::size_t>(std::max(0.0, (ta - t0) / bw)));
    bins[k] += inc;
    return;
  }
  auto bin_of = [&](double t) {
    const double q = std::floor((t - t0) / bw);
    return static_cast<std::size_t>(std::clamp(q, 0.0, static_cast<double>(nb - 1)));
  };
  const std::size_t ka = bin_of(ta);
  const std::size_t kb = bin_of(std::nextafter(tb, ta));
  if (ka == kb) {
    bins[ka] += inc;
    return;
  }
  for (std::size_t k = ka; k <= kb; ++k) {
    const double lo = std::max(ta, edges[k]), hi = std::min(tb, edges[k + 1]);
    if (k == kb) {
      // remainder, so the parts add up to inc
      double used = 0.0;
      for (std::size_t q = ka; q < kb; ++q)
        used += inc * (std::min(tb, edges[q + 1]) - std::max(ta, edges[q])) / (tb - ta);
      bins[k] += inc - used;
    } else if (hi > lo) {
      bins[k] += inc * (hi - lo) / (tb - ta);
    }
  }
}

std::vector<double> make_edges(double t0, double horizon, double bw) {
  if (!(bw > 0.0)) throw DomainError("bin width must be positive");
  std::vector<double> e{t0};
  const double span = horizon - t0;
  const auto nb = static_cast<std::size_t>(std::max(1.0, std::ceil(span / bw - 1e-9)));
  for (std::size_t k = 1; k <= nb; ++k) e.push_back(t0 + static_cast<double>(k) * bw);
  return e;
}

double step_start(const DetectorRecord &r, std::size_t n) { return n == 0 ? r.start_time() : r.step_time[n - 1]; }

}  // namespace

double position_measure(const EvolutionSnapshot &s, const Grid &g, const Box &u) {
  check_region(g, u);
  std::vector<double> rho;
  if (s.wave) {
    rho = density_from_wave(*s.wave);
  } else if (s.madelung) {
    rho = s.madelung->rho;
  } else {
    throw DomainError("snapshot carries no field");
  }
  const double xlo = std::max(u.x_lo, g.x().lo), xhi = std::min(u.x_hi, 0.0);
  double vol = 0.0;
  if (xhi > xlo) {
    const auto wx = hat_weights(g.x(), g.detector_column(), xlo, xhi);
    std::vector<double> wy(static_cast<std::size_t>(g.ny()), 1.0);
    if (g.dim() == 2) wy = hat_weights(g.y(), g.ny() - 1, std::max(u.y_lo, g.y().lo), std::min(u.y_hi, g.y().hi));
    for (int j = 0; j < g.ny(); ++j) {
      double row = 0.0;
      for (int i = 0; i <= g.detector_column(); ++i) row += wx[static_cast<std::size_t>(i)] * rho[g.index(i, j)];
      vol += wy[static_cast<std::size_t>(j)] * row;
    }
  }
  return vol + surface_part(s, g, u);
}

double arrival_cumulative(const DetectorRecord &r, double t) {
  require_arrival_semantics(r);
  const double t0 = r.start_time();
  const double tol = 1e-9 * std::max(1.0, r.horizon());
  if (t < t0 - tol || t > r.horizon() + tol) throw DomainError("time outside the record horizon");
  double prev_t = t0, prev_v = r.snapshots.front().surface;
  if (t <= t0) return prev_v;
  const auto it = std::lower_bound(r.step_time.begin(), r.step_time.end(), t);
  if (it == r.step_time.end()) return r.step_surface.empty() ? prev_v : r.step_surface.back();
  const std::size_t n = static_cast<std::size_t>(it - r.step_time.begin());
  if (n > 0) {
    prev_t = r.step_time[n - 1];
    prev_v = r.step_surface[n - 1];
  }
  const double f = (t - prev_t) / (r.step_time[n] - prev_t);
  return prev_v + f * (r.step_surface[n] - prev_v);
}

double arrival_interval(const DetectorRecord &r, double t, double dt) {
  if (!(dt > 0.0)) throw DomainError("interval length must be positive");
  return arrival_cumulative(r, t + dt) - arrival_cumulative(r, t);
}

double ArrivalDistribution::total() const {
  double acc = never;
  for (double m : mass) acc += m;
  return acc;
}

ArrivalDistribution arrival_distribution(const DetectorRecord &r, double bin_width) {
  require_arrival_semantics(r);
  ArrivalDistribution a;
  a.edges = make_edges(r.start_time(), r.horizon(), bin_width);
  a.mass.assign(a.edges.size() - 1, 0.0);
  a.horizon = r.horizon();
  const auto area = r.grid.area_elements();
  for (std::size_t n = 0; n < r.step_dsigma.size(); ++n) {
    double inc = 0.0;
    for (std::size_t j = 0; j < area.size(); ++j) inc += r.step_dsigma[n][j] * area[j];
    deposit(a.mass, a.edges, step_start(r, n), r.step_time[n], inc);
  }
  a.p_inf = r.snapshots.back().surface;
  a.never = 1.0 - a.p_inf;
  a.truncated = r.flags.truncated;
  return a;
}

std::vector<double> DetectorDistribution::time_marginal() const {
  std::vector<double> m(time_edges.size() - 1, 0.0);
  for (const auto &row : mass)
    for (std::size_t k = 0; k < row.size(); ++k) m[k] += row[k];
  return m;
}

std::vector<double> DetectorDistribution::surface_marginal() const {
  std::vector<double> m;
  for (const auto &row : mass) {
    double acc = 0.0;
    for (double v : row) acc += v;
    m.push_back(acc);
  }
  return m;
}

double DetectorDistribution::total() const {
  double acc = never;
  for (double v : surface_marginal()) acc += v;
  return acc;
}

DetectorDistribution detector_distribution(const DetectorRecord &r, int surface_bins, double time_bin_width) {
  require_arrival_semantics(r);
  const Grid &g = r.grid;
  if (surface_bins < 1) throw DomainError("need at least one surface bin");
  if (g.dim() == 1) surface_bins = 1;
  DetectorDistribution d;
  d.time_edges = make_edges(r.start_time(), r.horizon(), time_bin_width);
  const double ylo = g.dim() == 2 ? g.y().lo : 0.0, yhi = g.dim() == 2 ? g.y().hi : 0.0;
  for (int b = 0; b <= surface_bins; ++b) d.surface_edges.push_back(ylo + (yhi - ylo) * b / surface_bins);
  d.mass.assign(static_cast<std::size_t>(surface_bins), std::vector<double>(d.time_edges.size() - 1, 0.0));
  std::vector<std::size_t> bin_of(static_cast<std::size_t>(g.ny()), 0);
  if (g.dim() == 2)
    for (int j = 0; j < g.ny(); ++j) {
      const double q = std::floor((g.y().coord(j) - ylo) / (yhi - ylo) * surface_bins);
      bin_of[static_cast<std::size_t>(j)] = static_cast<std::size_t>(std::clamp(q, 0.0, surface_bins - 1.0));
    }
  const auto area = g.area_elements();
  for (std::size_t n = 0; n < r.step_dsigma.size(); ++n)
    for (std::size_t j = 0; j < area.size(); ++j) {
      const double inc = 0.0 + r.step_dsigma[n][j] * area[j];
      deposit(d.mass[bin_of[j]], d.time_edges, step_start(r, n), r.step_time[n], inc);
    }
  d.never = 1.0 - r.snapshots.back().surface;
  d.truncated = r.flags.truncated;
  return d;
}

double conditional_measure(const EvolutionSnapshot &s, const Grid &g, const Box &u) {
  check_region(g, u);
  const double pd = s.surface;
  if (!(pd > 0.0)) throw UndefinedConditionalError("conditional on the detector needs P_t(D) > 0");
  return surface_part(s, g, u) / pd;
}

std::array<double, 2> conditional_momentum(const DetectorRecord &r, double t) {
  const auto area = r.grid.area_elements();
  const std::size_t nd = area.size();
  std::vector<double> mass(nd, 0.0), px(nd, 0.0), py(nd, 0.0);
  for (std::size_t n = 0; n < r.step_dsigma.size() && r.step_time[n] <= t + 1e-12 * (1.0 + std::abs(t)); ++n)
    for (std::size_t j = 0; j < nd; ++j) {
      const double ds = r.step_dsigma[n][j];
      if (ds <= 0.0) continue;
      mass[j] += ds;
      px[j] += ds * r.step_impact_momentum[n][j];
      py[j] += ds * r.step_impact_momentum_y[n][j];
    }
  double pd = 0.0, ax = 0.0, ay = 0.0;
  for (std::size_t j = 0; j < nd; ++j) {
    if (mass[j] <= 0.0) continue;
    // sigma_j(t) dS_j weights the per-node mean momentum
    const double wgt = mass[j] * area[j];
    pd += wgt;
    ax += wgt * (px[j] / mass[j]);
    ay += wgt * (py[j] / mass[j]);
  }
  if (!(pd > 0.0)) throw UndefinedConditionalError("no probability has reached the detector by t");
  return {ax / pd, ay / pd};
}

SignedDistribution daumer_flux_distribution(const DetectorRecord &r, double bin_width) {
  SignedDistribution s;
  s.edges = make_edges(r.start_time(), r.horizon(), bin_width);
  s.mass.assign(s.edges.size() - 1, 0.0);
  const auto area = r.grid.area_elements();
  for (std::size_t n = 0; n < r.step_flux.size(); ++n) {
    double inc = 0.0;
    for (std::size_t j = 0; j < area.size(); ++j) inc += r.step_flux[n][j] * area[j];
    deposit(s.mass, s.edges, step_start(r, n), r.step_time[n], inc);
  }
  return s;
}

bool Curve::monotone(double tol) const {
  for (std::size_t k = 1; k < value.size(); ++k)
    if (value[k] < value[k - 1] - tol) return false;
  return true;
}

Curve arrival_curve(const DetectorRecord &r) {
  require_arrival_semantics(r);
  Curve c;
  c.t.push_back(r.start_time());
  c.value.push_back(r.snapshots.front().surface);
  for (std::size_t n = 0; n < r.step_time.size(); ++n) {
    c.t.push_back(r.step_time[n]);
    c.value.push_back(r.step_surface[n]);
  }
  return c;
}

Curve daumer_curve(const DetectorRecord &r) {
  const auto area = r.grid.area_elements();
  Curve c;
  c.t.push_back(r.start_time());
  c.value.push_back(0.0);
  double acc = 0.0;
  for (std::size_t n = 0; n < r.step_flux.size(); ++n) {
    for (std::size_t j = 0; j < area.size(); ++j) acc += r.step_flux[n][j] * area[j];
    c.t.push_back(r.step_time[n]);
    c.value.push_back(acc);
  }
  return c;
}

Curve interior_loss_curve(const DetectorRecord &r) {
  Curve c;
  const double p0 = r.snapshots.front().interior;
  c.t.push_back(r.start_time());
  c.value.push_back(0.0);
  for (std::size_t n = 0; n < r.step_time.size(); ++n) {
    c.t.push_back(r.step_time[n]);
    c.value.push_back(p0 - r.step_interior[n]);
  }
  return c;
}

}  // namespace toa
