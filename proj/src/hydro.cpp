// Staggered finite-volume realization of the ideal detector in Madelung
// variables. rho lives on the nodes (trapezoid cells, half cells at both
// ends), v on the faces between them.

#include <algorithm>
#include <cmath>

#include "toa/engines.hpp"
#include "toa/errors.hpp"

namespace toa {

namespace {

double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return a > 0.0 ? std::min(a, b) : std::max(a, b);
}

class HydroEngine final : public Engine {
 public:
  HydroEngine(const EngineConfig &cfg, const Grid &g, std::vector<double> rho, std::vector<double> vf,
              const SurfaceDensity &s0, const PhysicalConstants &c, double t)
      : cfg_(cfg), c_(c), g_(g), rho_(std::move(rho)), vf_(std::move(vf)), sigma_(s0), t_(t) {
    if (g.buffer_nodes() != 0) throw ConfigError("hydro engine needs grid.buffer = 0", "grid.buffer");
    n_ = g.nx();
    if (n_ < 8) throw ConfigError("hydro engine needs at least 8 nodes", "grid.nodes");
    h_ = g.dx();
    w_.assign(static_cast<std::size_t>(n_), h_);
    w_.front() = w_.back() = 0.5 * h_;
    double mx = 0.0;
    for (double r : rho_) {
      if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("hydro engine needs a finite non-negative density");
      mx = std::max(mx, r);
    }
    if (!(mx > 0.0)) throw DomainError("hydro engine needs a nonzero density");
    eps_ = cfg.mask_threshold * mx;
    initially_unmasked_.assign(rho_.size(), 0);
    {
      const auto [a, b] = support(rho_);
      for (std::size_t i = a; i <= b; ++i) initially_unmasked_[i] = 1;
      support0_ = static_cast<int>(b - a + 1);
    }
    if (cfg.detector == DetectorMode::Walled) throw ConfigError("hydro engine has no walled mode", "detector.mode");
    if (vf_.size() + 1 != rho_.size()) throw DomainError("hydro engine needs one velocity per face");
    extrapolate(rho_, vf_);
    sigma_.t = t_;
  }

  StepOutcome step() override {
    const double dt = cfg_.dt;
    // faces inside the masked tails carry extrapolated velocities only
    double vmax = 0.0;
    const auto [sa, sb] = support(rho_);
    for (std::size_t f = sa; f < sb; ++f) vmax = std::max(vmax, std::abs(vf_[f]));
    if (vmax * dt / h_ > cfg_.cfl_safety)
      throw CflError("hydro step violates the CFL bound: max v=" + std::to_string(vmax), cfg_.cfl_safety * h_ / vmax);

    const std::size_t n = rho_.size();
    std::vector<double> a1(n), b1(n - 1), a2(n), b2(n - 1), r1(n), v1(n - 1);
    double f1s = 0, f2s = 0;
    const double f1 = rhs(rho_, vf_, a1, b1, f1s);
    for (std::size_t i = 0; i < n; ++i) r1[i] = rho_[i] + dt * a1[i];
    for (std::size_t k = 0; k + 1 < n; ++k) v1[k] = vf_[k] + dt * b1[k];
    extrapolate(r1, v1);
    const double f2 = rhs(r1, v1, a2, b2, f2s);
    for (std::size_t i = 0; i < n; ++i) rho_[i] += 0.5 * dt * (a1[i] + a2[i]);
    for (std::size_t k = 0; k + 1 < n; ++k) vf_[k] += 0.5 * dt * (b1[k] + b2[k]);
    extrapolate(rho_, vf_);

    for (double r : rho_)
      if (!std::isfinite(r)) throw NumericalError("hydro density became non-finite");
    for (double v : vf_)
      if (!std::isfinite(v)) throw NumericalError("hydro velocity became non-finite");

    StepOutcome o;
    const double ds = 0.5 * dt * (f1 + f2);
    o.dsigma = {ds};
    o.flux = {0.5 * dt * (f1s + f2s)};
    o.boundary_density = {rho_.back()};
    o.impact_momentum = {c_.mass * detector_velocity(vf_)};
    sigma_.sigma[0] += ds;
    t_ += dt;
    sigma_.t = t_;

    int lost = 0;
    const auto [a, b] = support(rho_);
    for (std::size_t i = 0; i < n; ++i)
      if (initially_unmasked_[i] && (i < a || i > b)) ++lost;
    o.masked = lost;
    if (lost > 0.2 * support0_)
      throw ValidityError("hydro mask grew beyond 20% of the initial support");
    return o;
  }

  double time() const override { return t_; }

  double interior_probability() const override {
    double acc = 0.0;
    for (std::size_t i = 0; i < rho_.size(); ++i) acc += w_[i] * rho_[i];
    return acc;
  }

  const SurfaceDensity &surface() const override { return sigma_; }

  double far_wall_probability(int cells) const override {
    double acc = 0.0;
    for (int i = 0; i < std::min(cells, n_); ++i) acc += h_ * rho_[static_cast<std::size_t>(i)];
    return acc;
  }

  std::shared_ptr<const MadelungState> madelung() const override {
    auto s = std::make_shared<MadelungState>();
    s->grid = g_;
    s->t = t_;
    s->rho = rho_;
    const std::size_t n = rho_.size();
    s->v.x.resize(n);
    s->v.x[0] = vf_[0];
    for (std::size_t i = 1; i + 1 < n; ++i) s->v.x[i] = 0.5 * (vf_[i - 1] + vf_[i]);
    s->v.x[n - 1] = detector_velocity(vf_);
    std::vector<double> clipped(rho_);
    for (double &r : clipped) r = std::max(r, 0.0);
    const MaskedField u = stochastic_velocity_from_density(g_, clipped, c_, eps_);
    s->u = u.value;
    s->mask.assign(n, 1);
    const auto [a, b] = support(rho_);
    for (std::size_t i = a; i <= b; ++i) s->mask[i] = u.mask[i];
    for (std::size_t i = 0; i < n; ++i)
      if (s->mask[i]) s->u.x[i] = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (s->mask[i]) s->v.x[i] = 0.0;
    return s;
  }

  bool carries_detector() const override { return true; }

 private:
  // Resolved support: the contiguous run of cells with rho >= eps around the
  // density maximum. Outside it the scheme only carries unresolved tails.
  std::pair<std::size_t, std::size_t> support(const std::vector<double> &rho) const {
    const std::size_t n = rho.size();
    const std::size_t m = static_cast<std::size_t>(std::max_element(rho.begin(), rho.end()) - rho.begin());
    if (!(rho[m] >= eps_)) throw ValidityError("hydro state has no resolved support");
    std::size_t a = m, b = m;
    while (a > 1 && rho[a - 1] >= eps_) --a;
    while (b + 1 < n && rho[b + 1] >= eps_) ++b;
    if (b < a + 2) throw ValidityError("hydro support shrank below three cells: [" + std::to_string(a) + "," + std::to_string(b) + "] max " + std::to_string(rho[m]) + " at " + std::to_string(m));
    return {a, b};
  }

  double detector_velocity(const std::vector<double> &v) const {
    const std::size_t m = v.size();
    return 1.5 * v[m - 1] - 0.5 * v[m - 2];
  }

  // Time derivatives of (rho, v) and the gated outflow rate at the detector.
  // `signed_out` receives the ungated rate.
  double rhs(const std::vector<double> &rho, const std::vector<double> &v, std::vector<double> &drho,
             std::vector<double> &dv, double &signed_out) const {
    const std::size_t n = rho.size();
    const double k = c_.hbar / (2.0 * c_.mass);
    // ln rho with a quadratic ghost beyond the detector (u linear there)
    std::vector<double> lr(n + 1);
    for (std::size_t i = 0; i < n; ++i) lr[i] = std::log(std::max(rho[i], 1e-300));
    lr[n] = 3.0 * lr[n - 1] - 3.0 * lr[n - 2] + lr[n - 3];
    std::vector<double> vv(v);
    vv.push_back(2.0 * v[n - 2] - v[n - 3]);
    std::vector<double> u(n);
    for (std::size_t f = 0; f < n; ++f) u[f] = k * (lr[f + 1] - lr[f]) / h_;

    std::vector<double> pi(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      const double ux = (u[i] - u[i - 1]) / h_;
      const double u2 = 0.5 * (u[i] * u[i] + u[i - 1] * u[i - 1]);
      const double v2 = 0.5 * (vv[i] * vv[i] + vv[i - 1] * vv[i - 1]);
      pi[i] = 0.5 * u2 + k * ux - 0.5 * v2;
    }
    const auto [a, b] = support(rho);
    std::vector<char> mask(n, 1);
    for (std::size_t i = a; i <= b; ++i) mask[i] = 0;
    for (std::size_t i = 0; i < a; ++i) pi[i] = pi[a] + (double(i) - double(a)) * (pi[a + 1] - pi[a]);
    for (std::size_t i = b + 1; i < n; ++i) pi[i] = pi[b] + (double(i) - double(b)) * (pi[b] - pi[b - 1]);
    for (std::size_t f = 0; f + 1 < n; ++f)
      dv[f] = (mask[f] && mask[f + 1]) ? 0.0 : (pi[f + 1] - pi[f]) / h_;

    std::vector<double> sl(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) sl[i] = minmod(rho[i] - rho[i - 1], rho[i + 1] - rho[i]);
    std::fill(drho.begin(), drho.end(), 0.0);
    for (std::size_t f = 0; f + 1 < n; ++f) {
      // unresolved tails are not transported among themselves
      if (mask[f] && mask[f + 1]) continue;
      const double F = v[f] >= 0.0 ? v[f] * (rho[f] + 0.5 * sl[f]) : v[f] * (rho[f + 1] - 0.5 * sl[f + 1]);
      drho[f] -= F;
      drho[f + 1] += F;
    }
    const double out = rho[n - 1] * detector_velocity(v);
    signed_out = out;
    const double gated = std::max(out, 0.0);
    drho[n - 1] -= gated;
    for (std::size_t i = 0; i < n; ++i) drho[i] /= w_[i];
    return gated;
  }

  // v on faces next to masked cells is continued linearly from the
  // resolved faces.
  void extrapolate(const std::vector<double> &rho, std::vector<double> &v) const {
    const std::size_t nf = v.size();
    const auto [ca, cb] = support(rho);
    // faces with both neighbours resolved
    const std::size_t a = ca, b = cb - 1;
    for (std::size_t f = 0; f < a; ++f) v[f] = v[a] + (double(f) - double(a)) * (v[a + 1] - v[a]);
    for (std::size_t f = b + 1; f < nf; ++f) v[f] = v[b] + (double(f) - double(b)) * (v[b] - v[b - 1]);
  }

  EngineConfig cfg_;
  PhysicalConstants c_;
  Grid g_;
  std::vector<double> rho_, vf_, w_;
  SurfaceDensity sigma_;
  double t_ = 0.0;
  int n_ = 0;
  double h_ = 0.0;
  double eps_ = 0.0;
  int support0_ = 0;
  std::vector<char> initially_unmasked_;
};

}  // namespace

std::unique_ptr<Engine> make_hydro_engine(const EngineConfig &cfg, const Grid &g, std::vector<double> rho,
                                          std::vector<double> vf, const SurfaceDensity &s0,
                                          const PhysicalConstants &c, double t) {
  if (!c.is_free()) throw ConfigError("time-stepping engines support V = 0 only", "physics.potential");
  return std::make_unique<HydroEngine>(cfg, g, std::move(rho), std::move(vf), s0, c, t);
}

}  // namespace toa
