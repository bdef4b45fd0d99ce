#include "toa/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fftw3.h>

#include "fftw_lock.hpp"

namespace toa {

namespace {

using std::numbers::pi;
const cd I{0.0, 1.0};

cd alpha(const GaussianParams &p, const PhysicalConstants &c, double t) {
  const double tau = t + p.t0;
  return 1.0 + I * (c.hbar * tau / (2.0 * c.mass * p.s * p.s));
}

double gk(auto f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-13);
}

}  // namespace

void GaussianParams::validate() const {
  if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("gaussian width must be positive", "gaussian.s");
  if (!std::isfinite(x0) || !std::isfinite(k0) || !std::isfinite(t0))
    throw ConfigError("gaussian parameters must be finite", "gaussian");
}

cd analytic_gaussian(const GaussianParams &p, const PhysicalConstants &c, double x, double t) {
  const double tau = t + p.t0;
  const cd a = alpha(p, c, t);
  const double y = x - p.x0;
  const cd expo = (-y * y / (4.0 * p.s * p.s) + I * p.k0 * y -
                   I * (c.hbar * p.k0 * p.k0 * tau / (2.0 * c.mass))) /
                  a;
  return std::pow(2.0 * pi * p.s * p.s, -0.25) / std::sqrt(a) * std::exp(expo);
}

cd analytic_gaussian_dx(const GaussianParams &p, const PhysicalConstants &c, double x, double t) {
  const cd a = alpha(p, c, t);
  return analytic_gaussian(p, c, x, t) * (-(x - p.x0) / (2.0 * p.s * p.s) + I * p.k0) / a;
}

double analytic_density(const GaussianParams &p, const PhysicalConstants &c, double x, double t) {
  return std::norm(analytic_gaussian(p, c, x, t));
}

double analytic_flux(const GaussianParams &p, const PhysicalConstants &c, double x, double t) {
  const cd psi = analytic_gaussian(p, c, x, t);
  return c.hbar / c.mass * (std::conj(psi) * analytic_gaussian_dx(p, c, x, t)).imag();
}

double analytic_variance(const GaussianParams &p, const PhysicalConstants &c, double t) {
  const double b = c.hbar * (t + p.t0) / (2.0 * c.mass * p.s);
  return p.s * p.s + b * b;
}

double analytic_mass_right_of(const GaussianParams &p, const PhysicalConstants &c, double a, double t) {
  const double mu = p.x0 + c.hbar * p.k0 * (t + p.t0) / c.mass;
  const double sd = std::sqrt(analytic_variance(p, c, t));
  return 0.5 * std::erfc((a - mu) / (std::sqrt(2.0) * sd));
}

Superposition::Superposition(std::vector<GaussianParams> parts, std::vector<cd> weights)
    : parts_(std::move(parts)), weights_(std::move(weights)) {
  if (parts_.empty() || parts_.size() != weights_.size())
    throw DomainError("superposition needs one weight per part");
  for (auto &p : parts_) p.validate();
  const double n = norm_sq(PhysicalConstants{});
  if (!(n > 0.0)) throw DomainError("superposition has zero norm");
  for (auto &w : weights_) w /= std::sqrt(n);
}

Superposition Superposition::single(const GaussianParams &p) { return Superposition({p}, {1.0}); }

cd Superposition::psi(const PhysicalConstants &c, double x, double t) const {
  cd acc = 0.0;
  for (std::size_t i = 0; i < parts_.size(); ++i) acc += weights_[i] * analytic_gaussian(parts_[i], c, x, t);
  return acc;
}

cd Superposition::psi_dx(const PhysicalConstants &c, double x, double t) const {
  cd acc = 0.0;
  for (std::size_t i = 0; i < parts_.size(); ++i)
    acc += weights_[i] * analytic_gaussian_dx(parts_[i], c, x, t);
  return acc;
}

double Superposition::density(const PhysicalConstants &c, double x, double t) const {
  return std::norm(psi(c, x, t));
}

double Superposition::flux(const PhysicalConstants &c, double x, double t) const {
  return c.hbar / c.mass * (std::conj(psi(c, x, t)) * psi_dx(c, x, t)).imag();
}

// <g_a|g_b> at t = 0 (time independent). Closed form for Gaussians with
// possibly different centres, widths and wavenumbers; t0 is ignored
// because all parts of one superposition share it.
double Superposition::norm_sq(const PhysicalConstants &) const {
  cd acc = 0.0;
  for (std::size_t a = 0; a < parts_.size(); ++a)
    for (std::size_t b = 0; b < parts_.size(); ++b) {
      const auto &p = parts_[a], &q = parts_[b];
      // integrand conj(g_p) g_q = N exp(-A x^2 + B x + C)
      const double A = 1.0 / (4 * p.s * p.s) + 1.0 / (4 * q.s * q.s);
      const cd B = p.x0 / (2 * p.s * p.s) + q.x0 / (2 * q.s * q.s) + I * (q.k0 - p.k0);
      const cd C = -p.x0 * p.x0 / (4 * p.s * p.s) - q.x0 * q.x0 / (4 * q.s * q.s) +
                   I * (p.k0 * p.x0 - q.k0 * q.x0);
      const double N = std::pow(2 * pi * p.s * p.s, -0.25) * std::pow(2 * pi * q.s * q.s, -0.25);
      const cd ov = N * std::sqrt(pi / A) * std::exp(B * B / (4 * A) + C);
      acc += std::conj(weights_[a]) * weights_[b] * ov;
    }
  return acc.real();
}

WaveField sample(const Superposition &s, const PhysicalConstants &c, const Grid &g, double t,
                 const GaussianParams *lateral) {
  if (g.dim() == 2 && lateral == nullptr) throw DomainError("2D sampling needs a lateral profile");
  WaveField w(g, t);
  std::vector<cd> gx(static_cast<std::size_t>(g.nx()));
  for (int i = 0; i < g.nx(); ++i) gx[static_cast<std::size_t>(i)] = s.psi(c, g.x().coord(i), t);
  for (int j = 0; j < g.ny(); ++j) {
    const cd gy = g.dim() == 2 ? analytic_gaussian(*lateral, c, g.y().coord(j), t) : cd{1.0};
    for (int i = 0; i < g.nx(); ++i) w.psi[g.index(i, j)] = gx[static_cast<std::size_t>(i)] * gy;
  }
  return w;
}

double tail_mass_outside(const Superposition &s, const PhysicalConstants &c, double x_far, double t) {
  auto rho = [&](double x) { return s.density(c, x, t); };
  double reach = 0.0;
  for (const auto &p : s.parts())
    reach = std::max(reach, std::abs(p.x0) + 40.0 * std::sqrt(analytic_variance(p, c, t)) +
                                std::abs(c.hbar * p.k0 * (t + p.t0) / c.mass));
  double m = 0.0;
  for (double a = 0.0; a < reach; a += 1.0) m += gk(rho, a, a + 1.0);
  for (double b = x_far; b > -reach + x_far; b -= 1.0) m += gk(rho, b - 1.0, b);
  return m;
}

double flux_integral(const Superposition &s, const PhysicalConstants &c, double x, double ta, double tb) {
  if (tb <= ta) return 0.0;
  // sub-intervals short against the shortest packet transit time
  double vmax = 0.0, smin = 1e300;
  for (const auto &p : s.parts()) {
    vmax = std::max(vmax, std::abs(c.hbar * p.k0 / c.mass) + c.hbar / (c.mass * p.s));
    smin = std::min(smin, p.s);
  }
  const double piece = std::max(0.25 * smin / std::max(vmax, 1e-12), (tb - ta) / 4096.0);
  auto f = [&](double t) { return s.flux(c, x, t); };
  double acc = 0.0;
  for (double a = ta; a < tb; a += piece) acc += gk(f, a, std::min(a + piece, tb));
  return acc;
}

std::vector<double> flux_cumulative(const Superposition &s, const PhysicalConstants &c, double x,
                                    const std::vector<double> &times) {
  double vmax = 0.0, smin = 1e300;
  for (const auto &p : s.parts()) {
    vmax = std::max(vmax, std::abs(c.hbar * p.k0 / c.mass) + c.hbar / (c.mass * p.s));
    smin = std::min(smin, p.s);
  }
  const double piece = 0.25 * smin / std::max(vmax, 1e-12);
  auto f = [&](double t) { return s.flux(c, x, t); };
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double a = times[k - 1], b = times[k];
    if (!(b >= a)) throw DomainError("flux_cumulative needs non-decreasing times");
    const int n = std::max(1, static_cast<int>(std::ceil((b - a) / piece)));
    double acc = 0.0;
    for (int q = 0; q < n; ++q)
      acc += boost::math::quadrature::gauss<double, 15>::integrate(f, a + (b - a) * q / n, a + (b - a) * (q + 1) / n);
    out[k] = out[k - 1] + acc;
  }
  return out;
}

bool BackflowState::verify(const PhysicalConstants &c) const {
  const double f = state.flux(c, witness.x, witness.t);
  return f < 0.0 && f < -1e-6 * witness.max_abs_flux;
}

namespace {

struct ScanResult {
  bool found = false;
  BackflowWitness w;
};

ScanResult scan_times(const Superposition &sp, const PhysicalConstants &c, double k1, double k2, double s,
                      double x0) {
  const double vmin = c.hbar * std::min(k1, k2) / c.mass;
  const double t_max = 3.0 * (std::abs(x0) + 6.0 * s) / vmin;
  const double dw = c.hbar * std::abs(k2 * k2 - k1 * k1) / (2.0 * c.mass);
  double dt = 0.05 * s / (c.hbar * std::max(k1, k2) / c.mass);
  if (dw > 0.0) dt = std::min(dt, 2.0 * pi / dw / 64.0);
  ScanResult r;
  double fmin = 0.0, tmin = 0.0, fmax = 0.0;
  for (double t = 0.0; t <= t_max; t += dt) {
    const double f = sp.flux(c, 0.0, t);
    fmax = std::max(fmax, std::abs(f));
    if (f < fmin) {
      fmin = f;
      tmin = t;
    }
  }
  if (!(fmin < -1e-6 * fmax)) return r;
  // golden-section refinement around the sampled minimum
  double a = std::max(0.0, tmin - dt), b = tmin + dt;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double m1 = b - g * (b - a), m2 = a + g * (b - a);
    if (sp.flux(c, 0.0, m1) < sp.flux(c, 0.0, m2))
      b = m2;
    else
      a = m1;
  }
  const double t = 0.5 * (a + b);
  const double f = std::min(sp.flux(c, 0.0, t), fmin);
  r.w = BackflowWitness{0.0, f == fmin ? tmin : t, f, fmax};
  r.found = r.w.flux < -1e-6 * fmax;
  return r;
}

}  // namespace

BackflowState make_backflow_state(double k1, double k2, std::pair<double, double> weights, double s,
                                  double x0, const PhysicalConstants &c) {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw ConfigError("backflow wavenumbers must be positive", "backflow.k1");
  if (!(s > 0.0)) throw ConfigError("backflow width must be positive", "backflow.s");
  if (!(weights.first != 0.0)) throw ConfigError("backflow weight of the first part must be nonzero", "backflow.w1");
  const double lo = std::min(k1, k2), hi = std::max(k1, k2);

  struct Candidate { double ratio, width; };
  std::vector<Candidate> box;
  box.push_back({weights.second / weights.first, s});
  std::vector<double> ratios;
  for (int i = 1; i <= 9; ++i) ratios.push_back(lo / hi + (1.0 - lo / hi) * i / 10.0);
  if (lo == hi) ratios = {0.25, 0.5, 0.75, 1.0};
  const double mults[] = {1, 2, 4, 6, 8, 10};
  for (double m : mults)
    for (double r : ratios) box.push_back({r, m * s});

  for (const auto &cand : box) {
    const double x0e = std::min(x0, -7.2 * cand.width);
    GaussianParams a{x0e, cand.width, k1, 0.0}, b{x0e, cand.width, k2, 0.0};
    // the ratio multiplies the larger wavenumber
    const cd w1 = k1 <= k2 ? 1.0 : cand.ratio, w2 = k1 <= k2 ? cand.ratio : 1.0;
    Superposition sp({a, b}, {w1, w2});
    const ScanResult r = scan_times(sp, c, k1, k2, cand.width, x0e);
    if (r.found) {
      BackflowState st{sp, r.w, k1, k2, cand.ratio, cand.width, x0e, {}};
      if (!st.verify(c)) continue;
      return st;
    }
  }
  std::ostringstream os;
  os << "no backflow found for k1=" << k1 << " k2=" << k2 << "; scanned amplitude ratios ["
     << ratios.front() << ", " << ratios.back() << "] (plus " << weights.second / weights.first
     << "), widths " << s << "x{1,2,4,6,8,10}, centres min(x0, -7.2 s)";
  throw NoBackflowError(os.str());
}

ResolutionReport resolution_check(const WaveField &psi, double min_points, double tail) {
  const Grid &g = psi.grid;
  const int n = g.nx();
  // spectrum of each row along x, accumulated
  std::vector<double> power(static_cast<std::size_t>(n), 0.0);
  fftw_complex *buf = fftw_alloc_complex(static_cast<std::size_t>(n));
  std::unique_lock lock(detail::fftw_planner_mutex());
  fftw_plan plan = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  lock.unlock();
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < n; ++i) {
      const cd v = psi.psi[g.index(i, j)];
      buf[i][0] = v.real();
      buf[i][1] = v.imag();
    }
    fftw_execute(plan);
    for (int i = 0; i < n; ++i) power[static_cast<std::size_t>(i)] += buf[i][0] * buf[i][0] + buf[i][1] * buf[i][1];
  }
  lock.lock();
  fftw_destroy_plan(plan);
  lock.unlock();
  fftw_free(buf);

  const double h = g.dx();
  // order bins by |k|
  std::vector<std::pair<double, double>> bins;
  for (int i = 0; i < n; ++i) {
    const int m = i <= n / 2 ? i : i - n;
    bins.push_back({std::abs(2.0 * pi * m / (n * h)), power[static_cast<std::size_t>(i)]});
  }
  std::sort(bins.begin(), bins.end());
  double total = 0.0;
  for (auto &b : bins) total += b.second;
  ResolutionReport r;
  if (total == 0.0) {
    r.ok = true;
    r.points_per_wavelength = INFINITY;
    return r;
  }
  double above = total;
  for (auto &b : bins) {
    above -= b.second;
    r.k_max = b.first;
    if (above <= tail * total) break;
  }
  r.points_per_wavelength = r.k_max > 0.0 ? 2.0 * pi / (r.k_max * h) : INFINITY;
  r.ok = r.points_per_wavelength >= min_points;
  return r;
}

}  // namespace toa
