#include "toa/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toa/errors.hpp"
#include "toa/kernels.hpp"

namespace toa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

kernels::Shape shape_of(const Grid &g) { return {g.nx(), g.ny()}; }

void check_finite(const std::vector<cd> &psi) {
  for (std::size_t k = 0; k < psi.size(); ++k)
    if (!std::isfinite(psi[k].real()) || !std::isfinite(psi[k].imag()))
      throw NumericalError("invalid field: non-finite amplitude at node " + std::to_string(k));
}

// Mask neighbourhood test for stencils of a node along both axes.
bool stencil_masked(const Grid &g, const std::vector<std::uint8_t> &mask, int i, int j) {
  auto m = [&](int a, int b) { return mask[g.index(a, b)] != 0; };
  if (m(i, j)) return true;
  const int nx = g.nx(), ny = g.ny();
  const int ilo = i == 0 ? 0 : (i == nx - 1 ? nx - 3 : i - 1);
  for (int a = ilo; a < ilo + 3; ++a)
    if (m(a, j)) return true;
  if (g.dim() == 2) {
    const int jlo = j == 0 ? 0 : (j == ny - 1 ? ny - 3 : j - 1);
    for (int b = jlo; b < jlo + 3; ++b)
      if (m(i, b)) return true;
  }
  return false;
}

}  // namespace

std::size_t MadelungState::masked_count() const {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto b) { return b != 0; }));
}

SurfaceDensity SurfaceDensity::empty(const Grid &g, double t) {
  SurfaceDensity s;
  s.sigma.assign(static_cast<std::size_t>(g.detector_nodes()), 0.0);
  s.area = g.area_elements();
  s.t = t;
  return s;
}

double SurfaceDensity::total() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < sigma.size(); ++j) acc += sigma[j] * area[j];
  return acc;
}

std::vector<double> density_from_wave(const WaveField &psi) {
  check_finite(psi.psi);
  std::vector<double> rho(psi.psi.size());
  kernels::density(psi.psi, rho);
  return rho;
}

VectorField current_from_wave(const WaveField &psi, const PhysicalConstants &c) {
  check_finite(psi.psi);
  const Grid &g = psi.grid;
  const auto s = shape_of(g);
  const double f = c.hbar / c.mass;
  VectorField j;
  std::vector<double> re(g.size());
  j.x.resize(g.size());
  kernels::gradient_products(s, kernels::Axis::X, g.dx(), psi.psi, j.x, re);
  for (double &a : j.x) a *= f;
  if (g.dim() == 2) {
    j.y.resize(g.size());
    kernels::gradient_products(s, kernels::Axis::Y, g.dy(), psi.psi, j.y, re);
    for (double &a : j.y) a *= f;
  }
  return j;
}

double default_node_threshold(const std::vector<double> &rho) {
  double mx = 0.0;
  for (double r : rho) mx = std::max(mx, r);
  // an all-zero field masks everything
  return mx > 0.0 ? 1e-12 * mx : std::numeric_limits<double>::min();
}

MadelungState velocity_fields_from_wave(const WaveField &psi, const PhysicalConstants &c,
                                        std::optional<double> eps_node) {
  const Grid &g = psi.grid;
  MadelungState st;
  st.grid = g;
  st.t = psi.t;
  st.rho = density_from_wave(psi);
  const double eps = eps_node.value_or(default_node_threshold(st.rho));
  if (!(eps > 0.0)) throw DomainError("node threshold must be positive");
  const auto s = shape_of(g);
  const double f = c.hbar / c.mass;
  const std::size_t n = g.size();
  st.mask.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) st.mask[k] = st.rho[k] < eps ? 1 : 0;

  auto fill = [&](kernels::Axis ax, double h, std::vector<double> &v, std::vector<double> &u) {
    std::vector<double> im(n), re(n);
    kernels::gradient_products(s, ax, h, psi.psi, im, re);
    v.assign(n, 0.0);
    u.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (st.mask[k]) continue;
      v[k] = f * im[k] / st.rho[k];
      u[k] = f * re[k] / st.rho[k];
    }
  };
  fill(kernels::Axis::X, g.dx(), st.v.x, st.u.x);
  if (g.dim() == 2) fill(kernels::Axis::Y, g.dy(), st.v.y, st.u.y);
  return st;
}

MaskedField stochastic_velocity_from_density(const Grid &g, const std::vector<double> &rho,
                                             const PhysicalConstants &c,
                                             std::optional<double> eps_node) {
  if (rho.size() != g.size()) throw DomainError("density does not match grid");
  for (double r : rho)
    if (!(r >= 0.0)) throw DomainError("density must be non-negative");
  const double eps = eps_node.value_or(default_node_threshold(rho));
  const auto s = shape_of(g);
  const std::size_t n = g.size();
  const double f = 0.5 * c.hbar / c.mass;
  MaskedField out;
  out.mask.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) out.mask[k] = rho[k] < eps ? 1 : 0;
  auto fill = [&](kernels::Axis ax, double h, std::vector<double> &u) {
    u.assign(n, 0.0);
    std::vector<double> d(n);
    kernels::gradient(s, ax, h, rho, d);
    for (std::size_t k = 0; k < n; ++k)
      if (!out.mask[k]) u[k] = f * d[k] / rho[k];
  };
  fill(kernels::Axis::X, g.dx(), out.value.x);
  if (g.dim() == 2) fill(kernels::Axis::Y, g.dy(), out.value.y);
  return out;
}

ScalarWithMask energy_field(const MadelungState &st, const PhysicalConstants &c) {
  const Grid &g = st.grid;
  const std::size_t n = g.size();
  if (!c.is_free() && c.potential.size() != n) throw DomainError("potential does not match grid");
  const auto s = shape_of(g);
  std::vector<double> div(n);
  kernels::gradient(s, kernels::Axis::X, g.dx(), st.u.x, div);
  if (g.dim() == 2) {
    std::vector<double> dy(n);
    kernels::gradient(s, kernels::Axis::Y, g.dy(), st.u.y, dy);
    for (std::size_t k = 0; k < n; ++k) div[k] += dy[k];
  }
  ScalarWithMask e;
  e.value.assign(n, kNaN);
  e.undefined.assign(n, 0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (stencil_masked(g, st.mask, i, j)) {
        e.undefined[k] = 1;
        continue;
      }
      double v2 = st.v.x[k] * st.v.x[k], u2 = st.u.x[k] * st.u.x[k];
      if (g.dim() == 2) {
        v2 += st.v.y[k] * st.v.y[k];
        u2 += st.u.y[k] * st.u.y[k];
      }
      const double V = c.is_free() ? 0.0 : c.potential[k];
      e.value[k] = 0.5 * c.mass * v2 + V - 0.5 * c.mass * u2 - 0.5 * c.hbar * div[k];
    }
  return e;
}

double interior_probability(const Grid &g, const std::vector<double> &rho) {
  double acc = 0.0;
  for (int j = 0; j < g.ny(); ++j) {
    double row = 0.0;
    for (int i = 0; i <= g.detector_column(); ++i) row += g.interior_weight_x(i) * rho[g.index(i, j)];
    acc += g.weight_y(j) * row;
  }
  return acc;
}

double interior_probability(const WaveField &psi) {
  const Grid &g = psi.grid;
  std::vector<double> wx(static_cast<std::size_t>(g.interior_nodes_x()));
  for (int i = 0; i < g.interior_nodes_x(); ++i) wx[static_cast<std::size_t>(i)] = g.interior_weight_x(i);
  std::vector<double> rows(static_cast<std::size_t>(g.ny()));
  kernels::row_probability(shape_of(g), wx, psi.psi, rows);
  double acc = 0.0;
  for (int j = 0; j < g.ny(); ++j) acc += g.weight_y(j) * rows[static_cast<std::size_t>(j)];
  return acc;
}

double total_probability(const Grid &g, const std::vector<double> &rho, const SurfaceDensity &s) {
  return interior_probability(g, rho) + s.total();
}

std::vector<double> boundary_flux(const WaveField &psi, const PhysicalConstants &c) {
  const Grid &g = psi.grid;
  const int d = g.detector_column();
  const double h = g.dx();
  const double f = c.hbar / c.mass;
  std::vector<double> F(static_cast<std::size_t>(g.ny()));
  for (int j = 0; j < g.ny(); ++j) {
    const cd p0 = psi.psi[g.index(d, j)], p1 = psi.psi[g.index(d - 1, j)], p2 = psi.psi[g.index(d - 2, j)];
    const cd dpsi = (3.0 * p0 - 4.0 * p1 + p2) / (2.0 * h);
    F[static_cast<std::size_t>(j)] = f * (std::conj(p0) * dpsi).imag();
  }
  return F;
}

std::vector<double> boundary_flux(const MadelungState &s, const PhysicalConstants &) {
  const Grid &g = s.grid;
  const int d = g.detector_column();
  std::vector<double> F(static_cast<std::size_t>(g.ny()));
  for (int j = 0; j < g.ny(); ++j) {
    const std::size_t k = g.index(d, j);
    F[static_cast<std::size_t>(j)] = s.mask[k] ? 0.0 : s.rho[k] * s.v.x[k];
  }
  return F;
}

ScalarWithMask curl(const Grid &g, const VectorField &v, const std::vector<std::uint8_t> &mask) {
  if (g.dim() != 2) throw DomainError("curl needs a 2D grid");
  const auto s = shape_of(g);
  const std::size_t n = g.size();
  std::vector<double> a(n), b(n);
  kernels::gradient(s, kernels::Axis::X, g.dx(), v.y, a);
  kernels::gradient(s, kernels::Axis::Y, g.dy(), v.x, b);
  ScalarWithMask out;
  out.value.assign(n, kNaN);
  out.undefined.assign(n, 0);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const std::size_t k = g.index(i, j);
      if (stencil_masked(g, mask, i, j)) {
        out.undefined[k] = 1;
        continue;
      }
      out.value[k] = a[k] - b[k];
    }
  return out;
}

}  // namespace toa
