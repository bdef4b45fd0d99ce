#include <cmath>
#include <numbers>

#include "doctest.h"
#include "toa/errors.hpp"
#include "toa/fields.hpp"
#include "toa/kernels.hpp"
#include "toa/oracles.hpp"
#include "toa/propagators.hpp"

using namespace toa;

namespace {

WaveField plane_wave(const Grid &g, double k, double amp = 1.0) {
  WaveField w(g);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) w.psi[g.index(i, j)] = amp * std::exp(cd(0.0, k * g.x().coord(i)));
  return w;
}

}  // namespace

TEST_SUITE("fields-core") {

TEST_CASE("grid geometry") {
  Grid g = Grid::line(-10.0, 101, 20);
  CHECK(g.detector_column() == 100);
  CHECK(g.x().coord(100) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(g.buffer_nodes() == 20);
  CHECK(g.interior_weight_x(0) == doctest::Approx(0.05));
  CHECK(g.interior_weight_x(100) == doctest::Approx(0.05));
  CHECK(g.interior_weight_x(101) == 0.0);
  double s = 0;
  for (int i = 0; i < g.nx(); ++i) s += g.interior_weight_x(i);
  CHECK(s == doctest::Approx(10.0));
  CHECK_THROWS_AS(Grid::line(1.0, 32), ConfigError);
  CHECK_THROWS_AS(Grid::line(-1.0, 4), ConfigError);

  Grid r = Grid::rectangle(-4.0, 33, 0, -2.0, 2.0, 17);
  CHECK(r.dim() == 2);
  CHECK(r.detector_nodes() == 17);
  double a = 0;
  for (double e : r.area_elements()) a += e;
  CHECK(a == doctest::Approx(4.0));
}

TEST_CASE("tridiagonal solve matches apply") {
  const std::size_t n = 40;
  Tridiagonal a = Tridiagonal::constant(n, cd(-0.3, 0.2), cd(2.0, -0.1));
  a.pin_row(0);
  std::vector<cd> x(n), b(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = cd(std::sin(0.3 * i), std::cos(0.7 * i));
  a.apply(x, b);
  TridiagonalFactor f(a);
  f.solve_in_place(b);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(b[i] - x[i]) < 1e-13);

  Tridiagonal z = Tridiagonal::constant(4, 1.0, 0.0);
  CHECK_THROWS_AS(TridiagonalFactor{z}, NumericalError);
}

TEST_CASE("parallel kernels agree with the serial reference bit for bit") {
  Grid g = Grid::rectangle(-8.0, 64, 31, -4.0, 4.0, 48);
  GaussianParams p{-3.0, 0.7, 3.0, 0.0}, lat{0.5, 0.8, -1.0, 0.0};
  WaveField a = sample(Superposition::single(p), {}, g, 0.0, &lat);
  WaveField b = a;
  CayleyPropagator prop(g, 0.01, {});
  for (int n = 0; n < 5; ++n) {
    prop.step(a);
    prop.step_serial(b);
  }
  for (std::size_t k = 0; k < a.psi.size(); ++k) REQUIRE(a.psi[k] == b.psi[k]);

  kernels::Shape s{g.nx(), g.ny()};
  std::vector<double> r1(g.size()), r2(g.size()), i1(g.size()), i2(g.size());
  kernels::density(a.psi, r1);
  kernels::serial::density(a.psi, r2);
  CHECK(r1 == r2);
  kernels::gradient_products(s, kernels::Axis::Y, g.dy(), a.psi, i1, r1);
  kernels::serial::gradient_products(s, kernels::Axis::Y, g.dy(), a.psi, i2, r2);
  CHECK(i1 == i2);
  CHECK(r1 == r2);
  std::vector<double> wx(static_cast<std::size_t>(g.nx()));
  for (int i = 0; i < g.nx(); ++i) wx[static_cast<std::size_t>(i)] = g.interior_weight_x(i);
  std::vector<double> rows1(static_cast<std::size_t>(g.ny())), rows2(rows1.size());
  kernels::row_probability(s, wx, a.psi, rows1);
  kernels::serial::row_probability(s, wx, a.psi, rows2);
  CHECK(rows1 == rows2);
}

TEST_CASE("density and current of a plane wave") {
  Grid g = Grid::line(-5.0, 2001);
  const double k = 1.3;
  WaveField w = plane_wave(g, k, 0.5);
  auto rho = density_from_wave(w);
  CHECK(rho[100] == doctest::Approx(0.25));
  PhysicalConstants c{2.0, 3.0, {}};
  auto j = current_from_wave(w, c);
  // hbar k / m * rho, up to the O(h^2) stencil error
  CHECK(j.x[500] == doctest::Approx(c.hbar * k / c.mass * 0.25).epsilon(1e-5));
  CHECK(j.x[0] == doctest::Approx(c.hbar * k / c.mass * 0.25).epsilon(1e-5));
  CHECK(j.y.empty());

  w.psi[7] = cd(NAN, 0.0);
  CHECK_THROWS_AS(density_from_wave(w), NumericalError);
}

TEST_CASE("Madelung fields of a Gaussian") {
  Grid g = Grid::line(-20.0, 4001);
  GaussianParams p{-10.0, 1.0, 2.0, 0.0};
  WaveField w = sample(Superposition::single(p), {}, g);
  MadelungState m = velocity_fields_from_wave(w, {});
  // t = 0: v = hbar k0 / m, u = -(x - x0)/(2 s^2)
  const int i = 1500;  // x = -12.5
  CHECK(m.v.x[i] == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(m.u.x[i] == doctest::Approx(1.25).epsilon(1e-4));
  CHECK(m.mask[2000] == 0);
  CHECK(m.masked_count() > 0);  // far tails fall below 1e-12 max rho
  CHECK(m.mask[0] == 1);
  CHECK(m.v.x[0] == 0.0);

  auto e = energy_field(m, {});
  // E = v^2/2 - u^2/2 - (1/2) du/dx = 2 - u^2/2 + 1/4 (natural units, s = 1)
  CHECK(e.undefined[i] == 0);
  CHECK(e.value[i] == doctest::Approx(2.0 - 0.5 * 1.25 * 1.25 + 0.25).epsilon(1e-4));
  CHECK(e.undefined[0] == 1);
  CHECK(std::isnan(e.value[0]));

  std::vector<double> bad(g.size(), 1.0);
  bad[3] = -1e-3;
  CHECK_THROWS_AS(stochastic_velocity_from_density(g, bad, {}), DomainError);
}

TEST_CASE("interior probability excludes the buffer") {
  Grid g = Grid::line(-4.0, 401, 100);
  std::vector<double> rho(g.size(), 0.25);
  CHECK(interior_probability(g, rho) == doctest::Approx(1.0));
  SurfaceDensity s = SurfaceDensity::empty(g);
  s.sigma[0] = 0.5;
  CHECK(total_probability(g, rho, s) == doctest::Approx(1.5));
}

TEST_CASE("boundary flux uses the interior stencil") {
  Grid g = Grid::line(-5.0, 2001, 50);
  WaveField w = plane_wave(g, -0.7);
  auto f = boundary_flux(w, {});
  REQUIRE(f.size() == 1);
  CHECK(f[0] == doctest::Approx(-0.7).epsilon(1e-5));
}

TEST_CASE("curl of a gradient field vanishes") {
  Grid g = Grid::rectangle(-3.0, 61, 0, -2.0, 2.0, 41);
  VectorField v;
  v.x.resize(g.size());
  v.y.resize(g.size());
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const double x = g.x().coord(i), y = g.y().coord(j);
      v.x[g.index(i, j)] = 2 * x * y;  // grad(x^2 y)
      v.y[g.index(i, j)] = x * x;
    }
  std::vector<std::uint8_t> mask(g.size(), 0);
  mask[g.index(30, 20)] = 1;
  auto c = curl(g, v, mask);
  CHECK(std::abs(c.value[g.index(10, 10)]) < 1e-12);
  CHECK(c.undefined[g.index(31, 20)] == 1);
  CHECK_THROWS_AS(curl(Grid::line(-1.0, 16), v, mask), DomainError);
}

}  // TEST_SUITE
