#include <cmath>
#include <numbers>

#include "doctest.h"
#include "toa/convergence.hpp"
#include "toa/errors.hpp"
#include "toa/oracles.hpp"
#include "toa/propagators.hpp"

using namespace toa;

// Frozen values from an independent Fourier-integral evaluation of the
// free Gaussian (mpmath, 30 digits), x0 = -10, s = 1, k0 = 2.
TEST_SUITE("oracles-validation") {

TEST_CASE("closed form against frozen Fourier-integral values") {
  const GaussianParams p{-10.0, 1.0, 2.0, 0.0};
  const PhysicalConstants c;
  const cd a = analytic_gaussian(p, c, -7.0, 1.5);
  CHECK(a.real() == doctest::Approx(-0.50537190494400814).epsilon(1e-12));
  CHECK(a.imag() == doctest::Approx(0.25249368707833181).epsilon(1e-12));
  const cd b = analytic_gaussian(p, c, 0.0, 4.0);
  CHECK(b.real() == doctest::Approx(0.26000411725009924).epsilon(1e-12));
  CHECK(b.imag() == doctest::Approx(-0.22801595334598548).epsilon(1e-12));
  CHECK(analytic_flux(p, c, 0.0, 4.0) == doctest::Approx(0.28702419832147675).epsilon(1e-12));
  CHECK(analytic_mass_right_of(p, c, -2.0, 3.0) == doctest::Approx(0.13362874657719392).epsilon(1e-12));
  // t = 0 is the initial Gaussian
  CHECK(std::abs(analytic_gaussian(p, c, -10.0, 0.0) - std::pow(2 * std::numbers::pi, -0.25)) < 1e-15);
}

TEST_CASE("norm and variance by quadrature") {
  const GaussianParams p{-3.0, 0.8, 1.5, 0.0};
  const PhysicalConstants c{1.0, 2.0, {}};
  for (double t : {0.0, 1.0, 7.0}) {
    const double sw = std::sqrt(analytic_variance(p, c, t));
    const double mu = p.x0 + c.hbar * p.k0 * t / c.mass;
    double n = 0, m2 = 0;
    const int K = 20000;
    const double lo = mu - 12 * sw, hi = mu + 12 * sw, h = (hi - lo) / K;
    for (int k = 0; k <= K; ++k) {
      const double x = lo + k * h, w = (k == 0 || k == K) ? 0.5 * h : h;
      const double r = analytic_density(p, c, x, t);
      n += w * r;
      m2 += w * r * (x - mu) * (x - mu);
    }
    CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
    const double tau = c.hbar * t / (2 * c.mass * p.s);
    CHECK(m2 == doctest::Approx(p.s * p.s + tau * tau).epsilon(1e-10));
  }
}

TEST_CASE("closed form solves the free equation") {
  const GaussianParams p{-2.0, 0.9, 1.7, 0.3};
  const PhysicalConstants c{1.0, 1.5, {}};
  // 6th-order central differences at scattered probes
  const double h = 1e-3, k = 1e-3;
  for (auto [x, t] : {std::pair{-2.5, 0.4}, {-1.0, 1.2}, {0.3, 2.0}, {-3.1, 0.05}}) {
    auto f = [&](double xx, double tt) { return analytic_gaussian(p, c, xx, tt); };
    const cd dt = (f(x, t + 3 * k) - 9.0 * f(x, t + 2 * k) + 45.0 * f(x, t + k) - 45.0 * f(x, t - k) +
                   9.0 * f(x, t - 2 * k) - f(x, t - 3 * k)) / (60.0 * k);
    const cd dxx = (2.0 * f(x + 3 * h, t) - 27.0 * f(x + 2 * h, t) + 270.0 * f(x + h, t) - 490.0 * f(x, t) +
                    270.0 * f(x - h, t) - 27.0 * f(x - 2 * h, t) + 2.0 * f(x - 3 * h, t)) / (180.0 * h * h);
    const cd lhs = cd(0, c.hbar) * dt;
    const cd rhs = -(c.hbar * c.hbar / (2 * c.mass)) * dxx;
    CHECK(std::abs(lhs - rhs) < 1e-8 * std::max(1.0, std::abs(rhs)));
    // analytic derivative against a difference quotient
    const cd d1 = (f(x + h, t) - f(x - h, t)) / (2 * h);
    CHECK(std::abs(analytic_gaussian_dx(p, c, x, t) - d1) < 1e-5);
  }
}

TEST_CASE("flux oracle") {
  const PhysicalConstants c;
  CHECK(std::abs(analytic_flux({1.0, 1.0, 0.0, 0.0}, c, 1.0, 0.7)) < 1e-15);
  // quasi plane wave: k0 s >= 4
  const GaussianParams p{0.0, 2.0, 3.0, 0.0};
  const double t = 0.05, x = c.hbar * p.k0 * t / c.mass;
  CHECK(analytic_flux(p, c, x, t) == doctest::Approx(p.k0 * analytic_density(p, c, x, t)).epsilon(0.01));
  // p_inf of the default packet: 1/2 erfc(-2 sqrt 2) less the initial mass right of 0.
  // Slow momenta still arrive after t = 400 (about 7e-6), so the asymptote is
  // checked on the closed form and the quadrature against it at finite t.
  const GaussianParams g0{-10.0, 1.0, 2.0, 0.0};
  auto sp = Superposition::single(g0);
  const double m0 = analytic_mass_right_of(g0, c, 0.0, 0.0);
  CHECK(analytic_mass_right_of(g0, c, 0.0, 1e8) - m0 == doctest::Approx(0.99996832875816688).epsilon(1e-9));
  CHECK(flux_integral(sp, c, 0.0, 0.0, 400.0) ==
        doctest::Approx(analytic_mass_right_of(g0, c, 0.0, 400.0) - m0).epsilon(1e-10));
  const std::vector<double> ts{0.0, 1.0, 2.5, 6.0, 6.0, 9.0};
  auto cum = flux_cumulative(sp, c, 0.0, ts);
  CHECK(cum[3] == doctest::Approx(flux_integral(sp, c, 0.0, 0.0, 6.0)).epsilon(1e-12));
  CHECK(cum[4] == cum[3]);
  CHECK(cum[5] == doctest::Approx(analytic_mass_right_of({-10.0, 1.0, 2.0, 0.0}, c, 0.0, 9.0) -
                                  analytic_mass_right_of({-10.0, 1.0, 2.0, 0.0}, c, 0.0, 0.0))
                      .epsilon(1e-12));
}

TEST_CASE("superposition normalization and overlaps") {
  const PhysicalConstants c;
  Superposition sp({{-7.0, 1.0, 10.0, 0.0}, {-7.0, 1.0, 25.0, 0.0}}, {1.0, 0.5});
  CHECK(sp.norm_sq(c) == doctest::Approx(1.0).epsilon(1e-12));
  double n = 0;
  const double h = 1e-3;
  for (double x = -20; x < 40; x += h) n += h * sp.density(c, x, 0.6);
  CHECK(n == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("backflow constructor") {
  const PhysicalConstants c;
  SUBCASE("shipped parameters") {
    auto b = make_backflow_state(10.0, 25.0, {1.0, 0.4857}, 1.0, -7.2, c);
    CHECK(b.verify(c));
    CHECK(b.witness.flux < 0.0);
    CHECK(b.state.flux(c, b.witness.x, b.witness.t) == doctest::Approx(b.witness.flux));
    CHECK(b.state.norm_sq(c) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("equal weights, k2 = 3 k1, k1 s = 1") {
    auto b = make_backflow_state(1.0, 3.0, {1.0, 1.0}, 1.0, -10.0, c);
    CHECK(b.verify(c));
    CHECK(b.state.flux(c, 0.0, b.witness.t) < 0.0);
    CHECK(std::abs(b.state.norm_sq(c) - 1.0) < 1e-12);
  }
  SUBCASE("equal wavenumbers have no certificate") {
    CHECK_THROWS_AS(make_backflow_state(2.0, 2.0, {1.0, 1.0}, 1.0, -10.0, c), NoBackflowError);
    try {
      make_backflow_state(2.0, 2.0, {1.0, 1.0}, 1.0, -10.0, c);
    } catch (const NoBackflowError &e) {
      CHECK(std::string(e.what()).find("scanned") != std::string::npos);
    }
  }
}

TEST_CASE("resolution heuristic") {
  const GaussianParams p{-10.0, 1.0, 2.0, 0.0};
  WaveField fine = sample(Superposition::single(p), {}, Grid::line(-30.0, 4096, 0));
  auto r = resolution_check(fine);
  CHECK(r.ok);
  CHECK(r.k_max > 2.0);
  CHECK(r.k_max < 8.0);
  WaveField coarse = sample(Superposition::single({-10.0, 1.0, 12.0, 0.0}), {}, Grid::line(-30.0, 256, 0));
  CHECK_FALSE(resolution_check(coarse).ok);
}

TEST_CASE("spectral oracle agrees with the closed form") {
  const GaussianParams p{-5.0, 1.0, 1.0, 0.0};
  Grid g = Grid::line(-30.0, 2048, 1024);
  WaveField w = sample(Superposition::single(p), {}, g);
  spectral_propagate(w, {}, 2.0);
  double e = 0;
  for (int i = 0; i < g.nx(); ++i) e = std::max(e, std::abs(w.psi[i] - analytic_gaussian(p, {}, g.x().coord(i), 2.0)));
  CHECK(e < 1e-10);
}

TEST_CASE("order fit") {
  CHECK(fit_order({0.1, 0.05, 0.025}, {1e-2, 2.5e-3, 6.25e-4}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(fit_order({0.1}, {1.0}), DomainError);
}

TEST_CASE("convergence harness guards") {
  RunConfig rc;
  rc.engine.kind = EngineKind::Reference;
  rc.engine.dt = 0.01;
  rc.engine.steps = 50;
  rc.x_far = -20.0;
  rc.buffer_length = 10.0;
  CHECK_THROWS_AS(convergence_study(rc, EngineKind::Reference, {512, 256}, {0.01, 0.005}), ConfigError);
  CHECK_THROWS_AS(convergence_study(rc, EngineKind::Reference, {256, 512}, {0.005, 0.01}), ConfigError);
  CHECK_THROWS_AS(convergence_study(rc, EngineKind::Reference, {256}, {0.01}), ConfigError);
  CHECK_THROWS_AS(convergence_study(rc, EngineKind::Robin, {256, 512}, {0.01, 0.005}), ConfigError);

  // a rung with too few points per wavelength is flagged and left out of the fit
  rc.gaussian.k0 = 6.0;
  auto rep = convergence_study(rc, EngineKind::Reference, {128, 1024, 2048}, {0.02, 0.01, 0.005}, 2);
  REQUIRE(rep.rungs.size() == 3);
  CHECK(rep.rungs[0].flagged);
  CHECK_FALSE(rep.rungs[1].flagged);
  CHECK(rep.order_psi_l2.has_value());
  CHECK(*rep.order_psi_l2 == doctest::Approx(2.0).epsilon(0.1));
  // same report with one worker
  auto rep1 = convergence_study(rc, EngineKind::Reference, {128, 1024, 2048}, {0.02, 0.01, 0.005}, 1);
  CHECK(*rep1.order_psi_l2 == *rep.order_psi_l2);
  CHECK(rep1.rungs[2].psi_l2 == rep.rungs[2].psi_l2);
}

}  // TEST_SUITE
