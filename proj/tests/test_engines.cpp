#include <cmath>

#include "doctest.h"
#include "toa/engines.hpp"
#include "toa/errors.hpp"
#include "toa/oracles.hpp"

using namespace toa;

namespace {

WaveField gaussian_on(const Grid &g, const GaussianParams &p) {
  WaveField w = sample(Superposition::single(p), {}, g);
  const double n = interior_probability(w);
  for (auto &z : w.psi) z /= std::sqrt(n);
  return w;
}

double full_norm(const WaveField &w) {
  double s = 0;
  for (const auto &z : w.psi) s += std::norm(z);
  return s * w.grid.dx();
}

}  // namespace

TEST_SUITE("engines") {

TEST_CASE("config validation") {
  EngineConfig c;
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EngineConfig{};
  c.kind = EngineKind::Robin;
  c.beta = {0.0, -1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = EngineConfig{};
  c.window = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_engine_kind("ideal-detector-psi") == EngineKind::IdealPsi);
  CHECK_THROWS_AS(parse_engine_kind("split-step"), ConfigError);
}

TEST_CASE("reference step is unitary") {
  Grid g = Grid::line(-20.0, 1024, 512);
  WaveField w = gaussian_on(g, {-10.0, 1.0, 2.0, 0.0});
  const double n0 = full_norm(w);
  for (int k = 0; k < 50; ++k) w = step_reference(w, 0.01);
  CHECK(std::abs(full_norm(w) - n0) < 1e-12);
  CHECK(w.t == doctest::Approx(0.5));
}

TEST_CASE("ideal detector keeps the budget and sigma monotone per step") {
  Grid g = Grid::line(-16.0, 512, 1024);
  WaveField w = gaussian_on(g, {-4.0, 1.0, 3.0, 0.0});
  SurfaceDensity s = SurfaceDensity::empty(g);
  double prev_sigma = 0.0;
  for (int k = 0; k < 600; ++k) {
    auto [w2, s2] = step_ideal_detector_psi(w, s, 0.005);
    const double total = interior_probability(w2) + s2.total();
    REQUIRE(std::abs(total - 1.0) < 1e-10);
    REQUIRE(s2.sigma[0] >= prev_sigma);
    prev_sigma = s2.sigma[0];
    w = std::move(w2);
    s = std::move(s2);
  }
  CHECK(s.total() > 0.9);
}

TEST_CASE("walled detector reproduces the reference engine") {
  Grid g = Grid::line(-20.0, 512, 0);
  WaveField w = gaussian_on(g, {-6.0, 1.0, 2.0, 0.0});
  EngineConfig cfg;
  cfg.kind = EngineKind::IdealPsi;
  cfg.detector = DetectorMode::Walled;
  cfg.dt = 0.01;
  cfg.steps = 400;
  cfg.snapshot_stride = 400;
  DetectorRecord r = run_evolution(w, SurfaceDensity::empty(g), cfg);
  cfg.kind = EngineKind::Reference;
  DetectorRecord ref = run_evolution(w, SurfaceDensity::empty(g), cfg);
  CHECK(r.snapshots.back().surface == 0.0);
  const auto &a = r.snapshots.back().wave->psi;
  const auto &b = ref.snapshots.back().wave->psi;
  for (std::size_t k = 0; k < a.size(); ++k) REQUIRE(a[k] == b[k]);
  CHECK_FALSE(r.flags.far_wall_contaminated);
}

TEST_CASE("Robin step obeys the discrete balance") {
  Grid g = Grid::line(-16.0, 1024, 0);
  WaveField w = gaussian_on(g, {-7.5, 1.0, 2.0, 0.0});
  const double b = 2.0, dt = 0.002;
  EngineConfig cfg;
  cfg.kind = EngineKind::Robin;
  cfg.beta = {0.0, b};
  cfg.dt = dt;
  auto e = make_engine(cfg, w, SurfaceDensity::empty(g), {});
  double prev = e->interior_probability();
  double worst = 0.0;
  for (int n = 0; n < 2000; ++n) {
    StepOutcome o = e->step();
    const double now = e->interior_probability();
    CHECK(now <= prev + 1e-14);
    if (o.boundary_density[0] > 1e-3) {
      const double pred = b * o.boundary_density[0] * dt;
      worst = std::max(worst, std::abs((prev - now) / pred - 1.0));
    }
    prev = now;
  }
  CHECK(worst < 0.05);
  CHECK_THROWS_AS(CayleyPropagator::robin(Grid::line(-4.0, 64, 10), 0.01, {0.0, 1.0}, {}), ConfigError);
}

TEST_CASE("hydro step conserves the budget on a smooth state") {
  Grid g = Grid::line(-16.0, 256, 0);
  WaveField w = gaussian_on(g, {-8.0, 1.0, 1.0, 0.0});
  EngineConfig cfg;
  cfg.kind = EngineKind::IdealHydro;
  cfg.dt = 2e-4;
  cfg.steps = 500;
  cfg.snapshot_stride = 100;
  DetectorRecord r = run_evolution(w, SurfaceDensity::empty(g), cfg);
  CHECK(r.flags.max_budget_error < 1e-10);
  CHECK(r.flags.sigma_violations == 0);
  REQUIRE(r.snapshots.back().madelung);
  CHECK(r.snapshots.back().madelung->rho.size() == g.size());
}

TEST_CASE("hydro rejects an oversized step") {
  Grid g = Grid::line(-16.0, 256, 0);
  WaveField w = gaussian_on(g, {-8.0, 1.0, 4.0, 0.0});
  EngineConfig cfg;
  cfg.kind = EngineKind::IdealHydro;
  cfg.dt = 0.05;
  cfg.steps = 5;
  CHECK_THROWS_AS(run_evolution(w, SurfaceDensity::empty(g), cfg), CflError);
  cfg.dt = 1e-3;
  CHECK_THROWS_AS(run_evolution(gaussian_on(Grid::line(-16.0, 256, 8), {-8.0, 1.0, 1.0, 0.0}),
                                SurfaceDensity::empty(Grid::line(-16.0, 256, 8)), cfg),
                  ConfigError);
}

TEST_CASE("zero steps give the initial snapshot only") {
  Grid g = Grid::line(-16.0, 256, 64);
  WaveField w = gaussian_on(g, {-8.0, 1.0, 1.0, 0.0});
  EngineConfig cfg;
  cfg.steps = 0;
  DetectorRecord r = run_evolution(w, SurfaceDensity::empty(g), cfg);
  CHECK(r.snapshots.size() == 1);
  CHECK(r.step_time.empty());
  CHECK(r.horizon() == 0.0);
}

TEST_CASE("time steppers are free-particle only") {
  Grid g = Grid::line(-16.0, 256, 64);
  WaveField w = gaussian_on(g, {-8.0, 1.0, 1.0, 0.0});
  EngineConfig cfg;
  cfg.steps = 10;
  PhysicalConstants c;
  c.potential.assign(g.size(), 0.0);
  CHECK_THROWS_AS(run_evolution(w, SurfaceDensity::empty(g), cfg, c), ConfigError);
}

}  // TEST_SUITE
