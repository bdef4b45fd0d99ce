// Acceptance checks 1-9. One PASS/FAIL line per criterion; exit 1 on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "toa/accounting.hpp"
#include "toa/convergence.hpp"
#include "toa/runner.hpp"

using namespace toa;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int n, bool ok, const std::string &detail) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void guarded(int n, const std::function<void()> &body) {
  try {
    body();
  } catch (const std::exception &e) {
    report(n, false, std::string("threw: ") + e.what());
  }
}

const char *kPresets[] = {"gaussian-right", "backflow", "walled", "screen-2d"};

}  // namespace

int main() {
  const fs::path out = fs::temp_directory_path() / "toa-acceptance";
  fs::remove_all(out);
  CommandOptions quiet;
  quiet.out_dir = out.string();
  quiet.quiet = true;

  std::map<std::string, ParsedConfig> cfg;
  std::map<std::string, DetectorRecord> rec;
  std::map<std::string, double> secs;
  for (const char *p : kPresets) {
    cfg.emplace(p, load_config(resolve_config(p)));
    const auto t0 = Clock::now();
    rec.emplace(p, run_scenario(cfg.at(p).run, cfg.at(p).run.engine.kind));
    secs[p] = seconds_since(t0);
  }

  guarded(1, [&] {
    bool ok = true;
    std::string d;
    for (const char *p : {"gaussian-right", "backflow"}) {
      // the full step count: no early stop on a drained interior
      RunConfig rc = cfg.at(p).run;
      rc.engine.stop_threshold = 0.0;
      const auto t0 = Clock::now();
      const DetectorRecord r = run_scenario(rc, rc.engine.kind);
      const double s = seconds_since(t0);
      double worst = 0.0;
      for (const auto &sn : r.snapshots) worst = std::max(worst, std::abs(sn.interior + sn.surface - 1.0));
      const bool good = worst <= 1e-8 && s < 10.0 && r.grid.interior_nodes_x() == 4096 && r.flags.steps_taken == 10000;
      ok = ok && good;
      d += fmt("%s max|budget-1|=%.2e over %zu snapshots, %d steps, %.1fs; ", p, worst, r.snapshots.size(),
               r.flags.steps_taken, s);
    }
    report(1, ok, d);
  });

  guarded(2, [&] {
    long violations = 0, steps = 0;
    for (const char *p : kPresets) {
      const auto &r = rec.at(p);
      violations += r.flags.sigma_violations;
      std::vector<double> acc(r.step_dsigma.empty() ? 0 : r.step_dsigma[0].size(), 0.0);
      for (const auto &ds : r.step_dsigma) {
        ++steps;
        for (double v : ds) violations += v < 0.0;
      }
    }
    report(2, violations == 0, fmt("%ld sigma decreases over %ld steps on all presets", violations, steps));
  });

  guarded(3, [&] {
    const auto t0 = Clock::now();
    const RunConfig &rc = cfg.at("gaussian-right").run;
    // positivity of the analytic flux at the detector over the horizon
    const Superposition sp = Superposition::single(rc.gaussian);
    double fmin = INFINITY;
    for (int k = 1; k <= 5000; ++k) fmin = std::min(fmin, sp.flux(rc.constants, 0.0, k * rc.engine.steps * rc.engine.dt / 5000));
    const ConvergenceReport rep = convergence_study(rc, EngineKind::IdealPsi, rc.ladder_nodes, rc.ladder_dt);
    const double finest = rep.rungs.back().arrival_sup.value_or(INFINITY);
    const double order = rep.order_arrival.value_or(0.0);
    const double s = seconds_since(t0);
    std::string gaps;
    for (const auto &r : rep.rungs) gaps += fmt("%.2e ", r.arrival_sup.value_or(NAN));
    report(3, fmin > 0.0 && finest <= 1e-3 && order >= 1.8 && !rep.non_convergent && s < 120.0,
           fmt("min analytic flux %.2e; sup|T - flux integral| per rung %s; order %.3f; %.1fs", fmin, gaps.c_str(), order, s));
  });

  guarded(4, [&] {
    const ParsedConfig &pc = cfg.at("backflow");
    const Scenario sc = build_scenario(pc.run);
    const bool witness = sc.backflow && sc.backflow->verify(pc.run.constants);
    CommandResult r = cmd_compare(pc, quiet);
    auto j = nlohmann::json::parse(slurp(fs::path(r.dir) / "compare.json"));
    bool t_mono = false, d_mono = true;
    for (const auto &c : j["curves"]) {
      if (c["kind"] == "arrival") t_mono = c["monotone"];
      if (c["kind"] == "daumer") d_mono = c["monotone"];
    }
    const auto &w = j["negative_flux_window"];
    const double gap = w.value("post_window_gap", NAN);
    report(4, witness && t_mono && !d_mono && gap > 0.0,
           fmt("witness F(0, %.4f) = %.3e; T monotone %d, Daumer monotone %d; window [%.4f, %.4f], post-window gap %.3e",
               sc.backflow->witness.t, sc.backflow->witness.flux, t_mono, d_mono, w.value("t_start", NAN),
               w.value("t_end", NAN), gap));
  });

  guarded(5, [&] {
    const double b = 2.0;
    std::vector<double> err;
    double worst_dec = 0.0;
    std::string d;
    for (int N : {512, 1024, 2048}) {
      const std::string text = fmt(
          "engine.kind = robin\nengine.dt = %.17g\nengine.steps = %d\nengine.stop_threshold = 0\n"
          "robin.beta_im = %g\ngrid.x_far = -16\ngrid.nodes = %d\ngaussian.x0 = -7.5\n",
          0.004 * 512.0 / N, static_cast<int>(std::lround(6.0 / (0.004 * 512.0 / N))), b, N);
      const ParsedConfig pc = parse_config(text);
      const Scenario sc = build_scenario(pc.run);
      auto e = make_engine(pc.run.engine, sc.initial, SurfaceDensity::empty(sc.grid), sc.constants);
      double prev = e->interior_probability(), peak = 0.0, at_peak = 0.0;
      for (int n = 0; n < pc.run.engine.steps; ++n) {
        const StepOutcome o = e->step();
        const double now = e->interior_probability();
        if (o.boundary_density[0] > 1e-3) {
          const double pred = (sc.constants.hbar / sc.constants.mass) * b * o.boundary_density[0] * pc.run.engine.dt;
          worst_dec = std::max(worst_dec, std::abs((prev - now) / pred - 1.0));
        }
        prev = now;
        const auto wf = e->wave();
        const double rho = std::norm(wf->psi.back());
        if (rho > peak) {
          peak = rho;
          at_peak = std::abs(boundary_flux(*wf, sc.constants)[0] / rho - b);
        }
      }
      err.push_back(at_peak);
      d += fmt("N=%d |j/rho - b|=%.3e; ", N, at_peak);
    }
    const double r1 = err[1] / err[0], r2 = err[2] / err[1];
    report(5, r1 <= 0.55 && r2 <= 0.55 && worst_dec <= 0.05,
           d + fmt("ratios %.3f %.3f; worst relative decrement mismatch %.2e", r1, r2, worst_dec));
  });

  guarded(6, [&] {
    const ParsedConfig pc = parse_config(
        "engine.kind = reference\nengine.dt = 0.001\nengine.steps = 3000\ngrid.x_far = -20\ngrid.nodes = 4096\n"
        "grid.buffer_length = 20\nconvergence.nodes = 1024, 2048, 4096\nconvergence.dt = 0.004, 0.002, 0.001\n");
    const ConvergenceReport rep = convergence_study(pc.run, EngineKind::Reference, pc.run.ladder_nodes, pc.run.ladder_dt);
    const double finest = rep.rungs.back().psi_l2.value_or(INFINITY);
    const double order = rep.order_psi_l2.value_or(0.0);
    std::string e;
    for (const auto &r : rep.rungs) e += fmt("%.2e ", r.psi_l2.value_or(NAN));
    report(6, finest <= 1e-4 && std::abs(order - 2.0) <= 0.2,
           fmt("L2 error at t=3 per rung %s(4096 nodes last); order %.3f", e.c_str(), order));
  });

  guarded(7, [&] {
    bool ok = true;
    std::string d;
    for (const char *p : kPresets) {
      const DetectorRecord &r = rec.at(p);
      const RunConfig &rc = cfg.at(p).run;
      const ArrivalDistribution a = arrival_distribution(r, rc.bin_width);
      const DetectorDistribution dd = detector_distribution(r, rc.surface_bins, rc.bin_width);
      bool nonneg = a.never >= 0.0 && dd.never >= 0.0;
      for (double m : a.mass) nonneg = nonneg && m >= 0.0;
      for (const auto &row : dd.mass)
        for (double m : row) nonneg = nonneg && m >= 0.0;
      const double ta = std::abs(a.total() - 1.0), td = std::abs(dd.total() - 1.0);
      const auto tm = dd.time_marginal();
      double marg = 0.0;
      bool bitwise = true;
      for (std::size_t k = 0; k < tm.size(); ++k) {
        marg = std::max(marg, std::abs(tm[k] - a.mass[k]));
        if (r.grid.dim() == 1) bitwise = bitwise && dd.mass[0][k] == a.mass[k];
      }
      bool good = nonneg && ta <= 1e-10 && td <= 1e-10 && marg <= 1e-10 && bitwise;
      if (std::string(p) == "screen-2d") good = good && secs.at(p) < 300.0;
      ok = ok && good;
      d += fmt("%s: |T total-1|=%.1e |D total-1|=%.1e marginal gap %.1e%s; ", p, ta, td, marg,
               r.grid.dim() == 1 ? (bitwise ? " D==T bitwise" : " D!=T") : fmt(" %.1fs", secs.at(p)).c_str());
    }
    report(7, ok, d);
  });

  guarded(8, [&] {
    const ParsedConfig pc = parse_config(
        "engine.kind = ideal-hydro\nengine.dt = 1e-4\nengine.steps = 10000\nengine.snapshot_stride = 10000\n"
        "grid.x_far = -16\ngrid.nodes = 512\ngaussian.x0 = -7.5\ngaussian.k0 = 1.5\n");
    const DetectorRecord h = run_scenario(pc.run, EngineKind::IdealHydro);
    RunConfig wide = pc.run;
    wide.buffer_length = 32.0;
    const DetectorRecord w = run_scenario(wide, EngineKind::IdealPsi);
    const auto &rh = h.snapshots.back().madelung->rho;
    const auto rp = density_from_wave(*w.snapshots.back().wave);
    double l1 = 0.0;
    for (int i = 0; i < h.grid.nx(); ++i) l1 += h.grid.interior_weight_x(i) * std::abs(rh[i] - rp[i]);
    report(8, l1 <= 1e-2, fmt("L1(rho) hydro vs psi at t=%.2f on 512 nodes: %.3e", h.horizon(), l1));
  });

  guarded(9, [&] {
    bool same = true;
    std::string d;
    for (const char *p : kPresets) {
      CommandOptions a = quiet, b = quiet;
      a.out_dir = (out / "a").string();
      b.out_dir = (out / "b").string();
      const CommandResult ra = cmd_run(cfg.at(p), a), rb = cmd_run(cfg.at(p), b);
      int files = 0;
      for (const auto &f : ra.files) {
        if (fs::path(f).extension() != ".csv") continue;
        ++files;
        same = same && slurp(fs::path(ra.dir) / f) == slurp(fs::path(rb.dir) / f);
      }
      d += fmt("%s %d CSVs; ", p, files);
    }
    report(9, same, d + (same ? "byte-identical" : "differ"));
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
