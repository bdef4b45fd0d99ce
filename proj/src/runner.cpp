#include "toa/runner.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "toa/accounting.hpp"
#include "toa/errors.hpp"

#ifndef TOA_PRESET_DIR
#define TOA_PRESET_DIR "presets"
#endif

namespace toa {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_atomic(const std::string &path, const std::string &content) {
  const fs::path p(path);
  const fs::path tmp = p.parent_path() / ("." + p.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write '" + tmp.string() + "'", "--out");
    f << content;
    f.flush();
    if (!f) throw ConfigError("write failed for '" + tmp.string() + "'", "--out");
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) {
    fs::remove(tmp);
    throw ConfigError("cannot rename into '" + path + "': " + ec.message(), "--out");
  }
}

int exit_code(ErrorCategory c) { return c == ErrorCategory::Config ? 2 : 3; }

std::string preset_dir() { return TOA_PRESET_DIR; }

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto &e : fs::directory_iterator(preset_dir(), ec))
    if (e.path().extension() == ".conf") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::string resolve_config(const std::string &arg) {
  if (fs::is_regular_file(arg)) return arg;
  const fs::path p = fs::path(preset_dir()) / (arg + ".conf");
  if (fs::is_regular_file(p)) return p.string();
  throw ConfigError("no config file or preset named '" + arg + "'", "--config");
}

std::vector<std::string> validity_failures(const RunFlags &f) {
  std::vector<std::string> v;
  if (f.far_wall_contaminated) v.push_back("far-wall contamination");
  if (f.clamp_warning) v.push_back("clamp events on more than 1% of steps");
  if (f.sigma_violations > 0) v.push_back("surface density decreased");
  if (f.robin_decay_violations > 0) v.push_back("Robin interior probability increased");
  return v;
}

DetectorRecord run_scenario(const RunConfig &cfg, EngineKind kind) {
  RunConfig rc = cfg;
  rc.engine.kind = kind;
  if (kind == EngineKind::Robin || kind == EngineKind::IdealHydro) rc.buffer_length = 0.0;
  if (kind == EngineKind::IdealHydro && rc.dim != 1) throw ConfigError("the hydro engine is 1D only", "grid.dim");
  const Scenario sc = build_scenario(rc);
  return run_evolution(sc.initial, SurfaceDensity::empty(sc.grid), rc.engine, sc.constants);
}

namespace {

void say(const CommandOptions &o, const std::string &s) {
  if (!o.quiet && o.log) *o.log << s << '\n' << std::flush;
}

std::string prepare_dir(const CommandOptions &opt, const std::string &verb, const ParsedConfig &pc) {
  const fs::path d = fs::path(opt.out_dir) / (verb + "-" + pc.hash());
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw ConfigError("cannot create output directory '" + d.string() + "': " + ec.message(), "--out");
  return d.string();
}

json flags_json(const RunFlags &f) {
  json j;
  j["far_wall_max"] = f.far_wall_max;
  j["far_wall_contaminated"] = f.far_wall_contaminated;
  j["clamp_events"] = f.clamp_events;
  j["clamp_warning"] = f.clamp_warning;
  j["blocked_reentry_steps"] = f.blocked_reentry_steps;
  j["mask_events"] = f.mask_events;
  j["truncated"] = f.truncated;
  j["buffer_mass_at_start"] = f.tail_mass;
  j["max_budget_error"] = f.max_budget_error;
  j["sigma_violations"] = f.sigma_violations;
  j["robin_decay_violations"] = f.robin_decay_violations;
  j["stopped_early"] = f.stopped_early;
  j["steps_taken"] = f.steps_taken;
  return j;
}

json grid_json(const Grid &g) {
  json j;
  j["dim"] = g.dim();
  j["x_far"] = g.x().lo;
  j["x_hi"] = g.x().hi;
  j["interior_nodes_x"] = g.interior_nodes_x();
  j["buffer_nodes"] = g.buffer_nodes();
  j["dx"] = g.dx();
  if (g.dim() == 2) {
    j["y_lo"] = g.y().lo;
    j["y_hi"] = g.y().hi;
    j["ny"] = g.ny();
    j["dy"] = g.dy();
  }
  return j;
}

json state_json(const RunConfig &c, const Scenario &sc) {
  json j;
  j["kind"] = c.state;
  if (sc.backflow) {
    const auto &b = *sc.backflow;
    j["k1"] = b.k1;
    j["k2"] = b.k2;
    j["weight_ratio"] = b.weight_ratio;
    j["s"] = b.s;
    j["x0"] = b.x0;
    j["witness"] = {{"x", b.witness.x}, {"t", b.witness.t}, {"flux", b.witness.flux},
                    {"max_abs_flux", b.witness.max_abs_flux}, {"verified", b.verify(c.constants)}};
    j["search"] = b.scanned;
  } else {
    j["x0"] = c.gaussian.x0;
    j["s"] = c.gaussian.s;
    j["k0"] = c.gaussian.k0;
    j["t0"] = c.gaussian.t0;
  }
  if (c.dim == 2) j["lateral"] = {{"y0", c.lateral.x0}, {"s", c.lateral.s}, {"ky", c.lateral.k0}};
  j["tail_mass_outside_interior"] = sc.tail_mass;
  j["resolution"] = {{"k_max", sc.resolution.k_max},
                     {"points_per_wavelength", sc.resolution.points_per_wavelength},
                     {"ok", sc.resolution.ok}};
  return j;
}

json manifest_base(const ParsedConfig &pc, const std::string &command, const Scenario &sc) {
  const RunConfig &c = pc.run;
  json m;
  m["tool"] = "toa";
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["config_hash"] = pc.hash();
  m["engine"] = engine_name(c.engine.kind);
  m["detector_mode"] = c.engine.detector == DetectorMode::Open ? "open" : "walled";
  m["grid"] = grid_json(sc.grid);
  m["initial_state"] = state_json(c, sc);
  m["constants"] = {{"hbar", c.constants.hbar}, {"mass", c.constants.mass}};
  json cfg;
  for (const auto &[k, v] : config_schema()) cfg[k] = pc.values.at(k);
  m["config"] = cfg;
  return m;
}

std::string dump(const json &j) { return j.dump(2) + "\n"; }

std::string record_csv(const DetectorRecord &r) {
  std::string s = "t,flux,interior_prob,surface_prob,budget_error\n";
  const auto area = r.grid.area_elements();
  for (const auto &sn : r.snapshots) {
    double f = 0.0;
    for (std::size_t j = 0; j < area.size(); ++j) f += sn.flux_since_last[j] * area[j];
    s += format_number(sn.t) + "," + format_number(f) + "," + format_number(sn.interior) + "," +
         format_number(sn.surface) + "," + format_number(sn.interior + sn.surface - 1.0) + "\n";
  }
  return s;
}

std::string bins_csv(const std::vector<double> &edges, const std::vector<double> &mass, const double *never) {
  std::string s = "bin_left,bin_right,mass\n";
  for (std::size_t k = 0; k < mass.size(); ++k)
    s += format_number(edges[k]) + "," + format_number(edges[k + 1]) + "," + format_number(mass[k]) + "\n";
  if (never) s += "never,," + format_number(*never) + "\n";
  return s;
}

std::string detector_csv(const DetectorDistribution &d) {
  std::string s = "y_left,y_right,t_left,t_right,mass\n";
  for (std::size_t b = 0; b < d.mass.size(); ++b)
    for (std::size_t k = 0; k < d.mass[b].size(); ++k)
      s += format_number(d.surface_edges[b]) + "," + format_number(d.surface_edges[b + 1]) + "," +
           format_number(d.time_edges[k]) + "," + format_number(d.time_edges[k + 1]) + "," + format_number(d.mass[b][k]) + "\n";
  s += "never,,,," + format_number(d.never) + "\n";
  return s;
}

std::string run_plot_script(bool ideal, bool two_d) {
  std::string s =
      "# gnuplot -p plot.gp\n"
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set multiplot layout " + std::string(two_d ? "3" : "2") + ",1\n"
      "set xlabel 't'\n"
      "plot 'record.csv' using 1:3 with lines, '' using 1:4 with lines\n";
  if (ideal)
    s += "set ylabel 'mass'\n"
         "plot 'arrival.csv' using (($1+$2)/2):3:($2-$1) with boxes title 'arrival time'\n";
  else
    s += "set ylabel 'signed flux'\n"
         "plot 'flux.csv' using (($1+$2)/2):3:($2-$1) with boxes title 'flux'\n";
  if (two_d)
    s += "set xlabel 't'\nset ylabel 'y'\n"
         "plot 'detector.csv' using (($3+$4)/2):(($1+$2)/2):5 with image title 'detector'\n";
  s += "unset multiplot\n";
  return s;
}

}  // namespace

CommandResult cmd_run(const ParsedConfig &pc, const CommandOptions &opt) {
  const RunConfig &c = pc.run;
  CommandResult res;
  const Scenario sc = build_scenario(c);
  say(opt, std::string("run ") + c.name + ": " + engine_name(c.engine.kind) + ", " + std::to_string(c.engine.steps) + " steps");
  DetectorRecord r = run_evolution(sc.initial, SurfaceDensity::empty(sc.grid), c.engine, sc.constants);
  res.dir = prepare_dir(opt, "run", pc);
  const fs::path d(res.dir);

  auto put = [&](const std::string &name, const std::string &content) {
    write_atomic((d / name).string(), content);
    res.files.push_back(name);
  };
  put("record.csv", record_csv(r));
  json dist;
  if (r.ideal()) {
    const ArrivalDistribution a = arrival_distribution(r, c.bin_width);
    put("arrival.csv", bins_csv(a.edges, a.mass, &a.never));
    dist = {{"p_inf", a.p_inf}, {"never", a.never}, {"total", a.total()}, {"truncated", a.truncated}};
    if (c.dim == 2) {
      const DetectorDistribution dd = detector_distribution(r, c.surface_bins, c.bin_width);
      put("detector.csv", detector_csv(dd));
      dist["detector_total"] = dd.total();
    }
  } else {
    const SignedDistribution f = daumer_flux_distribution(r, c.bin_width);
    put("flux.csv", bins_csv(f.edges, f.mass, nullptr));
  }
  put("plot.gp", run_plot_script(r.ideal(), r.ideal() && c.dim == 2));

  json m = manifest_base(pc, "run", sc);
  m["dt"] = r.dt;
  m["horizon"] = r.horizon();
  m["flags"] = flags_json(r.flags);
  if (!dist.is_null()) m["arrival"] = dist;
  res.files.push_back("manifest.json");
  m["outputs"] = res.files;
  write_atomic((d / "manifest.json").string(), dump(m));

  if (opt.strict) res.validity_failures = validity_failures(r.flags);
  say(opt, "wrote " + res.dir);
  return res;
}

namespace {

// decreases below this are round-off in the accumulated sums
constexpr double kMonotoneTol = 1e-12;

struct NamedCurve {
  std::string name;
  std::string kind;
  Curve curve;
};

}  // namespace

CommandResult cmd_compare(const ParsedConfig &pc, const CommandOptions &opt) {
  const RunConfig &c = pc.run;
  const auto &kinds = c.compare_engines;
  if (kinds.size() < 2) throw ConfigError("compare needs at least two engines in compare.engines", "compare.engines");
  for (std::size_t i = 0; i < kinds.size(); ++i)
    for (std::size_t k = i + 1; k < kinds.size(); ++k)
      if (kinds[i] == kinds[k]) throw ConfigError("compare.engines lists an engine twice", "compare.engines");
  const Scenario sc = build_scenario(c);

  std::vector<DetectorRecord> recs(kinds.size());
  std::vector<std::string> errs(kinds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < kinds.size(); i = next++) {
      try {
        recs[i] = run_scenario(c, kinds[i]);
      } catch (const Error &e) {
        errs[i] = e.what();
      }
    }
  };
  say(opt, "compare " + c.name + ": " + std::to_string(kinds.size()) + " engines");
  std::vector<std::thread> pool;
  const int nt = std::clamp(opt.jobs, 1, static_cast<int>(kinds.size()));
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (!errs[i].empty()) throw NumericalError(std::string(engine_name(kinds[i])) + ": " + errs[i]);

  std::vector<NamedCurve> curves;
  const DetectorRecord *first_ideal = nullptr;
  bool have_reference = false;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const std::string n = engine_name(kinds[i]);
    if (recs[i].ideal()) {
      curves.push_back({n + ":arrival", "arrival", arrival_curve(recs[i])});
      if (!first_ideal) first_ideal = &recs[i];
    } else if (kinds[i] == EngineKind::Robin) {
      curves.push_back({n + ":interior_loss", "interior_loss", interior_loss_curve(recs[i])});
    } else {
      curves.push_back({n + ":daumer", "daumer", daumer_curve(recs[i])});
      have_reference = true;
    }
  }
  if (!have_reference && first_ideal && first_ideal->kind == EngineKind::IdealPsi)
    curves.push_back({"ideal-psi:daumer", "daumer", daumer_curve(*first_ideal)});

  std::size_t len = SIZE_MAX;
  for (const auto &nc : curves) len = std::min(len, nc.curve.t.size());
  const std::vector<double> t(curves.front().curve.t.begin(), curves.front().curve.t.begin() + len);
  for (const auto &nc : curves)
    for (std::size_t k = 0; k < len; ++k)
      if (std::abs(nc.curve.t[k] - t[k]) > 1e-9 * std::max(1.0, std::abs(t[k])))
        throw ConfigError("engines did not share the time grid", "engine.dt");
  const std::vector<double> analytic = flux_cumulative(sc.analytic, c.constants, 0.0, t);

  CommandResult res;
  res.dir = prepare_dir(opt, "compare", pc);
  const fs::path d(res.dir);
  std::string csv = "t";
  for (const auto &nc : curves) csv += "," + nc.name;
  csv += ",analytic:flux_integral\n";
  for (std::size_t k = 0; k < len; ++k) {
    csv += format_number(t[k]);
    for (const auto &nc : curves) csv += "," + format_number(nc.curve.value[k]);
    csv += "," + format_number(analytic[k]) + "\n";
  }
  write_atomic((d / "compare.csv").string(), csv);
  res.files.push_back("compare.csv");

  auto sup_gap = [&](const std::vector<double> &a, const std::vector<double> &b) {
    double g = 0.0;
    for (std::size_t k = 0; k < len; ++k) g = std::max(g, std::abs(a[k] - b[k]));
    return g;
  };
  json jc = json::array();
  const NamedCurve *arrival = nullptr;
  const NamedCurve *daumer = nullptr;
  for (const auto &nc : curves) {
    if (!arrival && nc.kind == "arrival") arrival = &nc;
    if (!daumer && nc.kind == "daumer") daumer = &nc;
  }
  for (const auto &nc : curves) {
    Curve cut{t, std::vector<double>(nc.curve.value.begin(), nc.curve.value.begin() + len)};
    json e;
    e["name"] = nc.name;
    e["kind"] = nc.kind;
    e["monotone"] = nc.curve.monotone(kMonotoneTol);
    e["final"] = nc.curve.value[len - 1];
    e["sup_gap_to_analytic"] = sup_gap(cut.value, analytic);
    if (arrival && &nc != arrival)
      e["sup_gap_to_arrival"] =
          sup_gap(cut.value, std::vector<double>(arrival->curve.value.begin(), arrival->curve.value.begin() + len));
    jc.push_back(e);
  }

  json rep;
  rep["config_hash"] = pc.hash();
  rep["aligned_steps"] = len;
  rep["horizon"] = t.back();
  rep["monotone_tolerance"] = kMonotoneTol;
  rep["curves"] = jc;
  // first negative-flux window of the Daumer curve and the gap just after it
  if (daumer) {
    std::size_t a = 0, b = 0;
    for (std::size_t k = 1; k < len; ++k)
      if (daumer->curve.value[k] < daumer->curve.value[k - 1] - kMonotoneTol) {
        if (a == 0) a = k;
        b = k;
      } else if (a != 0) {
        break;
      }
    json w;
    w["found"] = a != 0;
    if (a != 0) {
      const std::size_t post = std::min(b + 1, len - 1);
      w["t_start"] = t[a - 1];
      w["t_end"] = t[b];
      w["t_post"] = t[post];
      w["daumer_drop"] = daumer->curve.value[a - 1] - daumer->curve.value[b];
      if (arrival) w["post_window_gap"] = arrival->curve.value[post] - daumer->curve.value[post];
    }
    rep["negative_flux_window"] = w;
  }
  json flags = json::object();
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    flags[engine_name(kinds[i])] = flags_json(recs[i].flags);
    if (opt.strict)
      for (const auto &f : validity_failures(recs[i].flags))
        res.validity_failures.push_back(std::string(engine_name(kinds[i])) + ": " + f);
  }
  rep["flags"] = flags;
  write_atomic((d / "compare.json").string(), dump(rep));
  res.files.push_back("compare.json");

  std::string gp =
      "# gnuplot -p plot.gp\n"
      "set datafile separator ','\n"
      "set key autotitle columnhead left top\n"
      "set xlabel 't'\nset ylabel 'cumulative'\n"
      "plot for [i=2:" + std::to_string(curves.size() + 2) + "] 'compare.csv' using 1:i with lines\n";
  write_atomic((d / "plot.gp").string(), gp);
  res.files.push_back("plot.gp");

  json m = manifest_base(pc, "compare", sc);
  m["dt"] = c.engine.dt;
  m["horizon"] = t.back();
  m["engines"] = json::array();
  for (auto k : kinds) m["engines"].push_back(engine_name(k));
  m["flags"] = flags;
  res.files.push_back("manifest.json");
  m["outputs"] = res.files;
  write_atomic((d / "manifest.json").string(), dump(m));
  say(opt, "wrote " + res.dir);
  return res;
}

namespace {

json opt_num(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

}  // namespace

CommandResult cmd_convergence(const ParsedConfig &pc, const CommandOptions &opt) {
  const RunConfig &c = pc.run;
  if (c.ladder_nodes.empty()) throw ConfigError("convergence.nodes is empty", "convergence.nodes");
  say(opt, "convergence " + c.name + ": " + std::to_string(c.ladder_nodes.size()) + " rungs");
  const ConvergenceReport rep = convergence_study(c, c.engine.kind, c.ladder_nodes, c.ladder_dt, opt.jobs);
  const Scenario sc = build_scenario(c);

  CommandResult res;
  res.dir = prepare_dir(opt, "convergence", pc);
  const fs::path d(res.dir);
  std::string csv = "nodes,dx,dt,steps,points_per_wavelength,flagged,rho_l1,rho_l2,rho_sup,psi_l2,arrival_sup\n";
  for (const auto &r : rep.rungs) {
    csv += std::to_string(r.nodes) + "," + format_number(r.dx) + "," + format_number(r.dt) + "," +
           std::to_string(r.steps) + "," + format_number(r.resolution.points_per_wavelength) + "," +
           (r.flagged ? "1" : "0") + ",";
    if (r.error.empty()) {
      csv += format_number(r.rho_l1) + "," + format_number(r.rho_l2) + "," + format_number(r.rho_sup) + "," +
             (r.psi_l2 ? format_number(*r.psi_l2) : "") + "," + (r.arrival_sup ? format_number(*r.arrival_sup) : "");
    } else {
      csv += ",,,,";
    }
    csv += "\n";
  }
  write_atomic((d / "convergence.csv").string(), csv);
  res.files.push_back("convergence.csv");

  json j;
  j["config_hash"] = pc.hash();
  j["engine"] = engine_name(rep.kind);
  j["horizon"] = rep.horizon;
  json rungs = json::array();
  for (const auto &r : rep.rungs) {
    json e;
    e["nodes"] = r.nodes;
    e["dx"] = r.dx;
    e["dt"] = r.dt;
    e["steps"] = r.steps;
    e["points_per_wavelength"] = r.resolution.points_per_wavelength;
    e["flagged"] = r.flagged;
    if (!r.error.empty()) e["error"] = r.error;
    e["rho_l1"] = r.rho_l1;
    e["rho_l2"] = r.rho_l2;
    e["rho_sup"] = r.rho_sup;
    e["psi_l2"] = opt_num(r.psi_l2);
    e["arrival_sup"] = opt_num(r.arrival_sup);
    e["budget_error"] = r.budget_error;
    rungs.push_back(e);
  }
  j["rungs"] = rungs;
  j["orders"] = {{"rho_l1", opt_num(rep.order_rho_l1)}, {"rho_l2", opt_num(rep.order_rho_l2)},
                 {"rho_sup", opt_num(rep.order_rho_sup)}, {"psi_l2", opt_num(rep.order_psi_l2)},
                 {"arrival_sup", opt_num(rep.order_arrival)}};
  j["metric"] = rep.metric;
  j["expected_order"] = rep.expected_order;
  j["order_tolerance"] = rep.order_tolerance;
  j["non_convergent"] = rep.non_convergent;
  j["pass"] = rep.pass;
  write_atomic((d / "convergence.json").string(), dump(j));
  res.files.push_back("convergence.json");

  write_atomic((d / "plot.gp").string(),
               "# gnuplot -p plot.gp\n"
               "set datafile separator ','\n"
               "set key autotitle columnhead\n"
               "set logscale xy\nset xlabel 'dx'\nset ylabel 'error'\n"
               "plot for [i=7:11] 'convergence.csv' using 2:i with linespoints\n");
  res.files.push_back("plot.gp");

  json m = manifest_base(pc, "convergence", sc);
  m["horizon"] = rep.horizon;
  m["flags"] = {{"non_convergent", rep.non_convergent},
                {"flagged_rungs", std::count_if(rep.rungs.begin(), rep.rungs.end(), [](auto &r) { return r.flagged; })},
                {"pass", rep.pass}};
  res.files.push_back("manifest.json");
  m["outputs"] = res.files;
  write_atomic((d / "manifest.json").string(), dump(m));
  if (opt.strict && (rep.non_convergent || !rep.pass)) res.validity_failures.push_back("ladder did not reach the expected order");
  say(opt, "wrote " + res.dir);
  return res;
}

}  // namespace toa
