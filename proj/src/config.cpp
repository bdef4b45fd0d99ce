#include "toa/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>

#include "toa/errors.hpp"

namespace toa {

namespace {

enum class Type { Real, Int, Text, RealList, IntList, TextList };

struct Key {
  const char *name;
  Type type;
  const char *def;
};

// canonical order = this order
const Key kKeys[] = {
    {"run.name", Type::Text, "run"},
    {"engine.kind", Type::Text, "ideal-psi"},
    {"engine.dt", Type::Real, "0.0025"},
    {"engine.steps", Type::Int, "10000"},
    {"engine.window", Type::Int, "8"},
    {"engine.cfl_safety", Type::Real, "0.5"},
    {"engine.tolerance", Type::Real, "1e-10"},
    {"engine.stop_threshold", Type::Real, "0.001"},
    {"engine.snapshot_stride", Type::Int, "10"},
    {"engine.far_wall_cells", Type::Int, "5"},
    {"engine.far_wall_limit", Type::Real, "1e-08"},
    {"engine.mask_threshold", Type::Real, "1e-10"},
    {"detector.mode", Type::Text, "open"},
    {"robin.beta_re", Type::Real, "0"},
    {"robin.beta_im", Type::Real, "2"},
    {"grid.dim", Type::Int, "1"},
    {"grid.x_far", Type::Real, "-30"},
    {"grid.nodes", Type::Int, "4096"},
    {"grid.buffer_length", Type::Real, "0"},
    {"grid.y_lo", Type::Real, "-20"},
    {"grid.y_hi", Type::Real, "20"},
    {"grid.ny", Type::Int, "256"},
    {"physics.hbar", Type::Real, "1"},
    {"physics.mass", Type::Real, "1"},
    {"state.kind", Type::Text, "gaussian"},
    {"gaussian.x0", Type::Real, "-10"},
    {"gaussian.s", Type::Real, "1"},
    {"gaussian.k0", Type::Real, "2"},
    {"gaussian.t0", Type::Real, "0"},
    {"lateral.y0", Type::Real, "0"},
    {"lateral.s", Type::Real, "1"},
    {"lateral.ky", Type::Real, "0"},
    {"backflow.k1", Type::Real, "10"},
    {"backflow.k2", Type::Real, "25"},
    {"backflow.w1", Type::Real, "1"},
    {"backflow.w2", Type::Real, "0.4857"},
    {"backflow.s", Type::Real, "1"},
    {"backflow.x0", Type::Real, "-7.2"},
    {"output.bin_width", Type::Real, "0.25"},
    {"output.surface_bins", Type::Int, "16"},
    {"compare.engines", Type::TextList, ""},
    {"convergence.nodes", Type::IntList, ""},
    {"convergence.dt", Type::RealList, ""},
    {"resolution.min_points", Type::Real, "8"},
    {"resolution.max_tail_mass", Type::Real, "1e-12"},
};

const Key *find_key(const std::string &k) {
  for (const auto &e : kKeys)
    if (k == e.name) return &e;
  return nullptr;
}

std::string trim(const std::string &s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::string format_real(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_real(const std::string &s, const std::string &key, int line) {
  double v = 0.0;
  const char *b = s.data(), *e = s.data() + s.size();
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v))
    throw ConfigError(key + ": expected a finite real number, got '" + s + "'", key, line);
  return v;
}

long long parse_int(const std::string &s, const std::string &key, int line) {
  long long v = 0;
  const char *b = s.data(), *e = s.data() + s.size();
  auto r = std::from_chars(b, e, v);
  if (r.ec != std::errc() || r.ptr != e) throw ConfigError(key + ": expected an integer, got '" + s + "'", key, line);
  if (v < -(1LL << 31) || v > (1LL << 31) - 1) throw ConfigError(key + ": integer out of range", key, line);
  return v;
}

std::string canonical_value(const Key &k, const std::string &raw, int line) {
  const std::string key = k.name;
  switch (k.type) {
    case Type::Real: return format_real(parse_real(raw, key, line));
    case Type::Int: return std::to_string(parse_int(raw, key, line));
    case Type::Text:
      if (raw.empty()) throw ConfigError(key + ": empty value", key, line);
      return raw;
    case Type::RealList:
    case Type::IntList:
    case Type::TextList: {
      std::string out;
      for (const auto &item : split_list(raw)) {
        if (!out.empty()) out += ", ";
        if (k.type == Type::RealList)
          out += format_real(parse_real(item, key, line));
        else if (k.type == Type::IntList)
          out += std::to_string(parse_int(item, key, line));
        else
          out += item;
      }
      return out;
    }
  }
  return raw;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> config_schema() {
  std::vector<std::pair<std::string, std::string>> v;
  for (const auto &k : kKeys) v.emplace_back(k.name, k.def);
  return v;
}

int RunConfig::buffer_nodes() const {
  const double h = -x_far / (nodes - 1);
  return static_cast<int>(std::lround(buffer_length / h));
}

Grid RunConfig::grid() const {
  if (dim == 2) return Grid::rectangle(x_far, nodes, buffer_nodes(), y_lo, y_hi, ny);
  return Grid::line(x_far, nodes, buffer_nodes());
}

std::string ParsedConfig::canonical_text() const {
  std::string out;
  for (const auto &k : kKeys) {
    out += k.name;
    out += " = ";
    out += values.at(k.name);
    out += '\n';
  }
  return out;
}

std::string ParsedConfig::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canonical_text()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Scenario build_scenario(const RunConfig &cfg, std::optional<int> nodes) {
  RunConfig rc = cfg;
  if (nodes) rc.nodes = *nodes;
  Scenario s;
  s.constants = rc.constants;
  s.grid = rc.grid();
  if (rc.state == "backflow") {
    s.backflow = make_backflow_state(rc.bf_k1, rc.bf_k2, {rc.bf_w1, rc.bf_w2}, rc.bf_s, rc.bf_x0, rc.constants);
    s.analytic = s.backflow->state;
  } else {
    s.analytic = Superposition::single(rc.gaussian);
  }
  const GaussianParams *lat = rc.dim == 2 ? &rc.lateral : nullptr;
  s.initial = sample(s.analytic, rc.constants, s.grid, 0.0, lat);
  const double p = interior_probability(s.initial);
  if (!(p > 0.0)) throw ConfigError("initial state has no probability inside the domain", "gaussian.x0");
  for (auto &z : s.initial.psi) z /= std::sqrt(p);
  s.tail_mass = tail_mass_outside(s.analytic, rc.constants, rc.x_far, 0.0);
  s.resolution = resolution_check(s.initial, rc.min_points);
  return s;
}

ParsedConfig parse_config(const std::string &text) {
  ParsedConfig pc;
  std::istringstream is(text);
  std::string line;
  int ln = 0;
  std::map<std::string, std::string> given;
  while (std::getline(is, line)) {
    ++ln;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(ln) + ": expected 'section.key = value'", {}, ln);
    const std::string key = trim(line.substr(0, eq));
    const std::string raw = trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() || key.find('.', dot + 1) != std::string::npos)
      throw ConfigError("line " + std::to_string(ln) + ": key '" + key + "' must have the form section.key", key, ln);
    const Key *k = find_key(key);
    if (!k) throw ConfigError("line " + std::to_string(ln) + ": unknown key '" + key + "'", key, ln);
    if (pc.lines.count(key))
      throw ConfigError("line " + std::to_string(ln) + ": key '" + key + "' given twice", key, ln);
    pc.lines[key] = ln;
    given[key] = canonical_value(*k, raw, ln);
  }
  for (const auto &k : kKeys) pc.values[k.name] = given.count(k.name) ? given[k.name] : std::string(k.def);

  auto line_of = [&](const std::string &k) { return pc.lines.count(k) ? pc.lines.at(k) : 0; };
  auto fail = [&](const std::string &k, const std::string &what) { throw ConfigError(k + ": " + what, k, line_of(k)); };
  auto real = [&](const std::string &k) { return parse_real(pc.values.at(k), k, line_of(k)); };
  auto integer = [&](const std::string &k) { return static_cast<int>(parse_int(pc.values.at(k), k, line_of(k))); };
  auto str = [&](const std::string &k) { return pc.values.at(k); };

  RunConfig &r = pc.run;
  r.name = str("run.name");
  try {
    r.engine.kind = parse_engine_kind(str("engine.kind"));
  } catch (const ConfigError &) {
    fail("engine.kind", "unknown engine '" + str("engine.kind") + "' (reference, robin, ideal-psi, ideal-hydro)");
  }
  r.engine.dt = real("engine.dt");
  r.engine.steps = integer("engine.steps");
  r.engine.window = integer("engine.window");
  r.engine.cfl_safety = real("engine.cfl_safety");
  r.engine.conservation_tol = real("engine.tolerance");
  r.engine.stop_threshold = real("engine.stop_threshold");
  r.engine.snapshot_stride = integer("engine.snapshot_stride");
  r.engine.far_wall_cells = integer("engine.far_wall_cells");
  r.engine.far_wall_limit = real("engine.far_wall_limit");
  r.engine.mask_threshold = real("engine.mask_threshold");
  const std::string mode = str("detector.mode");
  if (mode == "open")
    r.engine.detector = DetectorMode::Open;
  else if (mode == "walled")
    r.engine.detector = DetectorMode::Walled;
  else
    fail("detector.mode", "expected open or walled");
  r.engine.beta = {real("robin.beta_re"), real("robin.beta_im")};
  if (r.engine.beta.imag() < 0.0)
    fail("robin.beta_im", "the Robin condition needs Im beta >= 0; a negative imaginary part would inject probability");
  if (!(r.engine.dt > 0.0)) fail("engine.dt", "time step must be positive");
  try {
    r.engine.validate();
  } catch (const ConfigError &e) {
    fail(e.key(), e.what());
  }

  r.dim = integer("grid.dim");
  if (r.dim != 1 && r.dim != 2) fail("grid.dim", "must be 1 or 2");
  r.x_far = real("grid.x_far");
  if (!(r.x_far < 0.0)) fail("grid.x_far", "must be negative (the detector is at x = 0)");
  r.nodes = integer("grid.nodes");
  if (r.nodes < 8) fail("grid.nodes", "need at least 8 nodes");
  r.buffer_length = real("grid.buffer_length");
  if (r.buffer_length < 0.0) fail("grid.buffer_length", "must be non-negative");
  r.y_lo = real("grid.y_lo");
  r.y_hi = real("grid.y_hi");
  r.ny = integer("grid.ny");
  if (r.dim == 2) {
    if (!(r.y_hi > r.y_lo)) fail("grid.y_hi", "must exceed grid.y_lo");
    if (r.ny < 8) fail("grid.ny", "need at least 8 nodes");
  }
  r.constants.hbar = real("physics.hbar");
  r.constants.mass = real("physics.mass");
  if (!(r.constants.hbar > 0.0)) fail("physics.hbar", "must be positive");
  if (!(r.constants.mass > 0.0)) fail("physics.mass", "must be positive");

  r.state = str("state.kind");
  if (r.state != "gaussian" && r.state != "backflow") fail("state.kind", "expected gaussian or backflow");
  r.gaussian = {real("gaussian.x0"), real("gaussian.s"), real("gaussian.k0"), real("gaussian.t0")};
  if (!(r.gaussian.s > 0.0)) fail("gaussian.s", "width must be positive");
  r.lateral = {real("lateral.y0"), real("lateral.s"), real("lateral.ky"), r.gaussian.t0};
  if (!(r.lateral.s > 0.0)) fail("lateral.s", "width must be positive");
  r.bf_k1 = real("backflow.k1");
  r.bf_k2 = real("backflow.k2");
  r.bf_w1 = real("backflow.w1");
  r.bf_w2 = real("backflow.w2");
  r.bf_s = real("backflow.s");
  r.bf_x0 = real("backflow.x0");
  if (r.state == "backflow" && r.dim != 1) fail("state.kind", "the backflow state is 1D");

  r.bin_width = real("output.bin_width");
  if (!(r.bin_width > 0.0)) fail("output.bin_width", "must be positive");
  r.surface_bins = integer("output.surface_bins");
  if (r.surface_bins < 1) fail("output.surface_bins", "must be at least 1");

  for (const auto &e : split_list(str("compare.engines"))) {
    try {
      r.compare_engines.push_back(parse_engine_kind(e));
    } catch (const ConfigError &) {
      fail("compare.engines", "unknown engine '" + e + "'");
    }
  }
  for (const auto &v : split_list(str("convergence.nodes")))
    r.ladder_nodes.push_back(static_cast<int>(parse_int(v, "convergence.nodes", line_of("convergence.nodes"))));
  for (const auto &v : split_list(str("convergence.dt")))
    r.ladder_dt.push_back(parse_real(v, "convergence.dt", line_of("convergence.dt")));
  r.min_points = real("resolution.min_points");
  r.max_tail_mass = real("resolution.max_tail_mass");

  if (r.engine.kind == EngineKind::Robin && r.buffer_length != 0.0)
    fail("grid.buffer_length", "the Robin engine works on the interior only; set 0");
  if (r.engine.kind == EngineKind::IdealHydro) {
    if (r.dim != 1) fail("grid.dim", "the hydro engine is 1D only");
    if (r.buffer_length != 0.0) fail("grid.buffer_length", "the hydro engine works on the interior only; set 0");
  }
  if (r.engine.detector == DetectorMode::Walled && r.buffer_length != 0.0)
    fail("grid.buffer_length", "a walled detector has nothing beyond it; set 0");

  // scenario checks
  Scenario sc;
  try {
    sc = build_scenario(r);
  } catch (const NoBackflowError &e) {
    fail("backflow.k1", e.what());
  }
  // a truncated tail also spoils the spectrum, so report it first
  if (sc.tail_mass > r.max_tail_mass) {
    std::ostringstream os;
    os << "initial probability outside the interior is " << sc.tail_mass << " > " << r.max_tail_mass
       << "; move the packet away from the walls";
    fail(r.state == "backflow" ? "backflow.x0" : "gaussian.x0", os.str());
  }
  if (!sc.resolution.ok) {
    std::ostringstream os;
    os << "grid does not resolve the initial state: " << sc.resolution.points_per_wavelength
       << " points per wavelength of the fastest mode, need " << r.min_points;
    fail("grid.nodes", os.str());
  }
  return pc;
}

ParsedConfig load_config(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file '" + path + "'", "--config");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace toa
