#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "toa/errors.hpp"
#include "toa/runner.hpp"

using namespace toa;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string &name) {
  fs::path d = fs::temp_directory_path() / ("toa-test-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

const char *kSmall =
    "engine.kind = ideal-psi\n"
    "engine.dt = 0.01\n"
    "engine.steps = 200\n"
    "grid.x_far = -20\n"
    "grid.nodes = 512\n"
    "grid.buffer_length = 20   # beyond the plane\n"
    "gaussian.x0 = -8\n";

int line_of_error(const std::string &text) {
  try {
    parse_config(text);
  } catch (const ConfigError &e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_SUITE("cli-runner") {

TEST_CASE("minimal config gets defaults and a canonical echo") {
  const ParsedConfig pc = parse_config("engine.kind = reference\ngrid.nodes = 1024\ngaussian.x0 = -12\n");
  CHECK(pc.run.engine.kind == EngineKind::Reference);
  CHECK(pc.run.engine.dt == 0.0025);
  CHECK(pc.run.gaussian.k0 == 2.0);
  const std::string echo = pc.canonical_text();
  CHECK(echo.find("grid.nodes = 1024\n") != std::string::npos);
  CHECK(echo.find("engine.window = 8\n") != std::string::npos);
  // idempotent
  const ParsedConfig again = parse_config(echo);
  CHECK(again.canonical_text() == echo);
  CHECK(again.hash() == pc.hash());
  // formatting does not change the hash
  CHECK(parse_config("  engine.kind=reference # x\n\ngrid.nodes = 1024\ngaussian.x0 = -12.0\n").hash() == pc.hash());
  CHECK(parse_config("engine.kind = reference\ngrid.nodes = 2048\ngaussian.x0 = -12\n").hash() != pc.hash());
}

TEST_CASE("config errors carry key and line") {
  try {
    parse_config("engine.dt = 0.01\nrobin.beta_im = -1\n");
    FAIL("accepted a negative Im beta");
  } catch (const ConfigError &e) {
    CHECK(e.key() == "robin.beta_im");
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("Im beta >= 0") != std::string::npos);
  }
  CHECK(line_of_error("engine.dt = 0.01\n\nengine.colour = red\n") == 3);
  CHECK(line_of_error("engine.dt = fast\n") == 1);
  CHECK(line_of_error("grid.nodes = 12.5\n") == 1);
  CHECK(line_of_error("just words\n") == 1);
  CHECK(line_of_error("engine = 1\n") == 1);
  CHECK(line_of_error("engine.dt = 0.01\nengine.dt = 0.02\n") == 2);
  CHECK(line_of_error("engine.dt = -0.01\n") == 1);
  CHECK(line_of_error("engine.kind = split-step\n") == 1);
  // resolution heuristic
  CHECK_THROWS_WITH_AS(parse_config("grid.nodes = 64\n"), doctest::Contains("points per wavelength"), ConfigError);
  // tail mass rule
  CHECK_THROWS_WITH_AS(parse_config("gaussian.x0 = -3\n"), doctest::Contains("outside the interior"), ConfigError);
  CHECK_THROWS_AS(parse_config("engine.kind = robin\ngrid.buffer_length = 5\n"), ConfigError);
}

TEST_CASE("run writes the artifacts deterministically") {
  const fs::path out = scratch("run");
  CommandOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  const ParsedConfig pc = parse_config(kSmall);
  CommandResult a = cmd_run(pc, o);
  CHECK(fs::path(a.dir).filename() == "run-" + pc.hash());
  for (const char *f : {"record.csv", "arrival.csv", "manifest.json", "plot.gp"}) CHECK(fs::exists(fs::path(a.dir) / f));
  const std::string rec1 = slurp(fs::path(a.dir) / "record.csv");
  const std::string arr1 = slurp(fs::path(a.dir) / "arrival.csv");
  const std::string man1 = slurp(fs::path(a.dir) / "manifest.json");
  CHECK(rec1.substr(0, rec1.find('\n')) == "t,flux,interior_prob,surface_prob,budget_error");
  CHECK(arr1.rfind("bin_left,bin_right,mass\n", 0) == 0);
  CHECK(arr1.find("\nnever,,") != std::string::npos);

  auto m = nlohmann::json::parse(man1);
  CHECK(m["config_hash"] == pc.hash());
  CHECK(m["flags"]["far_wall_contaminated"] == false);
  CHECK(m["flags"]["clamp_events"] == 0);
  CHECK(m["flags"].contains("truncated"));
  CHECK(m["outputs"].size() == 4);

  CommandResult b = cmd_run(pc, o);
  CHECK(slurp(fs::path(b.dir) / "record.csv") == rec1);
  CHECK(slurp(fs::path(b.dir) / "arrival.csv") == arr1);
  CHECK(slurp(fs::path(b.dir) / "manifest.json") == man1);
  // no temporary files left behind
  int n = 0;
  for (const auto &e : fs::directory_iterator(a.dir)) n += e.path().filename().string()[0] == '.';
  CHECK(n == 0);
}

TEST_CASE("walled detector: everything lands in the never event") {
  const fs::path out = scratch("walled");
  CommandOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  const ParsedConfig pc = parse_config(
      "engine.dt = 0.01\nengine.steps = 300\ndetector.mode = walled\ngrid.x_far = -20\ngrid.nodes = 512\ngaussian.x0 = -8\n");
  CommandResult r = cmd_run(pc, o);
  const std::string arr = slurp(fs::path(r.dir) / "arrival.csv");
  CHECK(arr.find("\nnever,,1\n") != std::string::npos);
}

TEST_CASE("horizon 0 keeps the initial snapshot only") {
  const fs::path out = scratch("zero");
  CommandOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  const ParsedConfig pc = parse_config(std::string(kSmall) + "engine.stop_threshold = 0\n" + "output.bin_width = 1\n");
  ParsedConfig z = pc;
  z.run.engine.steps = 0;
  CommandResult r = cmd_run(z, o);
  const std::string rec = slurp(fs::path(r.dir) / "record.csv");
  CHECK(std::count(rec.begin(), rec.end(), '\n') == 2);
  CHECK(rec.find("\n0,0,") != std::string::npos);
}

TEST_CASE("compare needs two engines and reports verdicts") {
  const fs::path out = scratch("compare");
  CommandOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  CHECK_THROWS_AS(cmd_compare(parse_config(std::string(kSmall) + "compare.engines = ideal-psi\n"), o), ConfigError);
  const ParsedConfig pc = parse_config(std::string(kSmall) + "compare.engines = ideal-psi, reference, robin\n");
  o.jobs = 2;
  CommandResult r = cmd_compare(pc, o);
  auto j = nlohmann::json::parse(slurp(fs::path(r.dir) / "compare.json"));
  REQUIRE(j["curves"].size() == 3);
  CHECK(j["curves"][0]["name"] == "ideal-psi:arrival");
  CHECK(j["curves"][0]["monotone"] == true);
  CHECK(j["curves"][1]["name"] == "reference:daumer");
  CHECK(j["curves"][1]["sup_gap_to_arrival"].get<double>() < 1e-6);
  CHECK(j["curves"][2]["name"] == "robin:interior_loss");
  const std::string csv = slurp(fs::path(r.dir) / "compare.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "t,ideal-psi:arrival,reference:daumer,robin:interior_loss,analytic:flux_integral");
  // jobs does not change the outputs
  o.jobs = 1;
  CommandResult r1 = cmd_compare(pc, o);
  CHECK(slurp(fs::path(r1.dir) / "compare.csv") == csv);
}

TEST_CASE("convergence command guards the ladder") {
  const fs::path out = scratch("conv");
  CommandOptions o;
  o.out_dir = out.string();
  o.quiet = true;
  CHECK_THROWS_AS(cmd_convergence(parse_config(std::string(kSmall) + "convergence.nodes = 512, 256\nconvergence.dt = 0.01, 0.005\n"), o),
                  ConfigError);
  CHECK_THROWS_AS(cmd_convergence(parse_config(kSmall), o), ConfigError);
}

TEST_CASE("presets resolve by name") {
  const auto names = preset_names();
  for (const char *n : {"backflow", "gaussian-right", "screen-2d", "walled"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  for (const auto &n : names) CHECK_NOTHROW(load_config(resolve_config(n)));
  CHECK_THROWS_AS(resolve_config("no-such-preset"), ConfigError);
}

TEST_CASE("exit codes and number format") {
  CHECK(exit_code(ErrorCategory::Config) == 2);
  CHECK(exit_code(ErrorCategory::Numerical) == 3);
  CHECK(exit_code(ErrorCategory::Validity) == 3);
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-300) == "1e-300");
  RunFlags f;
  CHECK(validity_failures(f).empty());
  f.far_wall_contaminated = true;
  CHECK(validity_failures(f).size() == 1);
}

}  // TEST_SUITE
