// toa: batch front end for the detector engines.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "toa/errors.hpp"
#include "toa/runner.hpp"

namespace {

std::string first_comment(const std::string &path) {
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line))
    if (line.rfind("#", 0) == 0) return line.substr(line.find_first_not_of("# "));
  return {};
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Arrival-time statistics for ideal and absorbing detectors"};
  app.require_subcommand(1);
  toa::CommandOptions opt;
  std::string config;
  opt.log = &std::cout;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config, "config file or preset name")->required();
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--jobs", opt.jobs, "parallel engines or ladder rungs")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", opt.quiet, "no progress output");
    sub->add_flag("--strict", opt.strict, "exit 4 when a validity flag is raised");
  };
  auto *run = app.add_subcommand("run", "run one engine and write the arrival statistics");
  auto *compare = app.add_subcommand("compare", "run compare.engines on one scenario");
  auto *conv = app.add_subcommand("convergence", "refinement ladder against the analytic oracle");
  auto *presets = app.add_subcommand("presets", "list the shipped presets");
  add_common(run);
  add_common(compare);
  add_common(conv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (presets->parsed()) {
    for (const auto &n : toa::preset_names())
      std::cout << n << "\t" << first_comment(toa::preset_dir() + "/" + n + ".conf") << "\n";
    return 0;
  }

  try {
    const toa::ParsedConfig pc = toa::load_config(toa::resolve_config(config));
    toa::CommandResult res;
    if (run->parsed())
      res = toa::cmd_run(pc, opt);
    else if (compare->parsed())
      res = toa::cmd_compare(pc, opt);
    else
      res = toa::cmd_convergence(pc, opt);
    if (!res.validity_failures.empty()) {
      for (const auto &f : res.validity_failures) std::cerr << "validity: " << f << "\n";
      return 4;
    }
    return 0;
  } catch (const toa::ConfigError &e) {
    std::cerr << "config error";
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << ": " << e.what() << "\n";
    return 2;
  } catch (const toa::Error &e) {
    std::cerr << toa::category_name(e.category()) << " error: " << e.what() << "\n";
    return toa::exit_code(e.category());
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
