#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "toa/config.hpp"
#include "toa/convergence.hpp"
#include "toa/engines.hpp"

namespace toa {

inline constexpr const char *kToolVersion = "0.3.0";

struct CommandOptions {
  std::string out_dir = "out";
  int jobs = 1;
  bool quiet = false;
  bool strict = false;
  std::ostream *log = nullptr;  ///< progress lines unless quiet
};

struct CommandResult {
  std::string dir;                 ///< <out>/<verb>-<hash>
  std::vector<std::string> files;  ///< names inside dir
  std::vector<std::string> validity_failures;
};

/// Runs one engine on a scenario. Robin and hydro engines get the
/// interior-only grid.
DetectorRecord run_scenario(const RunConfig &cfg, EngineKind kind);

CommandResult cmd_run(const ParsedConfig &pc, const CommandOptions &opt);
CommandResult cmd_compare(const ParsedConfig &pc, const CommandOptions &opt);
CommandResult cmd_convergence(const ParsedConfig &pc, const CommandOptions &opt);

/// Flags that fail a run under --strict.
std::vector<std::string> validity_failures(const RunFlags &f);

std::vector<std::string> preset_names();
/// Config path for a preset name, or the argument itself if it is a file.
std::string resolve_config(const std::string &arg);
std::string preset_dir();

/// 0 ok, 2 config, 3 numerical (and every other engine error), 4 strict validity.
int exit_code(ErrorCategory c);

/// Shortest round-trip decimal form.
std::string format_number(double v);
/// Writes through a temporary file in the same directory and renames.
void write_atomic(const std::string &path, const std::string &content);

}  // namespace toa
