#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toa/engines.hpp"
#include "toa/oracles.hpp"

namespace toa {

/// Typed view of a scenario configuration.
struct RunConfig {
  std::string name = "run";
  EngineConfig engine;

  int dim = 1;
  double x_far = -30.0;
  int nodes = 4096;            ///< interior nodes along x (detector included)
  double buffer_length = 0.0;  ///< extent beyond the detector plane
  double y_lo = -20.0, y_hi = 20.0;
  int ny = 256;

  PhysicalConstants constants;

  std::string state = "gaussian";  ///< gaussian | backflow
  GaussianParams gaussian;
  GaussianParams lateral{0.0, 1.0, 0.0, 0.0};  ///< y0, sy, ky (2D)
  double bf_k1 = 10.0, bf_k2 = 25.0, bf_w1 = 1.0, bf_w2 = 0.4857, bf_s = 1.0, bf_x0 = -7.2;

  double bin_width = 0.25;
  int surface_bins = 16;

  std::vector<EngineKind> compare_engines;
  std::vector<int> ladder_nodes;
  std::vector<double> ladder_dt;

  double min_points = 8.0;
  double max_tail_mass = 1e-12;

  int buffer_nodes() const;
  Grid grid() const;
};

struct ParsedConfig {
  RunConfig run;
  /// Every known key with its canonical value (defaults included).
  std::map<std::string, std::string> values;
  /// Line on which each explicitly given key appeared.
  std::map<std::string, int> lines;

  std::string canonical_text() const;
  /// 64-bit FNV-1a of the canonical text, 16 hex digits.
  std::string hash() const;
};

/// Parses `section.key = value` lines (# comments). Unknown keys, type
/// mismatches and violated preconditions throw ConfigError with the key and
/// line. Runs the scenario checks (resolution, tail mass, backflow search).
ParsedConfig parse_config(const std::string &text);
ParsedConfig load_config(const std::string &path);

/// Keys accepted by parse_config with their defaults, in canonical order.
std::vector<std::pair<std::string, std::string>> config_schema();

/// Initial data and oracles for a configuration.
struct Scenario {
  Grid grid;
  WaveField initial;
  PhysicalConstants constants;
  Superposition analytic;  ///< free-evolution oracle along x
  std::optional<BackflowState> backflow;
  double tail_mass = 0.0;
  ResolutionReport resolution;
};

/// Builds the normalized initial state (interior probability 1) on the
/// configured grid. `nodes`, `dt` override the configured values.
Scenario build_scenario(const RunConfig &cfg, std::optional<int> nodes = std::nullopt);

}  // namespace toa
