#pragma once

#include <memory>
#include <string>
#include <vector>

#include "toa/fields.hpp"
#include "toa/propagators.hpp"

namespace toa {

enum class EngineKind { Reference, Robin, IdealPsi, IdealHydro };
enum class DetectorMode { Open, Walled };

const char *engine_name(EngineKind k);
EngineKind parse_engine_kind(const std::string &s);

struct EngineConfig {
  EngineKind kind = EngineKind::IdealPsi;
  double dt = 0.0025;
  int steps = 10000;
  cd beta{0.0, 1.0};           ///< Robin parameter, Im beta >= 0
  int window = 8;              ///< reentry absorption window (cells)
  double cfl_safety = 0.5;     ///< hydro engine: max|v| dt/dx bound
  double conservation_tol = 1e-10;
  double stop_threshold = 1e-3;  ///< stop once interior probability drops below
  int snapshot_stride = 10;
  int field_stride = 0;        ///< keep fields every n-th snapshot (0: first/last)
  DetectorMode detector = DetectorMode::Open;
  int far_wall_cells = 5;
  double far_wall_limit = 1e-8;
  double mask_threshold = 1e-10;  ///< hydro node mask, relative to max rho

  void validate() const;
};

/// Probabilities exchanged during one step, per detector node.
struct StepOutcome {
  /// Signed probability per unit area that crossed the detector plane
  /// (positive = outflow) before any gating.
  std::vector<double> flux;
  /// Increment of sigma (>= 0).
  std::vector<double> dsigma;
  /// rho at the detector node, averaged over the step.
  std::vector<double> boundary_density;
  /// m v at the detector node from the mid-step field (normal and lateral).
  std::vector<double> impact_momentum;
  std::vector<double> impact_momentum_y;
  int clamp_events = 0;
  int blocked_reentry = 0;
  int masked = 0;
};

/// Uniform stepping interface over the four engine kinds.
class Engine {
 public:
  virtual ~Engine() = default;
  virtual StepOutcome step() = 0;
  virtual double time() const = 0;
  virtual double interior_probability() const = 0;
  virtual const SurfaceDensity &surface() const = 0;
  /// Largest probability within `cells` cells of any far wall.
  virtual double far_wall_probability(int cells) const = 0;
  virtual std::shared_ptr<const WaveField> wave() const { return nullptr; }
  virtual std::shared_ptr<const MadelungState> madelung() const { return nullptr; }
  virtual bool carries_detector() const = 0;
};

std::unique_ptr<Engine> make_engine(const EngineConfig &cfg, const WaveField &initial,
                                    const SurfaceDensity &sigma0, const PhysicalConstants &c);
std::unique_ptr<Engine> make_engine(const EngineConfig &cfg, const MadelungState &initial,
                                    const SurfaceDensity &sigma0, const PhysicalConstants &c);

/// Single steps with freshly assembled operators (convenient, not fast).
WaveField step_reference(const WaveField &psi, double dt, const PhysicalConstants &c = {});
WaveField step_robin(const WaveField &psi, double dt, cd beta, const PhysicalConstants &c = {});
std::pair<WaveField, SurfaceDensity> step_ideal_detector_psi(const WaveField &psi, const SurfaceDensity &sigma,
                                                            double dt, const PhysicalConstants &c = {},
                                                            int window = 8);
std::pair<MadelungState, SurfaceDensity> step_ideal_detector_hydro(const MadelungState &s,
                                                                  const SurfaceDensity &sigma, double dt,
                                                                  const PhysicalConstants &c = {});

struct EvolutionSnapshot {
  double t = 0.0;
  double interior = 0.0;
  double surface = 0.0;
  SurfaceDensity sigma;
  /// Signed flux per detector node integrated since the previous snapshot.
  std::vector<double> flux_since_last;
  std::shared_ptr<const WaveField> wave;
  std::shared_ptr<const MadelungState> madelung;
};

struct RunFlags {
  double far_wall_max = 0.0;
  bool far_wall_contaminated = false;
  int clamp_events = 0;
  bool clamp_warning = false;  ///< clamping on more than 1% of steps
  int blocked_reentry_steps = 0;
  int mask_events = 0;
  bool truncated = false;
  double tail_mass = 0.0;
  double max_budget_error = 0.0;
  int sigma_violations = 0;
  int robin_decay_violations = 0;
  bool stopped_early = false;
  int steps_taken = 0;
};

struct DetectorRecord {
  EngineKind kind = EngineKind::IdealPsi;
  DetectorMode mode = DetectorMode::Open;
  Grid grid;
  PhysicalConstants constants;
  double dt = 0.0;
  double stop_threshold = 0.0;
  std::vector<EvolutionSnapshot> snapshots;

  // one entry per step, times are step ends
  std::vector<double> step_time;
  std::vector<double> step_interior;
  std::vector<double> step_surface;
  std::vector<std::vector<double>> step_flux;
  std::vector<std::vector<double>> step_dsigma;
  std::vector<std::vector<double>> step_boundary_density;
  std::vector<std::vector<double>> step_impact_momentum;
  std::vector<std::vector<double>> step_impact_momentum_y;

  /// Per detector node: sum of dsigma * m v at transfer, and sum of dsigma.
  std::vector<double> impact_momentum_sum;
  std::vector<double> impact_mass;

  RunFlags flags;

  double start_time() const { return snapshots.empty() ? 0.0 : snapshots.front().t; }
  double horizon() const { return snapshots.empty() ? 0.0 : snapshots.back().t; }
  bool ideal() const { return kind == EngineKind::IdealPsi || kind == EngineKind::IdealHydro; }
};

DetectorRecord run_evolution(const WaveField &initial, const SurfaceDensity &sigma0, const EngineConfig &cfg,
                             const PhysicalConstants &c = {});
DetectorRecord run_evolution(const MadelungState &initial, const SurfaceDensity &sigma0,
                             const EngineConfig &cfg, const PhysicalConstants &c = {});
/// Drives an already constructed engine.
DetectorRecord run_engine(Engine &engine, const EngineConfig &cfg, const Grid &g, const PhysicalConstants &c);

}  // namespace toa
