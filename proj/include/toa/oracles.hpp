#pragma once

#include <string>
#include <utility>
#include <vector>

#include "toa/errors.hpp"
#include "toa/fields.hpp"

namespace toa {

/// Initial Gaussian (2 pi s^2)^(-1/4) exp(-(x-x0)^2/4s^2 + i k0 (x-x0)).
/// The state at simulation time t is the free evolution over t + t0.
struct GaussianParams {
  double x0 = -10.0;
  double s = 1.0;
  double k0 = 2.0;
  double t0 = 0.0;

  void validate() const;
};

/// Closed-form free evolution (complex-width formula).
cd analytic_gaussian(const GaussianParams &p, const PhysicalConstants &c, double x, double t);
/// Exact x-derivative of analytic_gaussian.
cd analytic_gaussian_dx(const GaussianParams &p, const PhysicalConstants &c, double x, double t);
double analytic_density(const GaussianParams &p, const PhysicalConstants &c, double x, double t);
/// (hbar/m) Im(conj(psi) psi_x) from the closed form.
double analytic_flux(const GaussianParams &p, const PhysicalConstants &c, double x, double t);
/// Free-evolution probability of x > a at time t (erfc closed form).
double analytic_mass_right_of(const GaussianParams &p, const PhysicalConstants &c, double a, double t);
/// Position variance s^2 + (hbar (t+t0) / 2 m s)^2.
double analytic_variance(const GaussianParams &p, const PhysicalConstants &c, double t);

/// Normalized linear combination of Gaussians.
class Superposition {
 public:
  Superposition() = default;
  Superposition(std::vector<GaussianParams> parts, std::vector<cd> weights);
  static Superposition single(const GaussianParams &p);

  cd psi(const PhysicalConstants &c, double x, double t) const;
  cd psi_dx(const PhysicalConstants &c, double x, double t) const;
  double density(const PhysicalConstants &c, double x, double t) const;
  double flux(const PhysicalConstants &c, double x, double t) const;

  const std::vector<GaussianParams> &parts() const { return parts_; }
  /// Weights after normalization.
  const std::vector<cd> &weights() const { return weights_; }
  /// Norm of the combination with the normalized weights (closed-form overlaps).
  double norm_sq(const PhysicalConstants &c) const;

 private:
  std::vector<GaussianParams> parts_;
  std::vector<cd> weights_;
};

/// Samples the superposition on every node of g at time t. On a 2D grid the
/// state is the product with the lateral Gaussian `lateral` (x0, k0 read as
/// y0, ky), which free evolution keeps separable.
WaveField sample(const Superposition &s, const PhysicalConstants &c, const Grid &g, double t = 0.0,
                 const GaussianParams *lateral = nullptr);

/// Probability of the closed form outside [x_far, 0] at time t (quadrature).
double tail_mass_outside(const Superposition &s, const PhysicalConstants &c, double x_far, double t = 0.0);

/// Signed time integral of the closed-form flux at x over [ta, tb]
/// (adaptive Gauss-Kronrod on sub-intervals).
double flux_integral(const Superposition &s, const PhysicalConstants &c, double x, double ta, double tb);

/// Cumulative flux integral at x from times[0] to each times[k] (fixed
/// Gauss-Legendre rule on pieces short against the packet transit time).
std::vector<double> flux_cumulative(const Superposition &s, const PhysicalConstants &c, double x,
                                    const std::vector<double> &times);

/// Certificate that the flux at x is negative at time t.
struct BackflowWitness {
  double x = 0.0;
  double t = 0.0;
  double flux = 0.0;
  double max_abs_flux = 0.0;
};

struct BackflowState {
  Superposition state;
  BackflowWitness witness;
  double k1 = 0.0, k2 = 0.0;
  double weight_ratio = 0.0;  ///< amplitude of the k2 part relative to the k1 part
  double s = 0.0;
  double x0 = 0.0;
  std::string scanned;

  /// Re-evaluates the witness from the closed form.
  bool verify(const PhysicalConstants &c) const;
};

class NoBackflowError : public Error {
 public:
  explicit NoBackflowError(const std::string &what) : Error(ErrorCategory::Domain, what) {}
};

/// Two Gaussians sharing (x0, s) with wavenumbers k1, k2. `weights` are
/// tried first; if they give no negative flux at the detector (x = 0) a box
/// of amplitude ratios and widths is scanned and the first certified
/// instance is returned. Throws NoBackflowError with the box description.
BackflowState make_backflow_state(double k1, double k2, std::pair<double, double> weights, double s,
                                  double x0, const PhysicalConstants &c = {});

/// Spectral resolution heuristic: the wavenumber below which all but
/// `tail` of |psi_hat|^2 lies, and the resulting points per wavelength.
struct ResolutionReport {
  double k_max = 0.0;
  double points_per_wavelength = 0.0;
  bool ok = false;
};
ResolutionReport resolution_check(const WaveField &psi, double min_points = 8.0, double tail = 1e-10);

}  // namespace toa
