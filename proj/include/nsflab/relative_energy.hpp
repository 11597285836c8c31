#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nsflab/grid.hpp"
#include "nsflab/thermo.hpp"

namespace nsflab {

/// H_Theta(rho, theta) = rho (e - Theta s), full closures; rho = 0 allowed.
[[nodiscard]] double ballistic_free_energy(const GasModel& gas, double a, double rho,
                                           double theta, double Theta);
/// dH_Theta/drho at fixed theta. The radiation terms do not depend on rho,
/// leaving (3/2) theta P'(Z) - Theta (S(Z) + Z S'(Z)).
[[nodiscard]] double ballistic_free_energy_drho(const GasModel& gas, double rho, double theta,
                                                double Theta);

struct StatePoint {
  double rho = 1.0;
  double theta = 1.0;
  Vec3 u{0.0, 0.0, 0.0};
};

/// 1/2 rho |u - U|^2 + H_Theta(rho, theta) - dH_Theta(r, Theta)/drho (rho - r) - H_Theta(r, Theta).
[[nodiscard]] double relative_energy_density(const GasModel& gas, double a, const StatePoint& state,
                                             const StatePoint& ref);

/// Midpoint quadrature of the density. Throws UsageError on grid mismatch.
[[nodiscard]] double relative_energy(const Primitives& fields, const ReferenceFields& reference,
                                     const GasModel& gas, double a);
[[nodiscard]] double relative_energy(const FluidState& fields, const ReferenceFields& reference,
                                     const GasModel& gas, double a);
/// Pointwise density as a field on the shared grid.
[[nodiscard]] Field relative_energy_field(const Primitives& fields,
                                          const ReferenceFields& reference, const GasModel& gas,
                                          double a);

/// Closed rectangle [rho_lo, rho_hi] x [theta_lo, theta_hi].
struct StateBox {
  double rho_lo = 0.5;
  double rho_hi = 2.0;
  double theta_lo = 0.5;
  double theta_hi = 2.0;

  void validate() const;
  [[nodiscard]] bool contains(double rho, double theta) const {
    return rho >= rho_lo && rho <= rho_hi && theta >= theta_lo && theta <= theta_hi;
  }
};

struct CoercivityResult {
  double constant = 0.0;
  /// Sample attaining the minimum: (rho, theta, r, Theta, |u - U|).
  std::array<double, 5> argmin{};
  long used = 0;
  long excluded = 0;
};

/// Minimum of E-density / (|rho - r|^2 + |theta - Theta|^2 + |u - U|^2) over a
/// Sobol sample of K x K x [-1, 1]. Samples whose denominator is below 1e-8
/// are excluded. `skip` discards that many leading points of the sequence.
/// Throws ModelViolation if the minimum is not positive.
[[nodiscard]] CoercivityResult coercivity_constant(const GasModel& gas, double a, const StateBox& K,
                                                   long sample_count, std::uint64_t skip = 0);

struct ResidualBoundResult {
  double constant = 0.0;
  long used = 0;
  long excluded = 0;
};

/// Largest c with density >= c (1 + rho|u - U|^2 + rho e + rho |s|) over all
/// (state, reference) pairs; states inside K or on its boundary are excluded,
/// references must lie in K. Throws ModelViolation if c is not positive.
[[nodiscard]] ResidualBoundResult residual_lower_bound_check(const GasModel& gas, double a,
                                                             const StateBox& K,
                                                             std::span<const StatePoint> states,
                                                             std::span<const StatePoint> references);

/// Smooth cutoff equal to one on the inner rectangle and zero outside the
/// rectangle widened by the relative margin.
struct EssentialResidualWindow {
  double rho_lo = 0.5;
  double rho_hi = 2.0;
  double theta_lo = 0.5;
  double theta_hi = 2.0;
  double margin = 0.25;

  void validate() const;
  [[nodiscard]] double cutoff(double rho, double theta) const;
};

struct SplitParts {
  std::vector<double> essential;
  std::vector<double> residual;
};

/// essential = Phi F, residual = F - Phi F, Phi evaluated at the supplied points.
[[nodiscard]] SplitParts essential_residual_split(std::span<const double> values,
                                                  const EssentialResidualWindow& window,
                                                  std::span<const std::array<double, 2>> points);

struct QuadraticBoundsReport {
  double relative_energy = 0.0;
  double essential_lhs = 0.0;
  double residual_lhs = 0.0;
  /// Fitted constants lhs / E (zero when both sides vanish).
  double essential_constant = 0.0;
  double residual_constant = 0.0;
};

/// The cutoff is evaluated at the state (rho, theta) of the fields. Throws
/// UsageError if the reference leaves the inner window and ModelViolation if a
/// nonzero left side meets a vanishing relative energy.
[[nodiscard]] QuadraticBoundsReport quadratic_bounds_check(const Primitives& fields,
                                                           const ReferenceFields& reference,
                                                           const EssentialResidualWindow& window,
                                                           const GasModel& gas, double a);

struct RelativeEnergyReport {
  std::vector<double> times;
  std::vector<double> values;
  double sup_value = 0.0;
  double envelope = 0.0;

  static RelativeEnergyReport make(std::vector<double> times, std::vector<double> values,
                                   double envelope);
  [[nodiscard]] std::string to_text() const;
};

}  // namespace nsflab
