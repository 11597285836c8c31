#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nsflab/grid.hpp"
#include "nsflab/nsf_solver.hpp"
#include "nsflab/thermo.hpp"

namespace nsflab {

/// The seven terms a, nu, omega, lambda, nu/sqrt(a), omega/a, (a/sqrt(nu^3 lambda))^(1/3).
[[nodiscard]] std::array<double, 7> rate_envelope_terms(const ScalingParams& s);
/// Maximum of rate_envelope_terms. Throws DomainError when a, nu or lambda is zero.
[[nodiscard]] double rate_envelope(const ScalingParams& s);

struct UniformBounds {
  double kinetic = 0.0;     // sup_t int rho |u|^2
  double rho_53 = 0.0;      // sup_t int rho^(5/3)
  double rho_theta = 0.0;   // sup_t int rho theta
  double radiation = 0.0;   // sup_t a int theta^4
  double strain = 0.0;      // nu int int |grad u + grad u^T - (2/3) div u I|^2
  double damping = 0.0;     // lambda int int |u|^2
  double heat = 0.0;        // omega int int (|grad theta|^2 + |log theta|^2)

  [[nodiscard]] std::string to_text() const;
};

/// Time integrals by the trapezoid rule over the snapshot instants.
[[nodiscard]] UniformBounds uniform_bounds(std::span<const FluidState> snapshots,
                                           const NsfRunConfig& config);

/// ||u||_4 / (||u||_6^(3/4) ||u||_2^(1/4)) of the pointwise magnitude; 0 for u = 0.
[[nodiscard]] double interpolation_ratio(const VectorField& u);
/// Worst ratio over the snapshots.
[[nodiscard]] double interpolation_check(std::span<const VectorField> velocities);

inline constexpr int kInequalityTerms = 9;

struct InequalityRow {
  double t = 0.0;
  double E = 0.0;
  /// Time integrals from 0 to t.
  double dissipation = 0.0;
  double damping = 0.0;
  std::array<double, kInequalityTerms> terms{};
  double lhs = 0.0;
  double rhs = 0.0;
  [[nodiscard]] double residual() const { return lhs - rhs; }
};

struct InequalitySeries {
  std::vector<InequalityRow> rows;
  /// max over instants of max(0, lhs - rhs).
  double max_excess = 0.0;
  /// max over instants of |lhs - rhs|.
  double max_abs = 0.0;
};

struct InequalityOptions {
  /// Multiplies the two right-hand terms paired with the dissipation (S : grad U
  /// and the heat-flux term); -1 is the sign mutation.
  double dissipation_sign = 1.0;
};

/// Evaluates both sides of the relative energy inequality along a run, with
/// the reference sampled at the same instants on the same grid. Throws
/// UsageError when the instants or grids do not match.
[[nodiscard]] InequalitySeries rel_energy_inequality_residual(std::span<const FluidState> nsf,
                                                      std::span<const ReferenceFields> reference,
                                                      const NsfRunConfig& config,
                                                      const InequalityOptions& options = {});

/// Header: t,E,dissipation,damping,T1..T9,lhs,rhs,lhs_minus_rhs.
void write_inequality_csv(const std::filesystem::path& path, const InequalitySeries& series);

}  // namespace nsflab
