#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nsflab/expr.hpp"

namespace nsflab {

using Vec3 = std::array<double, 3>;
using Tensor3 = std::array<Vec3, 3>;

/// Molecular equation of state generated by a pressure profile P(Z), Z = rho/theta^(3/2):
///   p_M = theta^(5/2) P(Z),  e_M = (3/2) theta (theta^(3/2)/rho) P(Z),  s_M = S(Z),
/// with S'(Z) = -(3/2)((5/3)P(Z) - P'(Z)Z)/Z^2 and S(1) = S0.
struct GasModel {
  std::string name = "ideal";
  /// P and P' evaluated together.
  std::function<Dual(double)> profile;
  /// Source text of P(Z), kept for reports and content hashes.
  std::string expression = "Z";
  double S0 = 0.0;
  /// Declared limit of P(Z)/Z^(5/3) and the tolerance used when checking it.
  double P_inf = 0.0;
  double P_inf_tol = 0.05;
  /// Declared tolerance for |S(Z_max)| when checking lim S = 0.
  double S_limit_tol = 1e-2;
  /// Closed forms are used when set (P(Z) = Z).
  bool ideal = false;

  [[nodiscard]] double P(double z) const { return profile(z).v; }
  [[nodiscard]] double dP(double z) const { return profile(z).d; }
  /// S'(Z) from the profile.
  [[nodiscard]] double dS(double z) const;
  /// S(Z): closed form for the ideal gas, adaptive quadrature of S' from Z = 1 otherwise.
  [[nodiscard]] double S(double z) const;

  static GasModel ideal_gas(double S0 = 0.0);
  /// Throws ConfigError if the expression does not parse.
  static GasModel from_expression(std::string name, const std::string& expression,
                                  double S0 = 0.0);
};

/// Transport coefficients mu(theta), eta(theta), kappa(theta) with the constants
/// of their growth envelopes.
struct TransportModel {
  std::string name = "default";
  std::function<double(double)> mu;
  std::function<double(double)> eta;
  std::function<double(double)> kappa;
  double b = 1.0;
  double mu_lower = 1.0;
  double eta_upper = 0.1;
  double kappa_lower = 1.0;
  double kappa_upper = 1.0;

  /// mu = 1 + theta^b, eta = (1 + theta^b)/10, kappa = 1 + theta^3.
  static TransportModel default_model(double b = 1.0);
  /// mu = 1 + theta, eta = 0, kappa = 1 + theta^3.
  static TransportModel canonical();
};

struct ScalingParams {
  double a = 0.0;
  double nu = 0.0;
  double omega = 0.0;
  double lambda = 0.0;

  /// Throws DomainError on non-finite or negative entries; with
  /// `require_positive`, also on a, nu or omega equal to zero.
  void validate(bool require_positive) const;
};

struct PressureParts {
  double molecular = 0.0;
  double radiation = 0.0;
  [[nodiscard]] double total() const { return molecular + radiation; }
};

// Full closures: molecular part plus radiation (a/3 theta^4, a theta^4/rho, 4a theta^3/(3 rho)).
[[nodiscard]] PressureParts pressure_parts(const GasModel& gas, double a, double rho, double theta);
[[nodiscard]] double pressure(const GasModel& gas, double a, double rho, double theta);
[[nodiscard]] double internal_energy(const GasModel& gas, double a, double rho, double theta);
/// rho * e; accepts rho = 0 (returns a theta^4).
[[nodiscard]] double energy_density(const GasModel& gas, double a, double rho, double theta);
[[nodiscard]] double entropy(const GasModel& gas, double a, double rho, double theta);
/// rho * s; accepts rho = 0 (molecular part vanishes in the limit).
[[nodiscard]] double entropy_density(const GasModel& gas, double a, double rho, double theta);

// Molecular parts only.
[[nodiscard]] double pressure_molecular(const GasModel& gas, double rho, double theta);
[[nodiscard]] double energy_molecular(const GasModel& gas, double rho, double theta);
[[nodiscard]] double entropy_molecular(const GasModel& gas, double rho, double theta);

/// c_v = d e_M / d theta. Throws ModelViolation if not strictly positive.
[[nodiscard]] double heat_capacity_cv(const GasModel& gas, double rho, double theta);
/// d e / d theta of the full closure.
[[nodiscard]] double heat_capacity_total(const GasModel& gas, double a, double rho, double theta);

struct PressureDerivatives {
  double d_rho = 0.0;
  double d_theta = 0.0;
};
[[nodiscard]] PressureDerivatives pressure_derivatives(const GasModel& gas, double a, double rho,
                                                       double theta);
[[nodiscard]] PressureDerivatives entropy_molecular_derivatives(const GasModel& gas, double rho,
                                                                double theta);

/// Isentropic sound speed of the full closure, c^2 = p_rho + theta p_theta^2 / (rho^2 c_v).
[[nodiscard]] double sound_speed(const GasModel& gas, double a, double rho, double theta);

/// Residuals of Gibbs' relation for the full closures:
///   first  = theta ds/dtheta - de/dtheta
///   second = theta ds/drho - de/drho - p d(1/rho)/drho
/// Partials by sixth-order centered differences with relative step eps^(1/7) / 2.
[[nodiscard]] std::pair<double, double> gibbs_residual(const GasModel& gas, double a, double rho,
                                                       double theta);

/// Same as gibbs_residual but with an arbitrary internal-energy closure; used to
/// show that the check detects inconsistent closures.
[[nodiscard]] std::pair<double, double> gibbs_residual_with(
    const GasModel& gas, double a, double rho, double theta,
    const std::function<double(double, double)>& energy);

/// Centered-difference step for argument x.
[[nodiscard]] double fd_step(double x);

/// Newton's law; the returned tensor is populated on the leading dim x dim block
/// (the flow is invariant in the remaining directions).
[[nodiscard]] Tensor3 stress_tensor(const TransportModel& transport, double nu, double theta,
                                    const Tensor3& grad_u, int dim = 3);
/// S : grad u written as nu (mu/2 |T|^2 + eta (div u)^2), T the traceless
/// symmetric part times two. Nonnegative by construction.
[[nodiscard]] double viscous_dissipation(const TransportModel& transport, double nu, double theta,
                                         const Tensor3& grad_u, int dim = 3);
/// |grad u + grad u^T - (2/3) div u I|^2 for a gradient restricted to dim x dim.
[[nodiscard]] double traceless_strain_norm2(const Tensor3& grad_u, int dim = 3);
/// Fourier's law q = -omega kappa(theta) grad theta.
[[nodiscard]] Vec3 heat_flux(const TransportModel& transport, double omega, double theta,
                             const Vec3& grad_theta);

struct HypothesisResult {
  std::string id;
  bool passed = false;
  std::vector<double> witnesses;
  std::string detail;
};

struct HypothesisReport {
  std::vector<HypothesisResult> results;
  /// Extremes of ((5/3)P - P'Z)/Z over the Z grid.
  double h3_ratio_min = 0.0;
  double h3_ratio_max = 0.0;

  [[nodiscard]] const HypothesisResult& get(const std::string& id) const;
  [[nodiscard]] std::string to_text() const;
};

/// Pass/fail per hypothesis H2, H3, H6, H7, H8, H9 over the supplied grids.
/// Never throws for smooth positive profiles; evaluation failures become FAIL entries.
[[nodiscard]] HypothesisReport hypothesis_report(const GasModel& gas,
                                                 const TransportModel& transport,
                                                 std::span<const double> z_grid,
                                                 std::span<const double> theta_grid);

struct AuxBounds {
  /// Smallest C with rho s_M <= C rho (1 + |log rho| + [log theta]^+) on the sample.
  double entropy_constant = 0.0;
  /// Largest c with rho e_M >= c (rho theta + rho^(5/3)) on the sample.
  double energy_constant = 0.0;
};

/// Throws ModelViolation if either constant is not finite and positive.
[[nodiscard]] AuxBounds aux_bounds_check(const GasModel& gas,
                                         std::span<const std::array<double, 2>> samples);

/// Log-spaced grid of n points in [lo, hi].
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace nsflab
