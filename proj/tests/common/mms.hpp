#pragma once

// Manufactured solutions for the one-dimensional NSF system. The forcing is
// U_t + F_x + damping evaluated on closed-form fields, with every derivative
// taken by a sixth-order centered difference of the closed forms; it never
// touches the solver's discrete operators.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>

#include "nsflab/nsf_solver.hpp"

namespace nsflab::testing {

struct MmsFields {
  std::function<double(double, double)> rho, u, theta;
};

inline double d6(const std::function<double(double)>& f, double x, double h = 1e-3) {
  return (f(x + 3 * h) - 9 * f(x + 2 * h) + 45 * f(x + h) - 45 * f(x - h) + 9 * f(x - 2 * h) -
          f(x - 3 * h)) /
         (60 * h);
}

/// Periodic travelling data on [0, 1].
inline MmsFields mms_periodic() {
  constexpr double k = 2.0 * std::numbers::pi;
  return {[=](double x, double t) { return 1.0 + 0.2 * std::sin(k * (x - 0.5 * t)); },
          [=](double x, double t) { return 0.2 + 0.1 * std::sin(k * x + t); },
          [=](double x, double t) { return 1.0 + 0.15 * std::cos(k * x - 0.7 * t); }};
}

/// Wall-compatible data on [0, 1]: rho, theta even and u odd about both walls.
inline MmsFields mms_slip() {
  constexpr double k = std::numbers::pi;
  return {[=](double x, double t) { return 1.0 + 0.2 * std::cos(k * x) * std::cos(t); },
          [=](double x, double t) { return 0.15 * std::sin(k * x) * (1.0 + 0.5 * std::sin(t)); },
          [=](double x, double t) { return 1.0 + 0.1 * std::cos(2 * k * x) * (1.0 - 0.3 * t); }};
}

/// Conservative variables (rho, m, E) of the closed-form fields.
inline std::array<double, 3> mms_conserved(const MmsFields& f, const NsfRunConfig& c, double x,
                                           double t) {
  const double r = f.rho(x, t), u = f.u(x, t), th = f.theta(x, t);
  return {r, r * u, 0.5 * r * u * u + energy_density(c.gas, c.scaling.a, r, th)};
}

inline std::array<double, 3> mms_flux(const MmsFields& f, const NsfRunConfig& c, double x, double t) {
  const double r = f.rho(x, t), u = f.u(x, t), th = f.theta(x, t);
  const double ux = d6([&](double y) { return f.u(y, t); }, x);
  const double thx = d6([&](double y) { return f.theta(y, t); }, x);
  const double p = pressure(c.gas, c.scaling.a, r, th);
  const double E = 0.5 * r * u * u + energy_density(c.gas, c.scaling.a, r, th);
  const double tau = c.scaling.nu * (4.0 / 3.0 * c.transport.mu(th) + c.transport.eta(th)) * ux;
  const double q = -c.scaling.omega * c.transport.kappa(th) * thx;
  return {r * u, r * u * u + p - tau, (E + p) * u - tau * u + q};
}

inline std::array<double, 3> mms_forcing(const MmsFields& f, const NsfRunConfig& c, double x, double t) {
  std::array<double, 3> s{};
  for (int m = 0; m < 3; ++m) {
    const double dt = d6([&](double tt) { return mms_conserved(f, c, x, tt)[m]; }, t);
    const double dx = d6([&](double y) { return mms_flux(f, c, y, t)[m]; }, x);
    s[m] = dt + dx;
  }
  const double u = f.u(x, t);
  s[1] += c.scaling.lambda * u;
  s[2] += c.scaling.lambda * u * u;
  return s;
}

inline FluidState mms_state(const MmsFields& f, const NsfRunConfig& c, double t) {
  FluidState s = FluidState::zeros(c.grid);
  for (int i = 0; i < c.grid.cells[0]; ++i) {
    const auto U = mms_conserved(f, c, c.grid.center(0, i), t);
    s.rho.at(i) = U[0];
    s.mom[0].at(i) = U[1];
    s.etot.at(i) = U[2];
  }
  s.time = t;
  s.fill_ghosts();
  return s;
}

inline SourceFn mms_source(const MmsFields& f, const NsfRunConfig& c) {
  return [f, c](double t, FluidState& tend) {
    for (int i = 0; i < c.grid.cells[0]; ++i) {
      const auto s = mms_forcing(f, c, c.grid.center(0, i), t);
      tend.rho.raw_ref(i, 0) += s[0];
      tend.mom[0].raw_ref(i, 0) += s[1];
      tend.etot.raw_ref(i, 0) += s[2];
    }
  };
}

inline NsfRunConfig mms_config(int n, Boundary bc) {
  NsfRunConfig c;
  c.grid = Grid::line(n, 1.0, bc);
  c.scaling = ScalingParams{0.1, 0.05, 0.05, 0.1};
  c.t_end = 0.2;
  c.output_stride = 0.2;
  c.cfl = 0.4;
  return c;
}

/// L2 errors of (rho, m, E) at t_end.
inline std::array<double, 3> mms_errors(const MmsFields& f, int n, Boundary bc) {
  const NsfRunConfig c = mms_config(n, bc);
  SimulateOptions opts;
  opts.source = mms_source(f, c);
  const Trajectory traj = simulate(c, mms_state(f, c, 0.0), opts);
  const FluidState& last = traj.snapshots.back();
  std::array<double, 3> err{};
  for (int i = 0; i < n; ++i) {
    const auto U = mms_conserved(f, c, c.grid.center(0, i), last.time);
    const double d[3] = {last.rho(i) - U[0], last.mom[0](i) - U[1], last.etot(i) - U[2]};
    for (int m = 0; m < 3; ++m) err[m] += d[m] * d[m] * c.grid.spacing(0);
  }
  for (auto& e : err) e = std::sqrt(e);
  return err;
}

}  // namespace nsflab::testing
