#include "nsflab/euler_reference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nsflab/errors.hpp"
#include "nsflab/nsf_solver.hpp"
#include "nsflab/parallel.hpp"

namespace nsflab {

Primitives sample_initial(const InitialData& data, const Grid& grid) {
  if (!data.rho || !data.theta || !data.u) throw UsageError("initial data is incomplete");
  Primitives p = Primitives::zeros(grid);
  for (int j = 0; j < grid.cells[1]; ++j) {
    for (int i = 0; i < grid.cells[0]; ++i) {
      const double x = grid.center(0, i);
      const double y = grid.dim == 2 ? grid.center(1, j) : 0.0;
      p.rho.at(i, j) = data.rho(x, y);
      p.theta.at(i, j) = data.theta(x, y);
      const auto u = data.u(x, y);
      p.u[0].at(i, j) = u[0];
      p.u[1].at(i, j) = grid.dim == 2 ? u[1] : 0.0;
    }
  }
  p.fill_ghosts();
  return p;
}

void EulerRunConfig::validate() const {
  grid.validate();
  if (grid.ghosts < 3) throw UsageError("Euler reference needs three ghost layers");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw UsageError("reference cfl must lie in (0, 1]");
  if (!(t_end > 0.0) || !(output_stride > 0.0)) throw UsageError("t_end and stride must be positive");
  if (!(filter_eps >= 0.0 && filter_eps < 0.04)) throw UsageError("filter amplitude must lie in [0, 0.04)");
  if (!(blowup_factor > 1.0) || !(safety > 0.0 && safety <= 1.0)) {
    throw UsageError("blow-up factor must exceed 1 and the safety factor lie in (0, 1]");
  }
}

namespace {

using Flux4 = std::array<double, 4>;

struct Cells {
  std::vector<double> rho, u0, u1, theta, p, E, c;
};

Cells cells_everywhere(const FluidState& s, const GasModel& gas) {
  const std::size_t n = s.grid.alloc_size();
  Cells c;
  c.rho = s.rho.data();
  c.E = s.etot.data();
  const auto& m0 = s.mom[0].data();
  const auto& m1 = s.mom[1].data();
  c.u0.assign(n, 0.0);
  c.u1.assign(n, 0.0);
  c.theta.assign(n, 0.0);
  c.p.assign(n, 0.0);
  c.c.assign(n, 0.0);
  parallel_for(static_cast<long>(n), [&](long kk) {
    const auto k = static_cast<std::size_t>(kk);
    const double r = c.rho[k];
    if (!(r > 0.0)) throw PositivityError("non-positive reference density", -1, -1, s.time);
    c.u0[k] = m0[k] / r;
    c.u1[k] = m1[k] / r;
    const double rho_e = c.E[k] - 0.5 * r * (c.u0[k] * c.u0[k] + c.u1[k] * c.u1[k]);
    if (!(rho_e > 0.0)) throw PositivityError("non-positive reference internal energy", -1, -1, s.time);
    c.theta[k] = temperature_from_internal(r, rho_e, gas, 0.0);
    c.p[k] = pressure(gas, 0.0, r, c.theta[k]);
    c.c[k] = sound_speed(gas, 0.0, r, c.theta[k]);
  });
  return c;
}

Flux4 point_flux(const Cells& c, std::size_t k, int axis) {
  const double un = axis == 0 ? c.u0[k] : c.u1[k];
  Flux4 f{c.rho[k] * un, c.rho[k] * c.u0[k] * un, c.rho[k] * c.u1[k] * un, (c.E[k] + c.p[k]) * un};
  f[1 + axis] += c.p[k];
  return f;
}

std::array<const std::vector<double>*, 4> conserved(const FluidState& s) {
  return {&s.rho.data(), &s.mom[0].data(), &s.mom[1].data(), &s.etot.data()};
}

void require_state_ghosts(const FluidState& s, const char* who) {
  s.rho.require_ghosts(who);
  s.mom[0].require_ghosts(who);
  s.mom[1].require_ghosts(who);
  s.etot.require_ghosts(who);
}

// Adds the filter and/or the convective tendency along every axis.
FluidState tendency(const FluidState& s, const GasModel& gas, double eps, bool convective) {
  require_state_ghosts(s, "rhs_euler");
  const Grid& g = s.grid;
  if (g.ghosts < 3) throw UsageError("Euler reference needs three ghost layers");
  const Cells c = cells_everywhere(s, gas);
  FluidState out = FluidState::zeros(g);
  out.time = s.time;

  double cmax = 0.0;
  if (eps > 0.0) {
    std::vector<double> speed(static_cast<std::size_t>(g.interior_count()));
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i) {
        const std::size_t k = g.index(i, j);
        speed[static_cast<std::size_t>(j) * g.cells[0] + i] =
            std::sqrt(c.u0[k] * c.u0[k] + c.u1[k] * c.u1[k]) + c.c[k];
      }
    cmax = deterministic_max(speed);
  }
  const auto U = conserved(s);
  const int nx = g.cells[0];
  std::array<Field*, 4> dst{&out.rho, &out.mom[0], &out.mom[1], &out.etot};

  parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
    const int i = static_cast<int>(q % nx);
    const int j = static_cast<int>(q / nx);
    Flux4 d{};
    for (int axis = 0; axis < g.dim; ++axis) {
      const double h = g.spacing(axis);
      auto at = [&](int off) {
        return axis == 0 ? g.index(i + off, j) : g.index(i, j + off);
      };
      if (convective) {
        // Face fluxes at i+1/2 and i-1/2 from point fluxes at i-2..i+2.
        const Flux4 fm2 = point_flux(c, at(-2), axis);
        const Flux4 fm1 = point_flux(c, at(-1), axis);
        const Flux4 f0 = point_flux(c, at(0), axis);
        const Flux4 fp1 = point_flux(c, at(1), axis);
        const Flux4 fp2 = point_flux(c, at(2), axis);
        for (int v = 0; v < 4; ++v) {
          const double right = (-fp2[v] + 7.0 * fp1[v] + 7.0 * f0[v] - fm1[v]) / 12.0;
          const double left = (-fp1[v] + 7.0 * f0[v] + 7.0 * fm1[v] - fm2[v]) / 12.0;
          d[v] -= (right - left) / h;
        }
      }
      if (eps > 0.0) {
        const double coef = eps * cmax / h;
        for (int v = 0; v < 4; ++v) {
          const auto& u = *U[v];
          auto face = [&](int f) {  // fifth difference at the face between f-1 and f
            return u[at(f + 2)] - 5.0 * u[at(f + 1)] + 10.0 * u[at(f)] - 10.0 * u[at(f - 1)] +
                   5.0 * u[at(f - 2)] - u[at(f - 3)];
          };
          d[v] += coef * (face(1) - face(0));
        }
      }
    }
    for (int v = 0; v < 4; ++v) dst[v]->raw_ref(i, j) = d[v];
  });
  return out;
}

FluidState axpy(const FluidState& x, double a, const FluidState& y) {
  const Grid& g = x.grid;
  FluidState out = FluidState::zeros(g);
  const int nx = g.cells[0];
  auto mix = [&](Field& o, const Field& xf, const Field& yf) {
    parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      o.raw_ref(i, j) = xf(i, j) + a * yf(i, j);
    });
  };
  mix(out.rho, x.rho, y.rho);
  mix(out.mom[0], x.mom[0], y.mom[0]);
  mix(out.mom[1], x.mom[1], y.mom[1]);
  mix(out.etot, x.etot, y.etot);
  out.time = x.time;
  out.fill_ghosts();
  return out;
}

FluidState rk4_step(const FluidState& s, double dt, const GasModel& gas, double eps) {
  const FluidState k1 = rhs_euler(s, gas, eps);
  const FluidState k2 = rhs_euler(axpy(s, 0.5 * dt, k1), gas, eps);
  const FluidState k3 = rhs_euler(axpy(s, 0.5 * dt, k2), gas, eps);
  const FluidState k4 = rhs_euler(axpy(s, dt, k3), gas, eps);
  const Grid& g = s.grid;
  FluidState out = FluidState::zeros(g);
  const int nx = g.cells[0];
  auto comb = [&](Field& o, const Field& x, const Field& a, const Field& b, const Field& c,
                  const Field& d) {
    parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      o.raw_ref(i, j) = x(i, j) + dt / 6.0 * (a(i, j) + 2.0 * b(i, j) + 2.0 * c(i, j) + d(i, j));
    });
  };
  comb(out.rho, s.rho, k1.rho, k2.rho, k3.rho, k4.rho);
  comb(out.mom[0], s.mom[0], k1.mom[0], k2.mom[0], k3.mom[0], k4.mom[0]);
  comb(out.mom[1], s.mom[1], k1.mom[1], k2.mom[1], k3.mom[1], k4.mom[1]);
  comb(out.etot, s.etot, k1.etot, k2.etot, k3.etot, k4.etot);
  out.time = s.time + dt;
  out.fill_ghosts();
  return out;
}

double euler_dt(const FluidState& s, const GasModel& gas, double cfl) {
  const Grid& g = s.grid;
  const Cells c = cells_everywhere(s, gas);
  std::vector<double> local(static_cast<std::size_t>(g.interior_count()));
  double hmin = g.spacing(0);
  if (g.dim == 2) hmin = std::min(hmin, g.spacing(1));
  for (int j = 0; j < g.cells[1]; ++j)
    for (int i = 0; i < g.cells[0]; ++i) {
      const std::size_t k = g.index(i, j);
      local[static_cast<std::size_t>(j) * g.cells[0] + i] =
          hmin / (std::sqrt(c.u0[k] * c.u0[k] + c.u1[k] * c.u1[k]) + c.c[k]);
    }
  return cfl * deterministic_min(local);
}

// Kinetic-energy change rate caused by a tendency: integral of u . m_t - |u|^2 rho_t / 2.
double kinetic_rate(const FluidState& s, const FluidState& t) {
  const Grid& g = s.grid;
  Field w(g);
  for (int j = 0; j < g.cells[1]; ++j)
    for (int i = 0; i < g.cells[0]; ++i) {
      const double r = s.rho(i, j);
      const double u0 = s.mom[0](i, j) / r;
      const double u1 = s.mom[1](i, j) / r;
      w.raw_ref(i, j) = u0 * t.mom[0](i, j) + u1 * t.mom[1](i, j) -
                        0.5 * (u0 * u0 + u1 * u1) * t.rho(i, j);
    }
  return integrate(w);
}

}  // namespace

FluidState rhs_euler(const FluidState& state, const GasModel& gas, double filter_eps) {
  return tendency(state, gas, filter_eps, true);
}

FluidState filter_tendency(const FluidState& state, const GasModel& gas, double filter_eps) {
  return tendency(state, gas, filter_eps, false);
}

std::array<double, 2> max_gradients(const FluidState& state, const GasModel& gas) {
  FluidState s = state;
  s.fill_ghosts();
  const Primitives p = to_primitives(s, gas, 0.0);
  const Grid& g = s.grid;
  std::array<std::array<Field, 2>, 2> du;
  for (int k = 0; k < 2; ++k)
    for (int d = 0; d < 2; ++d) du[k][d] = d < g.dim ? gradient(p.u[k], d) : Field(g);
  const Field dr0 = gradient(p.rho, 0);
  const Field dr1 = g.dim == 2 ? gradient(p.rho, 1) : Field(g);
  double gu = 0.0;
  double gr = 0.0;
  for (int j = 0; j < g.cells[1]; ++j)
    for (int i = 0; i < g.cells[0]; ++i) {
      double s2 = 0.0;
      for (int k = 0; k < 2; ++k)
        for (int d = 0; d < 2; ++d) s2 += du[k][d](i, j) * du[k][d](i, j);
      gu = std::max(gu, std::sqrt(s2));
      gr = std::max(gr, std::hypot(dr0(i, j), dr1(i, j)));
    }
  return {gu, gr};
}

bool LifespanMonitor::check_fit(const std::vector<double>& g, double g0) {
  const auto& t = result_.times;
  const std::size_t n = g.size();
  if (n < 4) return false;
  std::size_t first = n >= 8 ? n - 8 : 0;
  for (std::size_t k = first; k < n; ++k) {
    if (g[k] < 2.0 * g0) first = k + 1;
  }
  if (n - first < 4) return false;
  const double m = static_cast<double>(n - first);
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = first; k < n; ++k) {
    const double y = 1.0 / g[k];
    st += t[k];
    sy += y;
    stt += t[k] * t[k];
    sty += t[k] * y;
    syy += y * y;
  }
  const double vt = stt - st * st / m;
  const double vy = syy - sy * sy / m;
  const double cty = sty - st * sy / m;
  if (!(vt > 0.0) || !(vy > 0.0)) return false;
  const double slope = cty / vt;
  const double r2 = cty * cty / (vt * vy);
  if (!(slope < 0.0) || r2 < 0.99) return false;
  const double intercept = (sy - slope * st) / m;
  const double tstar = -intercept / slope;
  const double dt = t[n - 1] - t[n - 2];
  if (tstar - t[n - 1] <= 2.0 * dt) {
    result_.smooth = false;
    result_.t_star = std::max(tstar, t[n - 1]);
    result_.reason = "gradient growth follows 1/(T* - t)";
    return true;
  }
  return false;
}

bool LifespanMonitor::observe(double t, double grad_u, double grad_rho) {
  if (declared()) return true;
  result_.times.push_back(t);
  result_.grad_u.push_back(grad_u);
  result_.grad_rho.push_back(grad_rho);
  // Both gradients are measured against the larger initial one, so a quantity
  // that starts flat does not trigger on roundoff.
  const double g0 = std::max(result_.grad_u.front(), result_.grad_rho.front());
  if (!(g0 > 0.0)) return false;
  if (grad_u > factor_ * g0 || grad_rho > factor_ * g0) {
    result_.smooth = false;
    result_.t_star = t;
    result_.reason = "gradient exceeded the growth threshold";
    return true;
  }
  if (check_fit(result_.grad_u, g0)) return true;
  return check_fit(result_.grad_rho, g0);
}

void LifespanMonitor::fail(double t, const std::string& why) {
  if (declared()) return;
  result_.smooth = false;
  result_.t_star = t;
  result_.reason = why;
}

LifespanResult LifespanMonitor::result(double t_end) const {
  LifespanResult r = result_;
  if (r.smooth) {
    r.t_star = t_end;
    r.t_safe = t_end;
    r.reason = "smooth through t_end";
  } else {
    r.t_safe = safety_ * r.t_star;
  }
  return r;
}

ReferenceTrajectory run_euler(const EulerRunConfig& config, const FluidState& initial) {
  config.validate();
  if (!initial.grid.same_cells(config.grid)) throw UsageError("initial state grid differs from config");
  FluidState start = FluidState::zeros(config.grid);
  start.rho.set_interior(initial.rho.interior());
  start.mom[0].set_interior(initial.mom[0].interior());
  start.mom[1].set_interior(initial.mom[1].interior());
  start.etot.set_interior(initial.etot.interior());
  start.time = 0.0;
  start.fill_ghosts();
  const GasModel& gas = config.gas;
  const double mass0 = integrate(start.rho);
  const double energy0 = integrate(start.etot);

  ReferenceTrajectory traj;
  traj.gas = gas;
  traj.grid = config.grid;
  double eps = config.filter_eps;

  if (config.calibrate_filter && eps > 0.0) {
    FluidState s = start;
    double max_rate = 0.0;
    for (int k = 0; k < 10; ++k) {
      max_rate = std::max(max_rate, std::abs(kinetic_rate(s, filter_tendency(s, gas, eps))));
      s = rk4_step(s, euler_dt(s, gas, config.cfl), gas, eps);
    }
    const double projected = max_rate * config.t_end;
    const double budget = config.drain_budget * std::abs(energy0);
    if (projected > budget) eps *= budget / projected;
  }
  traj.filter_eps = eps;

  LifespanMonitor monitor(config.blowup_factor, config.safety);
  const std::vector<double> times = output_times(config.t_end, config.output_stride);
  FluidState state = start;
  double end_time = config.t_end;

  auto record = [&](const FluidState& s) {
    traj.times.push_back(s.time);
    traj.states.push_back(s);
    traj.tendencies.push_back(rhs_euler(s, gas, eps));
    const auto g = max_gradients(s, gas);
    return monitor.observe(s.time, g[0], g[1]);
  };

  try {
    bool stop = record(state) && config.stop_at_blowup;
    std::size_t next = 1;
    while (!stop && next < times.size()) {
      if (traj.steps >= config.max_steps) throw NumericalError("reference step budget exhausted", state.time);
      const double remaining = times[next] - state.time;
      double dt = euler_dt(state, gas, config.cfl);
      const bool lands = dt >= remaining;
      if (lands) dt = remaining;
      if (eps > 0.0) traj.filter_drain += std::abs(kinetic_rate(state, filter_tendency(state, gas, eps))) * dt;
      FluidState advanced = rk4_step(state, dt, gas, eps);
      if (lands) advanced.time = times[next];
      if (!std::isfinite(integrate(advanced.rho)) || !std::isfinite(integrate(advanced.etot))) {
        throw PositivityError("non-finite reference state", -1, -1, advanced.time);
      }
      // Admissibility of the new state is checked by the next tendency evaluation.
      (void)euler_dt(advanced, gas, config.cfl);
      state = std::move(advanced);
      ++traj.steps;
      if (lands) {
        ++next;
        stop = record(state) && config.stop_at_blowup;
      }
    }
    if (stop) end_time = state.time;
  } catch (const PositivityError& e) {
    monitor.fail(state.time, std::string("positivity lost: ") + e.what());
    end_time = state.time;
  } catch (const DomainError& e) {
    monitor.fail(state.time, std::string("positivity lost: ") + e.what());
    end_time = state.time;
  }
  traj.lifespan = monitor.result(end_time);
  // States past the last recorded instant are discarded; drifts refer to it.
  const FluidState& last = traj.states.back();
  traj.mass_drift = std::abs(integrate(last.rho) - mass0) / std::abs(mass0);
  traj.energy_drift = std::abs(integrate(last.etot) - energy0) / std::abs(energy0);
  return traj;
}

LifespanResult lifespan_monitor(const ReferenceTrajectory& traj, double factor, double safety) {
  LifespanMonitor monitor(factor, safety);
  for (const auto& s : traj.states) {
    const auto g = max_gradients(s, traj.gas);
    if (monitor.observe(s.time, g[0], g[1])) break;
  }
  const double t_last = traj.times.empty() ? 0.0 : traj.times.back();
  if (!traj.lifespan.smooth && traj.lifespan.reason.rfind("positivity", 0) == 0) {
    monitor.fail(traj.lifespan.t_star, traj.lifespan.reason);
  }
  return monitor.result(t_last);
}

namespace {

struct Rates {
  double u0, u1, theta, u0_t, u1_t, theta_t;
};

// Primitive variables and their time derivatives from conservative ones.
Rates primitive_rates(double rho, double m0, double m1, double E, double rho_t, double m0_t,
                      double m1_t, double E_t, const GasModel& gas) {
  Rates r{};
  r.u0 = m0 / rho;
  r.u1 = m1 / rho;
  const double kin = 0.5 * (r.u0 * r.u0 + r.u1 * r.u1);
  r.theta = temperature_from_internal(rho, E - rho * kin, gas, 0.0);
  r.u0_t = (m0_t - r.u0 * rho_t) / rho;
  r.u1_t = (m1_t - r.u1 * rho_t) / rho;
  const double rhoe_t = E_t - r.u0 * m0_t - r.u1 * m1_t + kin * rho_t;
  const double z = rho / std::pow(r.theta, 1.5);
  const double drho = 1.5 * r.theta * gas.dP(z);
  r.theta_t = (rhoe_t - drho * rho_t) / (rho * heat_capacity_cv(gas, rho, r.theta));
  return r;
}

// Fourth-order centered derivative along an axis on interior cells.
double d4(const std::vector<double>& f, const Grid& g, int axis, int i, int j) {
  auto at = [&](int off) { return axis == 0 ? g.index(i + off, j) : g.index(i, j + off); };
  return (f[at(-2)] - 8.0 * f[at(-1)] + 8.0 * f[at(1)] - f[at(2)]) / (12.0 * g.spacing(axis));
}

}  // namespace

FormulationResiduals formulation_residuals(const ReferenceTrajectory& traj) {
  FormulationResiduals out;
  const GasModel& gas = traj.gas;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    FluidState s = traj.states[k];
    s.fill_ghosts();
    const FluidState& ten = traj.tendencies[k];
    const Grid& g = s.grid;
    const std::size_t n = g.alloc_size();
    const auto& rho = s.rho.data();
    const auto& m0 = s.mom[0].data();
    const auto& m1 = s.mom[1].data();
    const auto& E = s.etot.data();
    std::vector<double> u0(n), u1(n), rs(n * 2), rt(n * 2);
    bool ok = true;
    for (std::size_t q = 0; q < n && ok; ++q) {
      const double r = rho[q];
      const double th_e = E[q] - 0.5 * (m0[q] * m0[q] + m1[q] * m1[q]) / r;
      if (!(r > 0.0) || !(th_e > 0.0)) {
        ok = false;
        break;
      }
      const double th = temperature_from_internal(r, th_e, gas, 0.0);
      u0[q] = m0[q] / r;
      u1[q] = m1[q] / r;
      const double rsm = r * entropy_molecular(gas, r, th);
      rs[q] = rsm * u0[q];
      rs[n + q] = rsm * u1[q];
      rt[q] = r * th * u0[q];
      rt[n + q] = r * th * u1[q];
    }
    out.times.push_back(traj.times[k]);
    if (!ok) {
      out.entropy.push_back(std::numeric_limits<double>::infinity());
      out.thermal.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    Field fe(g);
    Field ft(g);
    const std::vector<double> rs0(rs.begin(), rs.begin() + static_cast<long>(n));
    const std::vector<double> rs1(rs.begin() + static_cast<long>(n), rs.end());
    const std::vector<double> rt0(rt.begin(), rt.begin() + static_cast<long>(n));
    const std::vector<double> rt1(rt.begin() + static_cast<long>(n), rt.end());
    const int nx = g.cells[0];
    parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      const std::size_t c = g.index(i, j);
      const double r = rho[c];
      const Rates pr = primitive_rates(r, m0[c], m1[c], E[c], ten.rho(i, j), ten.mom[0](i, j),
                                       ten.mom[1](i, j), ten.etot(i, j), gas);
      const double sm = entropy_molecular(gas, r, pr.theta);
      const auto ds = entropy_molecular_derivatives(gas, r, pr.theta);
      const double drs_dt = sm * ten.rho(i, j) + r * (ds.d_rho * ten.rho(i, j) + ds.d_theta * pr.theta_t);
      double div_rsu = d4(rs0, g, 0, i, j);
      double div_rtu = d4(rt0, g, 0, i, j);
      double div_u = d4(u0, g, 0, i, j);
      if (g.dim == 2) {
        div_rsu += d4(rs1, g, 1, i, j);
        div_rtu += d4(rt1, g, 1, i, j);
        div_u += d4(u1, g, 1, i, j);
      }
      fe.raw_ref(i, j) = drs_dt + div_rsu;
      const double cv = heat_capacity_cv(gas, r, pr.theta);
      const double p_theta = pressure_derivatives(gas, 0.0, r, pr.theta).d_theta;
      ft.raw_ref(i, j) = cv * (pr.theta * ten.rho(i, j) + r * pr.theta_t + div_rtu) +
                         pr.theta * p_theta * div_u;
    });
    out.entropy.push_back(lp_norm(fe, 2.0));
    out.thermal.push_back(lp_norm(ft, 2.0));
  }
  return out;
}

std::string CompatibilityReport::to_text() const {
  std::ostringstream os;
  os << "k0 " << (k0_pass ? "PASS" : "FAIL") << " max_normal_velocity " << format_double(k0_max_normal)
     << '\n';
  os << "k1 " << (k1_pass ? "PASS" : "FAIL") << " residual " << format_double(k1_residual)
     << " threshold " << format_double(k1_threshold) << '\n';
  os << "k2 " << k2 << '\n';
  return os.str();
}

CompatibilityReport compatibility_check(const InitialData& data, const Grid& grid,
                                        const GasModel& gas) {
  bool any_wall = false;
  for (int d = 0; d < grid.dim; ++d) any_wall = any_wall || grid.bc[d] == Boundary::SlipWall;
  if (!any_wall) throw UsageError("compatibility check needs a slip-wall axis");
  CompatibilityReport rep;

  double scale = 1.0;
  for (int j = 0; j < grid.cells[1]; ++j)
    for (int i = 0; i < grid.cells[0]; ++i) {
      const auto u = data.u(grid.center(0, i), grid.dim == 2 ? grid.center(1, j) : 0.0);
      scale = std::max({scale, std::abs(u[0]), std::abs(u[1])});
    }
  for (int d = 0; d < grid.dim; ++d) {
    if (grid.bc[d] != Boundary::SlipWall) continue;
    const int other = 1 - d;
    const int nt = grid.dim == 2 ? grid.cells[other] : 1;
    for (int k = 0; k < nt; ++k) {
      const double tpos = grid.dim == 2 ? grid.center(other, k) : 0.0;
      for (double wall : {0.0, grid.extent[d]}) {
        const double x = d == 0 ? wall : tpos;
        const double y = d == 0 ? tpos : wall;
        rep.k0_max_normal = std::max(rep.k0_max_normal, std::abs(data.u(x, y)[d]));
      }
    }
  }
  rep.k0_pass = rep.k0_max_normal <= 1e-12 * scale;

  Grid g3 = grid;
  g3.ghosts = std::max(3, grid.ghosts);
  const FluidState s = from_primitives(sample_initial(data, g3), gas, 0.0);
  const FluidState ten = rhs_euler(s, gas, 0.0);
  double residual = 0.0;
  double spread = 0.0;
  for (int d = 0; d < g3.dim; ++d) {
    if (g3.bc[d] != Boundary::SlipWall) continue;
    const int other = 1 - d;
    const int nt = g3.dim == 2 ? g3.cells[other] : 1;
    const int n = g3.cells[d];
    for (int k = 0; k < nt; ++k) {
      auto ut = [&](int along) {
        const int i = d == 0 ? along : k;
        const int j = d == 0 ? k : along;
        return (ten.mom[d](i, j) - s.mom[d](i, j) / s.rho(i, j) * ten.rho(i, j)) / s.rho(i, j);
      };
      // Cells 2..4 are the first whose stencil does not reach the mirror
      // ghosts; extrapolate from their centers (2.5h, 3.5h, 4.5h) to the wall.
      for (int side = 0; side < 2; ++side) {
        const double a2 = side == 0 ? ut(2) : ut(n - 3);
        const double a3 = side == 0 ? ut(3) : ut(n - 4);
        const double a4 = side == 0 ? ut(4) : ut(n - 5);
        const double lin = 3.5 * a2 - 2.5 * a3;
        const double quad = 7.875 * a2 - 11.25 * a3 + 4.375 * a4;
        residual = std::max(residual, std::abs(lin));
        spread = std::max(spread, std::abs(lin - quad));
      }
    }
  }
  rep.k1_residual = residual;
  rep.k1_threshold = 2.0 * spread + 1e-12 * scale;
  rep.k1_pass = residual <= rep.k1_threshold;
  return rep;
}

ReferenceFields sample_reference(const ReferenceTrajectory& traj, double t, const Grid& target) {
  if (traj.states.empty()) throw UsageError("empty reference trajectory");
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  const double tol = 1e-12 * std::max(1.0, std::abs(t1));
  if (t < t0 - tol || t > t1 + tol) {
    std::ostringstream msg;
    msg << "reference requested at t = " << t << " outside [" << t0 << ", " << t1 << "]";
    throw UsageError(msg.str());
  }
  std::size_t k = 0;
  while (k + 1 < traj.times.size() && traj.times[k + 1] <= t) ++k;
  double w = 0.0;
  std::size_t k1 = k;
  if (k + 1 < traj.times.size() && t > traj.times[k]) {
    k1 = k + 1;
    w = (t - traj.times[k]) / (traj.times[k1] - traj.times[k]);
  }
  const Grid& fine = traj.grid;
  if (fine.dim != target.dim || fine.extent != target.extent || fine.bc != target.bc) {
    throw UsageError("reference and target grids describe different domains");
  }
  std::array<int, 2> f{1, 1};
  for (int d = 0; d < fine.dim; ++d) {
    if (fine.cells[d] % target.cells[d] != 0) throw UsageError("target cells must divide reference cells");
    f[d] = fine.cells[d] / target.cells[d];
  }
  const double inv = 1.0 / (f[0] * f[1]);
  const FluidState& sa = traj.states[k];
  const FluidState& sb = traj.states[k1];
  const FluidState& ta = traj.tendencies[k];
  const FluidState& tb = traj.tendencies[k1];

  ReferenceFields out;
  out.grid = target;
  out.time = t;
  out.rho = Field(target);
  out.theta = Field(target);
  out.u = {Field(target), Field(target)};
  out.rho_t = Field(target);
  out.theta_t = Field(target);
  out.u_t = {Field(target), Field(target)};
  const int nx = target.cells[0];
  parallel_for(static_cast<long>(target.interior_count()), [&](long q) {
    const int I = static_cast<int>(q % nx);
    const int J = static_cast<int>(q / nx);
    std::array<double, 8> acc{};
    for (int jj = 0; jj < f[1]; ++jj)
      for (int ii = 0; ii < f[0]; ++ii) {
        const int i = I * f[0] + ii;
        const int j = J * f[1] + jj;
        auto lerp = [&](const Field& a, const Field& b) {
          return w == 0.0 ? a(i, j) : (1.0 - w) * a(i, j) + w * b(i, j);
        };
        acc[0] += lerp(sa.rho, sb.rho);
        acc[1] += lerp(sa.mom[0], sb.mom[0]);
        acc[2] += lerp(sa.mom[1], sb.mom[1]);
        acc[3] += lerp(sa.etot, sb.etot);
        acc[4] += lerp(ta.rho, tb.rho);
        acc[5] += lerp(ta.mom[0], tb.mom[0]);
        acc[6] += lerp(ta.mom[1], tb.mom[1]);
        acc[7] += lerp(ta.etot, tb.etot);
      }
    for (auto& v : acc) v *= inv;
    if (!(acc[0] > 0.0)) throw PositivityError("non-positive reference density", I, J, t);
    const Rates r = primitive_rates(acc[0], acc[1], acc[2], acc[3], acc[4], acc[5], acc[6],
                                    acc[7], traj.gas);
    out.rho.raw_ref(I, J) = acc[0];
    out.theta.raw_ref(I, J) = r.theta;
    out.u[0].raw_ref(I, J) = r.u0;
    out.u[1].raw_ref(I, J) = r.u1;
    out.rho_t.raw_ref(I, J) = acc[4];
    out.theta_t.raw_ref(I, J) = r.theta_t;
    out.u_t[0].raw_ref(I, J) = r.u0_t;
    out.u_t[1].raw_ref(I, J) = r.u1_t;
  });
  out.fill_ghosts();
  return out;
}

// --- persistence -------------------------------------------------------------

std::uint64_t content_hash(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::string reference_key(const EulerRunConfig& c, const FluidState& initial) {
  std::ostringstream os;
  os << c.grid.describe() << '|' << c.gas.name << '|' << c.gas.expression << '|'
     << format_double(c.gas.S0) << '|' << format_double(c.cfl) << '|' << format_double(c.t_end)
     << '|' << format_double(c.output_stride) << '|' << format_double(c.filter_eps) << '|'
     << c.calibrate_filter << '|' << format_double(c.drain_budget) << '|'
     << format_double(c.blowup_factor) << '|' << format_double(c.safety) << '|'
     << c.stop_at_blowup << '|';
  std::uint64_t h = content_hash(os.str());
  for (const Field* f : {&initial.rho, &initial.mom[0], &initial.mom[1], &initial.etot}) {
    const auto v = f->interior();
    h = content_hash(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)), h);
  }
  return hex(h);
}

namespace {

std::string state_file(std::size_t k) {
  std::ostringstream os;
  os << "state_";
  os.width(5);
  os.fill('0');
  os << k << ".bin";
  return os.str();
}

}  // namespace

void save_reference(const std::filesystem::path& dir, const ReferenceTrajectory& traj) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    Snapshot snap = to_snapshot(traj.states[k]);
    const Snapshot ten = to_snapshot(traj.tendencies[k]);
    for (std::size_t q = 0; q < ten.names.size(); ++q) {
      snap.names.push_back("d_" + ten.names[q]);
      snap.values.push_back(ten.values[q]);
    }
    write_snapshot(dir / state_file(k), snap);
  }
  std::ofstream out(dir / "index.txt");
  if (!out) throw UsageError("cannot write reference index in " + dir.string());
  const auto& L = traj.lifespan;
  out << "nsflab-reference 1\n";
  out << "gas " << traj.gas.name << '\n';
  out << "expression " << traj.gas.expression << '\n';
  out << "filter_eps " << format_double(traj.filter_eps) << '\n';
  out << "filter_drain " << format_double(traj.filter_drain) << '\n';
  out << "mass_drift " << format_double(traj.mass_drift) << '\n';
  out << "energy_drift " << format_double(traj.energy_drift) << '\n';
  out << "steps " << traj.steps << '\n';
  out << "smooth " << (L.smooth ? 1 : 0) << '\n';
  out << "t_star " << format_double(L.t_star) << '\n';
  out << "t_safe " << format_double(L.t_safe) << '\n';
  out << "reason " << L.reason << '\n';
  out << "snapshots " << traj.states.size() << '\n';
  for (std::size_t k = 0; k < L.times.size(); ++k) {
    out << "monitor " << format_double(L.times[k]) << ' ' << format_double(L.grad_u[k]) << ' '
        << format_double(L.grad_rho[k]) << '\n';
  }
  out << "end\n";
}

ReferenceTrajectory load_reference(const std::filesystem::path& dir, const GasModel& gas) {
  std::ifstream in(dir / "index.txt");
  if (!in) throw UsageError("no reference index in " + dir.string());
  std::string line;
  std::getline(in, line);
  if (line != "nsflab-reference 1") throw UsageError("bad reference index header in " + dir.string());
  ReferenceTrajectory traj;
  traj.gas = gas;
  std::size_t count = 0;
  auto number = [](const std::string& s) { return std::stod(s); };
  while (std::getline(in, line)) {
    if (line == "end") break;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string val = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "expression") {
      if (val != gas.expression) throw UsageError("cached reference was computed for P(Z) = " + val);
    } else if (key == "filter_eps") traj.filter_eps = number(val);
    else if (key == "filter_drain") traj.filter_drain = number(val);
    else if (key == "mass_drift") traj.mass_drift = number(val);
    else if (key == "energy_drift") traj.energy_drift = number(val);
    else if (key == "steps") traj.steps = std::stol(val);
    else if (key == "smooth") traj.lifespan.smooth = val == "1";
    else if (key == "t_star") traj.lifespan.t_star = number(val);
    else if (key == "t_safe") traj.lifespan.t_safe = number(val);
    else if (key == "reason") traj.lifespan.reason = val;
    else if (key == "snapshots") count = std::stoul(val);
    else if (key == "monitor") {
      std::istringstream is(val);
      std::string a, b, c;
      is >> a >> b >> c;
      traj.lifespan.times.push_back(number(a));
      traj.lifespan.grad_u.push_back(number(b));
      traj.lifespan.grad_rho.push_back(number(c));
    }
  }
  for (std::size_t k = 0; k < count; ++k) {
    const Snapshot snap = read_snapshot(dir / state_file(k));
    Snapshot state;
    Snapshot ten;
    state.grid = ten.grid = snap.grid;
    state.time = ten.time = snap.time;
    for (std::size_t q = 0; q < snap.names.size(); ++q) {
      if (snap.names[q].rfind("d_", 0) == 0) {
        ten.names.push_back(snap.names[q].substr(2));
        ten.values.push_back(snap.values[q]);
      } else {
        state.names.push_back(snap.names[q]);
        state.values.push_back(snap.values[q]);
      }
    }
    traj.states.push_back(from_snapshot(state, 3));
    FluidState t = from_snapshot(ten, 3);
    traj.tendencies.push_back(std::move(t));
    traj.times.push_back(snap.time);
  }
  if (traj.states.empty()) throw UsageError("reference cache holds no snapshots");
  traj.grid = traj.states.front().grid;
  return traj;
}

}  // namespace nsflab
