#include "nsflab/nsf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nsflab/errors.hpp"
#include "nsflab/parallel.hpp"

namespace nsflab {

std::string to_string(Reconstruction r) {
  switch (r) {
    case Reconstruction::Constant: return "constant";
    case Reconstruction::Linear: return "linear";
    case Reconstruction::Minmod: return "minmod";
  }
  return "linear";
}

Reconstruction reconstruction_from_string(const std::string& s) {
  if (s == "constant") return Reconstruction::Constant;
  if (s == "linear") return Reconstruction::Linear;
  if (s == "minmod") return Reconstruction::Minmod;
  throw ConfigError("unknown reconstruction '" + s + "' (constant, linear, minmod)");
}

void NsfRunConfig::validate() const {
  grid.validate();
  if (grid.ghosts < 2) throw UsageError("NSF solver needs two ghost layers");
  if (!(cfl > 0.0 && cfl <= 0.9)) throw UsageError("cfl must lie in (0, 0.9]");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw UsageError("t_end must be positive");
  if (!(output_stride > 0.0)) throw UsageError("output stride must be positive");
  if (!(floors.rho > 0.0) || !(floors.theta > 0.0)) throw UsageError("floors must be positive");
  scaling.validate(false);
}

// --- temperature recovery ----------------------------------------------------

double temperature_from_internal(double rho, double rho_e, const GasModel& gas, double a) {
  if (!(rho > 0.0) || !(rho_e > 0.0) || !std::isfinite(rho_e)) {
    throw DomainError("temperature recovery needs positive density and internal energy");
  }
  if (gas.ideal && a == 0.0) return rho_e / (1.5 * rho);

  auto f = [&](double th) { return energy_density(gas, a, rho, th) - rho_e; };
  // Bracket: the left side is increasing and vanishes as theta -> 0.
  double lo = 0.0;
  double hi = gas.ideal ? rho_e / (1.5 * rho) : std::max(rho_e / (1.5 * rho), 1e-8);
  if (a > 0.0) hi = std::min(hi, std::pow(rho_e / a, 0.25));
  if (!gas.ideal) {
    int guard = 0;
    while (f(hi) < 0.0) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 200) throw NumericalError("temperature bracket not found", hi);
    }
  }
  double th = 0.5 * (lo + hi);
  if (gas.ideal) {
    // Radiation-free guess is an upper bound; start there.
    th = hi;
  }
  for (int it = 0; it < 200; ++it) {
    const double r = f(th);
    if (r == 0.0) return th;
    if (r > 0.0) hi = th; else lo = th;
    const double slope = rho * heat_capacity_total(gas, a, rho, th);
    double next = th - r / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - th) <= 1e-13 * th) return next;
    th = next;
    if (hi - lo <= 1e-15 * hi) return th;
  }
  throw NumericalError("temperature recovery did not converge", (hi - lo) / hi);
}

double recover_temperature(double rho, const Vec3& mom, double etot, const GasModel& gas,
                           double a) {
  if (!(rho > 0.0)) throw PositivityError("non-positive density", -1, -1, 0.0);
  const double kin = 0.5 * (mom[0] * mom[0] + mom[1] * mom[1] + mom[2] * mom[2]) / rho;
  const double rho_e = etot - kin;
  if (!(rho_e > 0.0)) throw PositivityError("non-positive internal energy", -1, -1, 0.0);
  return temperature_from_internal(rho, rho_e, gas, a);
}

namespace {

void locate(const Grid& g, std::size_t k, int& i, int& j) {
  const auto nx = static_cast<std::size_t>(g.alloc(0));
  i = static_cast<int>(k % nx) - g.halo(0);
  j = static_cast<int>(k / nx) - g.halo(1);
}

// Primitive arrays over the full allocation (interior plus halo).
struct PrimArrays {
  std::vector<double> rho, u0, u1, theta;
};

PrimArrays primitives_everywhere(const FluidState& s, const GasModel& gas, double a) {
  const Grid& g = s.grid;
  const std::size_t n = g.alloc_size();
  PrimArrays p;
  p.rho = s.rho.data();
  const auto m0 = s.mom[0].data();
  const auto m1 = s.mom[1].data();
  const auto e = s.etot.data();
  p.u0.assign(n, 0.0);
  p.u1.assign(n, 0.0);
  p.theta.assign(n, 0.0);
  std::vector<char> bad(n, 0);
  parallel_for(static_cast<long>(n), [&](long kk) {
    const auto k = static_cast<std::size_t>(kk);
    const double r = p.rho[k];
    if (!(r > 0.0)) {
      bad[k] = 1;
      return;
    }
    const double u0 = m0[k] / r;
    const double u1 = m1[k] / r;
    const double rho_e = e[k] - 0.5 * r * (u0 * u0 + u1 * u1);
    if (!(rho_e > 0.0)) {
      bad[k] = 2;
      return;
    }
    p.u0[k] = u0;
    p.u1[k] = u1;
    p.theta[k] = temperature_from_internal(r, rho_e, gas, a);
  });
  for (std::size_t k = 0; k < n; ++k) {
    if (bad[k] != 0) {
      int i = 0;
      int j = 0;
      locate(g, k, i, j);
      std::ostringstream msg;
      msg << (bad[k] == 1 ? "non-positive density" : "non-positive internal energy")
          << " at cell (" << i << ", " << j << "), t = " << s.time;
      throw PositivityError(msg.str(), i, j, s.time);
    }
  }
  return p;
}

struct Prim {
  double rho, u0, u1, theta;
};

double slope(Reconstruction r, double wm, double w0, double wp) {
  switch (r) {
    case Reconstruction::Constant: return 0.0;
    case Reconstruction::Linear: return 0.5 * (wp - wm);
    case Reconstruction::Minmod: {
      const double dl = w0 - wm;
      const double dr = wp - w0;
      if (dl * dr <= 0.0) return 0.0;
      return std::abs(dl) < std::abs(dr) ? dl : dr;
    }
  }
  return 0.0;
}

Prim load(const PrimArrays& p, std::size_t k) { return {p.rho[k], p.u0[k], p.u1[k], p.theta[k]}; }

Prim reconstruct(Reconstruction r, const Prim& wm, const Prim& w0, const Prim& wp, double sign) {
  return {w0.rho + sign * 0.5 * slope(r, wm.rho, w0.rho, wp.rho),
          w0.u0 + sign * 0.5 * slope(r, wm.u0, w0.u0, wp.u0),
          w0.u1 + sign * 0.5 * slope(r, wm.u1, w0.u1, wp.u1),
          w0.theta + sign * 0.5 * slope(r, wm.theta, w0.theta, wp.theta)};
}

using Flux4 = std::array<double, 4>;

// Convective flux and conservative state of a primitive state along an axis.
void euler_flux(const Prim& w, int axis, const GasModel& gas, double a, Flux4& flux,
                Flux4& cons, double& speed) {
  const double p = pressure(gas, a, w.rho, w.theta);
  const double rho_e = energy_density(gas, a, w.rho, w.theta);
  const double un = axis == 0 ? w.u0 : w.u1;
  const double E = rho_e + 0.5 * w.rho * (w.u0 * w.u0 + w.u1 * w.u1);
  cons = {w.rho, w.rho * w.u0, w.rho * w.u1, E};
  flux = {w.rho * un, w.rho * w.u0 * un, w.rho * w.u1 * un, (E + p) * un};
  flux[1 + axis] += p;
  speed = std::abs(un) + sound_speed(gas, a, w.rho, w.theta);
}

// Face fluxes along one axis. Face f of a line sits between cells f-1 and f.
std::vector<Flux4> face_fluxes(const PrimArrays& p, const Grid& g, int axis,
                               const NsfRunConfig& cfg) {
  const int other = 1 - axis;
  const int nf = g.cells[axis] + 1;
  const int nl = g.cells[other];
  std::vector<Flux4> out(static_cast<std::size_t>(nf) * static_cast<std::size_t>(nl));
  const double h = g.spacing(axis);
  const double h_other = g.dim == 2 ? g.spacing(other) : 1.0;
  const auto& tr = cfg.transport;
  const double nu = cfg.scaling.nu;
  const double omega = cfg.scaling.omega;
  const double a = cfg.scaling.a;
  const bool viscous = nu > 0.0 || omega > 0.0;

  auto idx = [&](int along, int across) {
    return axis == 0 ? g.index(along, across) : g.index(across, along);
  };

  const long total = static_cast<long>(nf) * nl;
  parallel_for(total, [&](long q) {
    const int line = static_cast<int>(q / nf);
    const int f = static_cast<int>(q % nf);
    const Prim wm2 = load(p, idx(f - 2, line));
    const Prim wm1 = load(p, idx(f - 1, line));
    const Prim w0 = load(p, idx(f, line));
    const Prim wp1 = load(p, idx(f + 1, line));
    Prim wl = reconstruct(cfg.reconstruction, wm2, wm1, w0, +1.0);
    Prim wr = reconstruct(cfg.reconstruction, wm1, w0, wp1, -1.0);
    if (!(wl.rho > 0.0 && wl.theta > 0.0 && wr.rho > 0.0 && wr.theta > 0.0)) {
      wl = wm1;
      wr = w0;
    }
    Flux4 fl{}, fr{}, ul{}, ur{};
    double sl = 0.0;
    double sr = 0.0;
    euler_flux(wl, axis, cfg.gas, a, fl, ul, sl);
    euler_flux(wr, axis, cfg.gas, a, fr, ur, sr);
    const double alpha = std::max(sl, sr);
    Flux4 flux{};
    for (int c = 0; c < 4; ++c) flux[c] = 0.5 * (fl[c] + fr[c]) - 0.5 * alpha * (ur[c] - ul[c]);

    if (viscous) {
      const double th_f = 0.5 * (wm1.theta + w0.theta);
      const std::array<double, 2> uf{0.5 * (wm1.u0 + w0.u0), 0.5 * (wm1.u1 + w0.u1)};
      Tensor3 grad{};
      grad[0][axis] = (w0.u0 - wm1.u0) / h;
      grad[1][axis] = (w0.u1 - wm1.u1) / h;
      if (g.dim == 2) {
        const Prim lp = load(p, idx(f - 1, line + 1));
        const Prim lm = load(p, idx(f - 1, line - 1));
        const Prim rp = load(p, idx(f, line + 1));
        const Prim rm = load(p, idx(f, line - 1));
        grad[0][other] = (rp.u0 - rm.u0 + lp.u0 - lm.u0) / (4.0 * h_other);
        grad[1][other] = (rp.u1 - rm.u1 + lp.u1 - lm.u1) / (4.0 * h_other);
      }
      const Tensor3 S = stress_tensor(tr, nu, th_f, grad, g.dim);
      flux[1] -= S[0][axis];
      flux[2] -= S[1][axis];
      flux[3] -= S[axis][0] * uf[0] + S[axis][1] * uf[1];
      flux[3] += -omega * tr.kappa(th_f) * (w0.theta - wm1.theta) / h;
    }
    out[static_cast<std::size_t>(q)] = flux;
  });
  return out;
}

void require_state_ghosts(const FluidState& s, const char* who) {
  s.rho.require_ghosts(who);
  s.mom[0].require_ghosts(who);
  s.mom[1].require_ghosts(who);
  s.etot.require_ghosts(who);
}

}  // namespace

Primitives to_primitives(const FluidState& state, const GasModel& gas, double a) {
  const Grid& g = state.grid;
  const PrimArrays p = primitives_everywhere(state, gas, a);
  Primitives out = Primitives::zeros(g);
  for (int j = -g.halo(1); j < g.cells[1] + g.halo(1); ++j) {
    for (int i = -g.halo(0); i < g.cells[0] + g.halo(0); ++i) {
      const std::size_t k = g.index(i, j);
      out.rho.raw_ref(i, j) = p.rho[k];
      out.u[0].raw_ref(i, j) = p.u0[k];
      out.u[1].raw_ref(i, j) = p.u1[k];
      out.theta.raw_ref(i, j) = p.theta[k];
    }
  }
  if (state.rho.ghosts_valid() && state.mom[0].ghosts_valid() && state.etot.ghosts_valid()) {
    out.rho.mark_ghosts_valid();
    out.u[0].mark_ghosts_valid();
    out.u[1].mark_ghosts_valid();
    out.theta.mark_ghosts_valid();
  }
  return out;
}

FluidState from_primitives(const Primitives& prim, const GasModel& gas, double a) {
  const Grid& g = prim.grid;
  FluidState s = FluidState::zeros(g);
  for (int j = 0; j < g.cells[1]; ++j) {
    for (int i = 0; i < g.cells[0]; ++i) {
      const double r = prim.rho(i, j);
      const double th = prim.theta(i, j);
      const double u0 = prim.u[0](i, j);
      const double u1 = g.dim == 2 ? prim.u[1](i, j) : 0.0;
      s.rho.at(i, j) = r;
      s.mom[0].at(i, j) = r * u0;
      s.mom[1].at(i, j) = r * u1;
      s.etot.at(i, j) = energy_density(gas, a, r, th) + 0.5 * r * (u0 * u0 + u1 * u1);
    }
  }
  s.fill_ghosts();
  return s;
}

FluidState rhs_nsf(const FluidState& state, const NsfRunConfig& config, const SourceFn& source) {
  require_state_ghosts(state, "rhs_nsf");
  const Grid& g = state.grid;
  const PrimArrays p = primitives_everywhere(state, config.gas, config.scaling.a);
  FluidState out = FluidState::zeros(g);
  out.time = state.time;

  std::array<std::vector<Flux4>, 2> flux;
  for (int axis = 0; axis < g.dim; ++axis) flux[axis] = face_fluxes(p, g, axis, config);

  const int nx = g.cells[0];
  const int ny = g.cells[1];
  const double lambda = config.scaling.lambda;
  const long total = static_cast<long>(nx) * ny;
  parallel_for(total, [&](long q) {
    const int i = static_cast<int>(q % nx);
    const int j = static_cast<int>(q / nx);
    Flux4 d{};
    {
      const double inv = 1.0 / g.spacing(0);
      const auto& fl = flux[0][static_cast<std::size_t>(j) * (nx + 1) + i];
      const auto& fr = flux[0][static_cast<std::size_t>(j) * (nx + 1) + i + 1];
      for (int c = 0; c < 4; ++c) d[c] -= (fr[c] - fl[c]) * inv;
    }
    if (g.dim == 2) {
      const double inv = 1.0 / g.spacing(1);
      const auto& fl = flux[1][static_cast<std::size_t>(i) * (ny + 1) + j];
      const auto& fr = flux[1][static_cast<std::size_t>(i) * (ny + 1) + j + 1];
      for (int c = 0; c < 4; ++c) d[c] -= (fr[c] - fl[c]) * inv;
    }
    if (lambda > 0.0) {
      const std::size_t k = g.index(i, j);
      const double u0 = p.u0[k];
      const double u1 = p.u1[k];
      d[1] -= lambda * u0;
      d[2] -= lambda * u1;
      d[3] -= lambda * (u0 * u0 + u1 * u1);
    }
    out.rho.raw_ref(i, j) = d[0];
    out.mom[0].raw_ref(i, j) = d[1];
    out.mom[1].raw_ref(i, j) = d[2];
    out.etot.raw_ref(i, j) = d[3];
  });
  if (source) source(state.time, out);
  return out;
}

double stable_dt(const FluidState& state, const NsfRunConfig& config) {
  const Grid& g = state.grid;
  const auto& gas = config.gas;
  const auto& tr = config.transport;
  const double a = config.scaling.a;
  const double nu = config.scaling.nu;
  const double omega = config.scaling.omega;
  double hmin = g.spacing(0);
  if (g.dim == 2) hmin = std::min(hmin, g.spacing(1));
  const int nx = g.cells[0];
  const long total = static_cast<long>(nx) * g.cells[1];
  std::vector<double> local(static_cast<std::size_t>(total));
  std::vector<char> bad(static_cast<std::size_t>(total), 0);
  parallel_for(total, [&](long q) {
    const int i = static_cast<int>(q % nx);
    const int j = static_cast<int>(q / nx);
    const double r = state.rho(i, j);
    const double u0 = state.mom[0](i, j) / r;
    const double u1 = state.mom[1](i, j) / r;
    const double rho_e = state.etot(i, j) - 0.5 * r * (u0 * u0 + u1 * u1);
    if (!(r > 0.0) || !(rho_e > 0.0)) {
      bad[static_cast<std::size_t>(q)] = 1;
      local[static_cast<std::size_t>(q)] = 0.0;
      return;
    }
    const double th = temperature_from_internal(r, rho_e, gas, a);
    const double c = sound_speed(gas, a, r, th);
    const double speed = std::sqrt(u0 * u0 + u1 * u1) + c;
    double dt = hmin / speed;
    const double diff = std::max(nu * (4.0 / 3.0 * tr.mu(th) + std::abs(tr.eta(th))) / r,
                                 omega * tr.kappa(th) / (r * heat_capacity_total(gas, a, r, th)));
    if (diff > 0.0) dt = std::min(dt, hmin * hmin / (2.0 * g.dim * diff));
    local[static_cast<std::size_t>(q)] = dt;
  });
  for (long q = 0; q < total; ++q) {
    if (bad[static_cast<std::size_t>(q)] != 0) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      throw PositivityError("inadmissible state in time step selection", i, j, state.time);
    }
  }
  const double dt = config.cfl * deterministic_min(local);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw NumericalError("non-positive time step", dt);
  return dt;
}

namespace {

// out = c0 * A + c1 * (B + dt * L) on interior cells.
FluidState combine(double c0, const FluidState& A, double c1, const FluidState& B, double dt,
                   const FluidState& L) {
  const Grid& g = A.grid;
  FluidState out = FluidState::zeros(g);
  const int nx = g.cells[0];
  const long total = static_cast<long>(nx) * g.cells[1];
  auto mix = [&](Field& o, const Field& a, const Field& b, const Field& l) {
  parallel_for(total, [&](long q) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      o.raw_ref(i, j) = c0 * a(i, j) + c1 * (b(i, j) + dt * l(i, j));
    });
  };
  mix(out.rho, A.rho, B.rho, L.rho);
  mix(out.mom[0], A.mom[0], B.mom[0], L.mom[0]);
  mix(out.mom[1], A.mom[1], B.mom[1], L.mom[1]);
  mix(out.etot, A.etot, B.etot, L.etot);
  return out;
}

// Returns the number of floored cells.
long apply_floors(FluidState& s, const NsfRunConfig& cfg) {
  const Grid& g = s.grid;
  const int nx = g.cells[0];
  const long total = static_cast<long>(nx) * g.cells[1];
  std::vector<char> hit(static_cast<std::size_t>(total), 0);
  const double a = cfg.scaling.a;
  parallel_for(total, [&](long q) {
    const int i = static_cast<int>(q % nx);
    const int j = static_cast<int>(q / nx);
    double r = s.rho(i, j);
    if (!std::isfinite(r)) {
      hit[static_cast<std::size_t>(q)] = 3;
      return;
    }
    if (r < cfg.floors.rho) {
      r = cfg.floors.rho;
      s.rho.raw_ref(i, j) = r;
      hit[static_cast<std::size_t>(q)] = 1;
    }
    const double m0 = s.mom[0](i, j);
    const double m1 = s.mom[1](i, j);
    const double kin = 0.5 * (m0 * m0 + m1 * m1) / r;
    const double rho_e = s.etot(i, j) - kin;
    if (!(rho_e > 0.0)) {
      hit[static_cast<std::size_t>(q)] = 2;
      return;
    }
    const double e_floor = energy_density(cfg.gas, a, r, cfg.floors.theta);
    if (rho_e < e_floor) {
      s.etot.raw_ref(i, j) = kin + e_floor;
      hit[static_cast<std::size_t>(q)] = 1;
    }
  });
  long hits = 0;
  for (long q = 0; q < total; ++q) {
    const char h = hit[static_cast<std::size_t>(q)];
    if (h >= 2) {
      const int i = static_cast<int>(q % nx);
      const int j = static_cast<int>(q / nx);
      std::ostringstream msg;
      msg << (h == 2 ? "non-positive internal energy" : "non-finite density") << " at cell (" << i
          << ", " << j << "), t = " << s.time;
      throw PositivityError(msg.str(), i, j, s.time);
    }
    hits += h;
  }
  return hits;
}

}  // namespace

FluidState step(const FluidState& state, double dt, const NsfRunConfig& config, StepStats* stats,
                const SourceFn& source) {
  FluidState s0 = state;
  if (!s0.rho.ghosts_valid() || !s0.mom[0].ghosts_valid() || !s0.mom[1].ghosts_valid() ||
      !s0.etot.ghosts_valid()) {
    s0.fill_ghosts();
  }
  const double t = state.time;
  auto stage = [&](FluidState& s, double time) {
    s.time = time;
    const long h = apply_floors(s, config);
    if (stats != nullptr) {
      stats->floor_hits += h;
      stats->max_stage_hits = std::max(stats->max_stage_hits, h);
    }
    s.fill_ghosts();
  };
  const FluidState l0 = rhs_nsf(s0, config, source);
  FluidState s1 = combine(0.0, s0, 1.0, s0, dt, l0);
  stage(s1, t + dt);
  const FluidState l1 = rhs_nsf(s1, config, source);
  FluidState s2 = combine(0.75, s0, 0.25, s1, dt, l1);
  stage(s2, t + 0.5 * dt);
  const FluidState l2 = rhs_nsf(s2, config, source);
  FluidState s3 = combine(1.0 / 3.0, s0, 2.0 / 3.0, s2, dt, l2);
  stage(s3, t + dt);
  return s3;
}

EntropyProduction entropy_production(const FluidState& state, const NsfRunConfig& config) {
  FluidState s = state;
  s.fill_ghosts();
  const Primitives p = to_primitives(s, config.gas, config.scaling.a);
  const Grid& g = s.grid;
  std::array<std::array<Field, 2>, 2> du;
  for (int k = 0; k < 2; ++k)
    for (int d = 0; d < 2; ++d) du[k][d] = d < g.dim ? gradient(p.u[k], d) : Field(g);
  std::array<Field, 2> dth{gradient(p.theta, 0), g.dim == 2 ? gradient(p.theta, 1) : Field(g)};
  EntropyProduction out;
  out.sigma = Field(g);
  const auto& tr = config.transport;
  const double nu = config.scaling.nu;
  const double omega = config.scaling.omega;
  const int nx = g.cells[0];
  const long total = static_cast<long>(nx) * g.cells[1];
  parallel_for(total, [&](long q) {
    const int i = static_cast<int>(q % nx);
    const int j = static_cast<int>(q / nx);
    Tensor3 grad{};
    for (int k = 0; k < 2; ++k)
      for (int d = 0; d < g.dim; ++d) grad[k][d] = du[k][d](i, j);
    const double th = p.theta(i, j);
    const double gt2 = dth[0](i, j) * dth[0](i, j) + dth[1](i, j) * dth[1](i, j);
    const double visc = nu > 0.0 ? viscous_dissipation(tr, nu, th, grad, g.dim) : 0.0;
    const double heat = omega > 0.0 ? omega * tr.kappa(th) * gt2 / th : 0.0;
    out.sigma.raw_ref(i, j) = (visc + heat) / th;
  });
  out.integral = integrate(out.sigma);
  return out;
}

std::vector<double> output_times(double t_end, double stride) {
  if (!(t_end > 0.0) || !(stride > 0.0)) throw UsageError("output times need positive t_end and stride");
  std::vector<double> out;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * stride;
    if (t >= t_end * (1.0 - 1e-12)) break;
    out.push_back(t);
  }
  out.push_back(t_end);
  return out;
}

Snapshot to_snapshot(const FluidState& state) {
  Snapshot snap;
  snap.grid = state.grid;
  snap.time = state.time;
  snap.names = {"rho", "mom_x"};
  snap.values = {state.rho.interior(), state.mom[0].interior()};
  if (state.grid.dim == 2) {
    snap.names.push_back("mom_y");
    snap.values.push_back(state.mom[1].interior());
  }
  snap.names.push_back("etot");
  snap.values.push_back(state.etot.interior());
  return snap;
}

FluidState from_snapshot(const Snapshot& snap, int ghosts) {
  Grid g = snap.grid;
  g.ghosts = ghosts;
  FluidState s = FluidState::zeros(g);
  s.time = snap.time;
  auto find = [&](const std::string& name) -> const std::vector<double>* {
    for (std::size_t k = 0; k < snap.names.size(); ++k)
      if (snap.names[k] == name) return &snap.values[k];
    return nullptr;
  };
  const auto* r = find("rho");
  const auto* mx = find("mom_x");
  const auto* e = find("etot");
  if (r == nullptr || mx == nullptr || e == nullptr) throw UsageError("snapshot lacks state fields");
  s.rho.set_interior(*r);
  s.mom[0].set_interior(*mx);
  if (const auto* my = find("mom_y")) s.mom[1].set_interior(*my);
  s.etot.set_interior(*e);
  s.fill_ghosts();
  return s;
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  out << "t,mass,etot,damping_integral,sigma_integral,min_rho,min_theta,floor_hits\n";
  for (const auto& r : rows) {
    out << format_double(r.t) << ',' << format_double(r.mass) << ',' << format_double(r.etot) << ','
        << format_double(r.damping_integral) << ',' << format_double(r.sigma_integral) << ','
        << format_double(r.min_rho) << ',' << format_double(r.min_theta) << ',' << r.floor_hits
        << '\n';
  }
}

namespace {

double speed_squared_integral(const FluidState& s) {
  const Grid& g = s.grid;
  Field u2(g);
  for (int j = 0; j < g.cells[1]; ++j) {
    for (int i = 0; i < g.cells[0]; ++i) {
      const double r = s.rho(i, j);
      const double u0 = s.mom[0](i, j) / r;
      const double u1 = s.mom[1](i, j) / r;
      u2.raw_ref(i, j) = u0 * u0 + u1 * u1;
    }
  }
  return integrate(u2);
}

std::string snapshot_name(std::size_t k) {
  std::ostringstream os;
  os << "snap_";
  os.width(5);
  os.fill('0');
  os << k << ".bin";
  return os.str();
}

}  // namespace

Trajectory simulate(const NsfRunConfig& config, const FluidState& initial,
                    const SimulateOptions& options) {
  config.validate();
  if (!initial.grid.same_cells(config.grid)) throw UsageError("initial state grid differs from config");
  FluidState state = initial;
  state.fill_ghosts();
  const double a = config.scaling.a;
  const double lambda = config.scaling.lambda;

  Trajectory traj;
  const Primitives p0 = to_primitives(state, config.gas, a);
  traj.bounds = measure_data_bounds(p0);
  if (config.floors.rho > 1e-8 * interior_min(p0.rho) ||
      config.floors.theta > 1e-8 * interior_min(p0.theta)) {
    throw UsageError("floors must not exceed 1e-8 of the initial minima");
  }

  if (options.out_dir) std::filesystem::create_directories(*options.out_dir / "snapshots");

  const std::vector<double> times = output_times(config.t_end, config.output_stride);
  double damping = 0.0;
  double u2_prev = speed_squared_integral(state);
  long floor_hits = 0;
  const long health_limit = static_cast<long>(0.001 * config.grid.interior_count());

  auto record = [&](const FluidState& s) {
    const Primitives p = to_primitives(s, config.gas, a);
    DiagnosticsRow row;
    row.t = s.time;
    row.mass = integrate(s.rho);
    row.etot = integrate(s.etot);
    row.damping_integral = damping;
    row.sigma_integral = entropy_production(s, config).integral;
    row.min_rho = interior_min(p.rho);
    row.min_theta = interior_min(p.theta);
    row.floor_hits = floor_hits;
    if (options.out_dir) {
      write_snapshot(*options.out_dir / "snapshots" / snapshot_name(traj.rows.size()), to_snapshot(s));
    }
    traj.rows.push_back(row);
    if (options.keep_snapshots) traj.snapshots.push_back(s);
  };

  auto finish = [&]() {
    if (options.out_dir) write_diagnostics_csv(*options.out_dir / "diagnostics.csv", traj.rows);
  };

  try {
    record(state);
    std::size_t next = 1;
    while (next < times.size()) {
      if (traj.steps >= options.max_steps) throw NumericalError("step budget exhausted", state.time);
      const double remaining = times[next] - state.time;
      double dt = stable_dt(state, config);
      bool lands = false;
      if (dt >= remaining) {
        dt = remaining;
        lands = true;
      }
      StepStats stats;
      FluidState advanced = step(state, dt, config, &stats, options.source);
      if (lands) advanced.time = times[next];
      const double mass = integrate(advanced.rho);
      const double energy = integrate(advanced.etot);
      const double u2 = speed_squared_integral(advanced);
      if (!std::isfinite(mass) || !std::isfinite(energy) || !std::isfinite(u2)) {
        throw PositivityError("non-finite state", -1, -1, advanced.time);
      }
      floor_hits += stats.floor_hits;
      if (stats.max_stage_hits > health_limit && traj.healthy) {
        traj.healthy = false;
        std::ostringstream msg;
        msg << "floor activations in " << stats.max_stage_hits << " cells at t = " << advanced.time;
        traj.failure = msg.str();
      }
      damping += lambda * 0.5 * (u2_prev + u2) * dt;
      u2_prev = u2;
      state = std::move(advanced);
      ++traj.steps;
      if (lands) {
        record(state);
        ++next;
      }
    }
  } catch (const PositivityError& e) {
    traj.aborted = true;
    traj.healthy = false;
    traj.failure = e.what();
  } catch (const NumericalError& e) {
    traj.aborted = true;
    traj.healthy = false;
    traj.failure = e.what();
  } catch (const DomainError& e) {
    traj.aborted = true;
    traj.healthy = false;
    traj.failure = e.what();
  }
  if (traj.aborted && options.out_dir) {
    write_snapshot(*options.out_dir / "abort_state.bin", to_snapshot(state));
    std::ofstream(*options.out_dir / "failure.txt") << traj.failure << '\n';
  }
  finish();
  return traj;
}

}  // namespace nsflab
