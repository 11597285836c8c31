#include "nsflab/relative_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/random/sobol.hpp>
#include <boost/random/uniform_01.hpp>

#include "nsflab/errors.hpp"
#include "nsflab/nsf_solver.hpp"
#include "nsflab/parallel.hpp"

namespace nsflab {

double ballistic_free_energy(const GasModel& gas, double a, double rho, double theta,
                             double Theta) {
  if (!(Theta > 0.0)) throw DomainError("reference temperature must be positive");
  return energy_density(gas, a, rho, theta) - Theta * entropy_density(gas, a, rho, theta);
}

double ballistic_free_energy_drho(const GasModel& gas, double rho, double theta, double Theta) {
  if (!(rho > 0.0) || !(theta > 0.0) || !(Theta > 0.0)) {
    throw DomainError("free energy derivative needs positive arguments");
  }
  const double z = rho / std::pow(theta, 1.5);
  if (gas.ideal) return 1.5 * theta - Theta * (gas.S0 - std::log(z) - 1.0);
  return 1.5 * theta * gas.dP(z) - Theta * (gas.S(z) + z * gas.dS(z));
}

double relative_energy_density(const GasModel& gas, double a, const StatePoint& state,
                               const StatePoint& ref) {
  if (!(state.rho >= 0.0) || !(ref.rho > 0.0)) throw DomainError("relative energy needs rho >= 0, r > 0");
  double du2 = 0.0;
  for (int k = 0; k < 3; ++k) du2 += (state.u[k] - ref.u[k]) * (state.u[k] - ref.u[k]);
  const double H = ballistic_free_energy(gas, a, state.rho, state.theta, ref.theta);
  const double Hr = ballistic_free_energy(gas, a, ref.rho, ref.theta, ref.theta);
  const double dHr = ballistic_free_energy_drho(gas, ref.rho, ref.theta, ref.theta);
  return 0.5 * state.rho * du2 + H - dHr * (state.rho - ref.rho) - Hr;
}

namespace {

void require_same_grid(const Grid& a, const Grid& b) {
  if (!a.same_cells(b)) throw UsageError("fields and reference live on different grids");
}

}  // namespace

Field relative_energy_field(const Primitives& fields, const ReferenceFields& reference,
                            const GasModel& gas, double a) {
  require_same_grid(fields.grid, reference.grid);
  const Grid& g = fields.grid;
  Field out(g);
  const int nx = g.cells[0];
  parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
    const int i = static_cast<int>(q % nx);
    const int j = static_cast<int>(q / nx);
    const StatePoint s{fields.rho(i, j), fields.theta(i, j), {fields.u[0](i, j), fields.u[1](i, j), 0.0}};
    const StatePoint r{reference.rho(i, j), reference.theta(i, j),
                       {reference.u[0](i, j), reference.u[1](i, j), 0.0}};
    out.raw_ref(i, j) = relative_energy_density(gas, a, s, r);
  });
  return out;
}

double relative_energy(const Primitives& fields, const ReferenceFields& reference,
                       const GasModel& gas, double a) {
  return integrate(relative_energy_field(fields, reference, gas, a));
}

double relative_energy(const FluidState& fields, const ReferenceFields& reference,
                       const GasModel& gas, double a) {
  require_same_grid(fields.grid, reference.grid);
  return relative_energy(to_primitives(fields, gas, a), reference, gas, a);
}

void StateBox::validate() const {
  if (!(rho_lo > 0.0 && rho_lo < rho_hi && theta_lo > 0.0 && theta_lo < theta_hi) ||
      !std::isfinite(rho_hi) || !std::isfinite(theta_hi)) {
    throw UsageError("state box must be a nonempty compact subset of the positive quadrant");
  }
}

CoercivityResult coercivity_constant(const GasModel& gas, double a, const StateBox& K,
                                     long sample_count, std::uint64_t skip) {
  K.validate();
  if (sample_count < 1000) throw UsageError("coercivity sampling needs at least 1000 points");
  constexpr int kDim = 5;
  boost::random::sobol gen(kDim);
  gen.discard(static_cast<boost::uintmax_t>(skip) * kDim);
  boost::random::uniform_01<double> unit;
  std::vector<std::array<double, kDim>> pts(static_cast<std::size_t>(sample_count));
  for (auto& p : pts)
    for (auto& x : p) x = unit(gen);

  std::vector<double> ratio(pts.size(), std::numeric_limits<double>::infinity());
  parallel_for(sample_count, [&](long q) {
    const auto& p = pts[static_cast<std::size_t>(q)];
    const double rho = K.rho_lo + p[0] * (K.rho_hi - K.rho_lo);
    const double theta = K.theta_lo + p[1] * (K.theta_hi - K.theta_lo);
    const double r = K.rho_lo + p[2] * (K.rho_hi - K.rho_lo);
    const double Theta = K.theta_lo + p[3] * (K.theta_hi - K.theta_lo);
    const double w = 2.0 * p[4] - 1.0;
    const double denom = (rho - r) * (rho - r) + (theta - Theta) * (theta - Theta) + w * w;
    if (denom < 1e-8) return;
    const double e = relative_energy_density(gas, a, {rho, theta, {w, 0.0, 0.0}},
                                             {r, Theta, {0.0, 0.0, 0.0}});
    ratio[static_cast<std::size_t>(q)] = e / denom;
  });

  CoercivityResult res;
  res.constant = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < pts.size(); ++q) {
    if (std::isinf(ratio[q])) {
      ++res.excluded;
      continue;
    }
    ++res.used;
    if (ratio[q] < res.constant) {
      res.constant = ratio[q];
      const auto& p = pts[q];
      res.argmin = {K.rho_lo + p[0] * (K.rho_hi - K.rho_lo),
                    K.theta_lo + p[1] * (K.theta_hi - K.theta_lo),
                    K.rho_lo + p[2] * (K.rho_hi - K.rho_lo),
                    K.theta_lo + p[3] * (K.theta_hi - K.theta_lo), std::abs(2.0 * p[4] - 1.0)};
    }
  }
  if (!(res.constant > 0.0) || !std::isfinite(res.constant)) {
    std::ostringstream msg;
    msg << "relative energy is not coercive on the box: minimum ratio " << res.constant;
    throw ModelViolation(msg.str());
  }
  return res;
}

ResidualBoundResult residual_lower_bound_check(const GasModel& gas, double a, const StateBox& K,
                                               std::span<const StatePoint> states,
                                               std::span<const StatePoint> references) {
  K.validate();
  for (const auto& r : references) {
    if (!K.contains(r.rho, r.theta)) throw UsageError("reference point outside the box");
  }
  ResidualBoundResult res;
  res.constant = std::numeric_limits<double>::infinity();
  for (const auto& s : states) {
    if (K.contains(s.rho, s.theta)) {
      ++res.excluded;
      continue;
    }
    const double rho_e = energy_density(gas, a, s.rho, s.theta);
    const double rho_s = std::abs(entropy_density(gas, a, s.rho, s.theta));
    for (const auto& r : references) {
      double du2 = 0.0;
      for (int k = 0; k < 3; ++k) du2 += (s.u[k] - r.u[k]) * (s.u[k] - r.u[k]);
      const double bound = 1.0 + s.rho * du2 + rho_e + rho_s;
      const double e = relative_energy_density(gas, a, s, r);
      res.constant = std::min(res.constant, e / bound);
      ++res.used;
    }
  }
  if (res.used == 0) throw UsageError("no admissible state outside the box");
  if (!(res.constant > 0.0)) {
    std::ostringstream msg;
    msg << "relative energy not bounded below away from the box: c = " << res.constant;
    throw ModelViolation(msg.str());
  }
  return res;
}

void EssentialResidualWindow::validate() const {
  if (!(rho_lo > 0.0 && rho_lo < rho_hi && theta_lo > 0.0 && theta_lo < theta_hi)) {
    throw UsageError("window bounds must satisfy 0 < lo < hi");
  }
  if (!(margin > 0.0 && margin < 1.0)) throw UsageError("window margin must lie in (0, 1)");
}

namespace {

double smoothstep5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }

double ramp(double x, double lo, double hi, double m) {
  if (x >= lo && x <= hi) return 1.0;
  const double lo_out = lo * (1.0 - m);
  const double hi_out = hi * (1.0 + m);
  if (x <= lo_out || x >= hi_out) return 0.0;
  if (x < lo) return smoothstep5((x - lo_out) / (lo - lo_out));
  return smoothstep5((hi_out - x) / (hi_out - hi));
}

}  // namespace

double EssentialResidualWindow::cutoff(double rho, double theta) const {
  return ramp(rho, rho_lo, rho_hi, margin) * ramp(theta, theta_lo, theta_hi, margin);
}

SplitParts essential_residual_split(std::span<const double> values,
                                    const EssentialResidualWindow& window,
                                    std::span<const std::array<double, 2>> points) {
  window.validate();
  if (values.size() != points.size()) throw UsageError("split needs one cutoff point per value");
  SplitParts out;
  out.essential.resize(values.size());
  out.residual.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double phi = window.cutoff(points[k][0], points[k][1]);
    out.essential[k] = phi * values[k];
    out.residual[k] = values[k] - out.essential[k];
  }
  return out;
}

QuadraticBoundsReport quadratic_bounds_check(const Primitives& fields,
                                             const ReferenceFields& reference,
                                             const EssentialResidualWindow& window,
                                             const GasModel& gas, double a) {
  window.validate();
  require_same_grid(fields.grid, reference.grid);
  const Grid& g = fields.grid;
  for (int j = 0; j < g.cells[1]; ++j) {
    for (int i = 0; i < g.cells[0]; ++i) {
      const double r = reference.rho(i, j);
      const double th = reference.theta(i, j);
      if (!(r > window.rho_lo && r < window.rho_hi && th > window.theta_lo && th < window.theta_hi)) {
        throw UsageError("reference leaves the inner window");
      }
    }
  }
  Field ess(g);
  Field res(g);
  const int nx = g.cells[0];
  parallel_for(static_cast<long>(g.interior_count()), [&](long q) {
    const int i = static_cast<int>(q % nx);
    const int j = static_cast<int>(q / nx);
    const double rho = fields.rho(i, j);
    const double th = fields.theta(i, j);
    const double du0 = fields.u[0](i, j) - reference.u[0](i, j);
    const double du1 = fields.u[1](i, j) - reference.u[1](i, j);
    const double du2 = du0 * du0 + du1 * du1;
    const double drho = rho - reference.rho(i, j);
    const double dth = th - reference.theta(i, j);
    const double phi = window.cutoff(rho, th);
    ess.raw_ref(i, j) = phi * phi * (drho * drho + dth * dth + du2);
    res.raw_ref(i, j) = rho * du2 + (1.0 - phi) * (1.0 + std::pow(rho, 5.0 / 3.0) + rho * th +
                                                   a * th * th * th * th);
  });
  QuadraticBoundsReport rep;
  rep.relative_energy = relative_energy(fields, reference, gas, a);
  rep.essential_lhs = integrate(ess);
  rep.residual_lhs = integrate(res);
  auto fit = [&](double lhs) {
    if (lhs == 0.0) return 0.0;
    if (!(rep.relative_energy > 0.0)) {
      throw ModelViolation("quadratic bound fails: positive left side with vanishing relative energy");
    }
    const double c = lhs / rep.relative_energy;
    if (!std::isfinite(c)) throw ModelViolation("quadratic bound constant is not finite");
    return c;
  };
  rep.essential_constant = fit(rep.essential_lhs);
  rep.residual_constant = fit(rep.residual_lhs);
  return rep;
}

RelativeEnergyReport RelativeEnergyReport::make(std::vector<double> times,
                                                std::vector<double> values, double envelope) {
  if (times.size() != values.size() || values.empty()) {
    throw UsageError("relative energy report needs one value per instant");
  }
  RelativeEnergyReport r;
  r.sup_value = *std::max_element(values.begin(), values.end());
  r.times = std::move(times);
  r.values = std::move(values);
  r.envelope = envelope;
  return r;
}

std::string RelativeEnergyReport::to_text() const {
  std::ostringstream os;
  os << "instants " << times.size() << '\n';
  os << "E_init " << format_double(values.front()) << '\n';
  os << "E_sup " << format_double(sup_value) << '\n';
  os << "envelope " << format_double(envelope) << '\n';
  return os.str();
}

}  // namespace nsflab
