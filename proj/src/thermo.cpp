#include "nsflab/thermo.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "nsflab/errors.hpp"

namespace nsflab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_state(double rho, double theta, bool allow_zero_rho) {
  if (!std::isfinite(rho) || !std::isfinite(theta)) throw DomainError("non-finite thermodynamic state");
  if (theta <= 0.0) throw DomainError("temperature must be positive");
  if (rho < 0.0 || (!allow_zero_rho && rho == 0.0)) throw DomainError("density out of range");
}

double zeta(double rho, double theta) { return rho / std::pow(theta, 1.5); }

template <class F>
double centered_derivative(F&& f, double x) {
  // Sixth-order centered stencil; the step is rounded so that x + h is exact.
  const double h0 = 0.5 * std::pow(kEps, 1.0 / 7.0) * std::max(std::abs(x), 1e-3);
  volatile double xp = x + h0;
  const double h = xp - x;
  return (f(x + 3 * h) - 9 * f(x + 2 * h) + 45 * f(x + h) - 45 * f(x - h) + 9 * f(x - 2 * h) -
          f(x - 3 * h)) /
         (60 * h);
}

}  // namespace

// ---------------------------------------------------------------------------
// GasModel

double GasModel::dS(double z) const {
  const Dual p = profile(z);
  return -1.5 * ((5.0 / 3.0) * p.v - p.d * z) / (z * z);
}

double GasModel::S(double z) const {
  if (!(z > 0.0) || !std::isfinite(z)) throw DomainError("S(Z) requires finite Z > 0");
  if (ideal) return S0 - std::log(z);
  // integrate in t = log Z so that wide Z ranges are cheap
  const double t_end = std::log(z);
  if (t_end == 0.0) return S0;
  auto integrand = [this](double t) {
    const double zz = std::exp(t);
    return dS(zz) * zz;
  };
  // Short intervals: fixed Gauss-Legendre, whose error is far below the
  // tolerance there while the adaptive error estimate degenerates.
  if (std::abs(t_end) < 0.05) {
    return S0 + boost::math::quadrature::gauss<double, 15>::integrate(integrand, 0.0, t_end);
  }
  double err = 0.0;
  double l1 = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, t_end, 20, 1e-13, &err, &l1);
  constexpr double kAbsTol = 1e-10;
  if (!(err <= kAbsTol) || !std::isfinite(val)) {
    throw NumericalError("entropy quadrature did not converge", err);
  }
  return S0 + val;
}

GasModel GasModel::ideal_gas(double S0) {
  GasModel g;
  g.name = "ideal";
  g.profile = [](double z) { return Dual{z, 1.0}; };
  g.expression = "Z";
  g.S0 = S0;
  g.P_inf = 0.0;
  g.ideal = true;
  return g;
}

GasModel GasModel::from_expression(std::string name, const std::string& expression, double S0) {
  const Expression e = Expression::parse(expression);
  GasModel g;
  g.name = std::move(name);
  g.profile = [e](double z) { return e.eval(z); };
  g.expression = expression;
  g.S0 = S0;
  const double zbig = 1e12;
  g.P_inf = e(zbig) / std::pow(zbig, 5.0 / 3.0);
  g.ideal = false;
  return g;
}

// ---------------------------------------------------------------------------
// TransportModel / ScalingParams

TransportModel TransportModel::default_model(double b) {
  TransportModel t;
  t.name = "default";
  t.b = b;
  t.mu = [b](double th) { return 1.0 + std::pow(th, b); };
  t.eta = [b](double th) { return 0.1 * (1.0 + std::pow(th, b)); };
  t.kappa = [](double th) { return 1.0 + th * th * th; };
  t.mu_lower = 1.0;
  t.eta_upper = 0.1;
  t.kappa_lower = 1.0;
  t.kappa_upper = 1.0;
  return t;
}

TransportModel TransportModel::canonical() {
  TransportModel t;
  t.name = "canonical";
  t.b = 1.0;
  t.mu = [](double th) { return 1.0 + th; };
  t.eta = [](double) { return 0.0; };
  t.kappa = [](double th) { return 1.0 + th * th * th; };
  t.mu_lower = 1.0;
  t.eta_upper = 1.0;
  t.kappa_lower = 1.0;
  t.kappa_upper = 1.0;
  return t;
}

void ScalingParams::validate(bool require_positive) const {
  for (double v : {a, nu, omega, lambda}) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError("scaling parameters must be finite and >= 0");
  }
  if (require_positive && (a <= 0.0 || nu <= 0.0 || omega <= 0.0)) {
    throw DomainError("a, nu and omega must be strictly positive for a Navier-Stokes-Fourier run");
  }
}

// ---------------------------------------------------------------------------
// closures

double pressure_molecular(const GasModel& gas, double rho, double theta) {
  require_state(rho, theta, true);
  if (gas.ideal) return rho * theta;
  return std::pow(theta, 2.5) * gas.P(zeta(rho, theta));
}

double energy_molecular(const GasModel& gas, double rho, double theta) {
  require_state(rho, theta, false);
  if (gas.ideal) return 1.5 * theta;
  const double z = zeta(rho, theta);
  return 1.5 * theta * gas.P(z) / z;
}

double entropy_molecular(const GasModel& gas, double rho, double theta) {
  require_state(rho, theta, false);
  if (gas.ideal) return gas.S0 - std::log(rho) + 1.5 * std::log(theta);
  return gas.S(zeta(rho, theta));
}

PressureParts pressure_parts(const GasModel& gas, double a, double rho, double theta) {
  const double t2 = theta * theta;
  return {pressure_molecular(gas, rho, theta), a / 3.0 * t2 * t2};
}

double pressure(const GasModel& gas, double a, double rho, double theta) {
  return pressure_parts(gas, a, rho, theta).total();
}

double internal_energy(const GasModel& gas, double a, double rho, double theta) {
  const double t2 = theta * theta;
  return energy_molecular(gas, rho, theta) + a * t2 * t2 / rho;
}

double energy_density(const GasModel& gas, double a, double rho, double theta) {
  require_state(rho, theta, true);
  const double t2 = theta * theta;
  const double rad = a * t2 * t2;
  if (rho == 0.0) return rad;
  if (gas.ideal) return 1.5 * rho * theta + rad;
  return 1.5 * std::pow(theta, 2.5) * gas.P(zeta(rho, theta)) + rad;
}

double entropy(const GasModel& gas, double a, double rho, double theta) {
  return entropy_molecular(gas, rho, theta) + 4.0 * a * theta * theta * theta / (3.0 * rho);
}

double entropy_density(const GasModel& gas, double a, double rho, double theta) {
  require_state(rho, theta, true);
  const double rad = 4.0 * a * theta * theta * theta / 3.0;
  if (rho == 0.0) return rad;
  return rho * entropy_molecular(gas, rho, theta) + rad;
}

double heat_capacity_cv(const GasModel& gas, double rho, double theta) {
  require_state(rho, theta, false);
  double cv = 1.5;
  if (!gas.ideal) {
    const double z = zeta(rho, theta);
    const Dual p = gas.profile(z);
    cv = 2.25 * ((5.0 / 3.0) * p.v - p.d * z) / z;
  }
  if (!(cv > 0.0)) throw ModelViolation("non-positive heat capacity");
  return cv;
}

double heat_capacity_total(const GasModel& gas, double a, double rho, double theta) {
  return heat_capacity_cv(gas, rho, theta) + 4.0 * a * theta * theta * theta / rho;
}

PressureDerivatives pressure_derivatives(const GasModel& gas, double a, double rho, double theta) {
  require_state(rho, theta, true);
  const double rad = 4.0 / 3.0 * a * theta * theta * theta;
  if (gas.ideal) return {theta, rho + rad};
  const double z = zeta(rho, theta);
  const Dual p = gas.profile(z);
  const double t15 = std::pow(theta, 1.5);
  return {theta * p.d, t15 * (2.5 * p.v - 1.5 * z * p.d) + rad};
}

PressureDerivatives entropy_molecular_derivatives(const GasModel& gas, double rho, double theta) {
  require_state(rho, theta, false);
  if (gas.ideal) return {-1.0 / rho, 1.5 / theta};
  const double z = zeta(rho, theta);
  const double ds = gas.dS(z);
  return {ds * z / rho, -1.5 * ds * z / theta};
}

double sound_speed(const GasModel& gas, double a, double rho, double theta) {
  const PressureDerivatives dp = pressure_derivatives(gas, a, rho, theta);
  const double cv = heat_capacity_total(gas, a, rho, theta);
  const double c2 = dp.d_rho + theta * dp.d_theta * dp.d_theta / (rho * rho * cv);
  if (!(c2 > 0.0)) throw ModelViolation("non-positive squared sound speed");
  return std::sqrt(c2);
}

double fd_step(double x) { return std::cbrt(kEps) * std::max(std::abs(x), 1e-8); }

std::pair<double, double> gibbs_residual_with(
    const GasModel& gas, double a, double rho, double theta,
    const std::function<double(double, double)>& energy) {
  require_state(rho, theta, false);
  const double s_theta = centered_derivative([&](double t) { return entropy(gas, a, rho, t); }, theta);
  const double e_theta = centered_derivative([&](double t) { return energy(rho, t); }, theta);
  const double s_rho = centered_derivative([&](double r) { return entropy(gas, a, r, theta); }, rho);
  const double e_rho = centered_derivative([&](double r) { return energy(r, theta); }, rho);
  const double p = pressure(gas, a, rho, theta);
  const double d_inv_rho = -1.0 / (rho * rho);
  return {theta * s_theta - e_theta, theta * s_rho - e_rho - p * d_inv_rho};
}

std::pair<double, double> gibbs_residual(const GasModel& gas, double a, double rho, double theta) {
  return gibbs_residual_with(gas, a, rho, theta,
                             [&](double r, double t) { return internal_energy(gas, a, r, t); });
}

// ---------------------------------------------------------------------------
// Newton / Fourier

namespace {
Tensor3 restrict_block(const Tensor3& g, int dim) {
  Tensor3 out{};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) out[i][j] = g[i][j];
  return out;
}
}  // namespace

Tensor3 stress_tensor(const TransportModel& transport, double nu, double theta,
                      const Tensor3& grad_u, int dim) {
  const Tensor3 g = restrict_block(grad_u, dim);
  const double div = g[0][0] + g[1][1] + g[2][2];
  const double mu = transport.mu(theta);
  const double eta = transport.eta(theta);
  Tensor3 s{};
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      double v = mu * (g[i][j] + g[j][i]);
      if (i == j) v += (eta - 2.0 / 3.0 * mu) * div;
      s[i][j] = nu * v;
    }
  }
  return s;
}

double traceless_strain_norm2(const Tensor3& grad_u, int dim) {
  const Tensor3 g = restrict_block(grad_u, dim);
  const double div = g[0][0] + g[1][1] + g[2][2];
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double t = g[i][j] + g[j][i];
      if (i == j) t -= 2.0 / 3.0 * div;
      sum += t * t;
    }
  }
  return sum;
}

double viscous_dissipation(const TransportModel& transport, double nu, double theta,
                           const Tensor3& grad_u, int dim) {
  const Tensor3 g = restrict_block(grad_u, dim);
  const double div = g[0][0] + g[1][1] + g[2][2];
  return nu * (0.5 * transport.mu(theta) * traceless_strain_norm2(g, 3) +
               transport.eta(theta) * div * div);
}

Vec3 heat_flux(const TransportModel& transport, double omega, double theta, const Vec3& grad_theta) {
  const double k = omega * transport.kappa(theta);
  return {-k * grad_theta[0], -k * grad_theta[1], -k * grad_theta[2]};
}

// ---------------------------------------------------------------------------
// hypothesis report

const HypothesisResult& HypothesisReport::get(const std::string& id) const {
  for (const auto& r : results)
    if (r.id == id) return r;
  throw UsageError("no hypothesis " + id + " in report");
}

std::string HypothesisReport::to_text() const {
  std::ostringstream os;
  os.precision(6);
  for (const auto& r : results) {
    os << r.id << ' ' << (r.passed ? "PASS" : "FAIL");
    if (!r.witnesses.empty()) {
      os << " witnesses=";
      for (std::size_t k = 0; k < r.witnesses.size() && k < 5; ++k) os << (k ? "," : "") << r.witnesses[k];
    }
    os << "  " << r.detail << '\n';
  }
  return os.str();
}

namespace {

template <class F>
HypothesisResult guarded(const std::string& id, F&& check) {
  try {
    return check();
  } catch (const std::exception& e) {
    HypothesisResult r;
    r.id = id;
    r.passed = false;
    r.detail = std::string("evaluation failed: ") + e.what();
    return r;
  }
}

}  // namespace

HypothesisReport hypothesis_report(const GasModel& gas, const TransportModel& transport,
                                   std::span<const double> z_grid,
                                   std::span<const double> theta_grid) {
  HypothesisReport rep;
  std::ostringstream os;

  rep.results.push_back(guarded("H2", [&] {
    HypothesisResult r{"H2", true, {}, ""};
    const Dual at0 = gas.profile(0.0);
    if (!(std::abs(at0.v) <= 1e-14)) {
      r.passed = false;
      r.witnesses.push_back(0.0);
      r.detail += "P(0) != 0; ";
    }
    if (!(at0.d > 0.0)) {
      // P'(0) is the endpoint value; flag the grid point nearest to it
      r.passed = false;
      if (!z_grid.empty()) r.witnesses.push_back(*std::min_element(z_grid.begin(), z_grid.end()));
      r.detail += "P'(0) <= 0 (limit Z->0+); ";
    }
    for (double z : z_grid) {
      if (!(gas.dP(z) > 0.0)) {
        r.passed = false;
        r.witnesses.push_back(z);
      }
    }
    if (r.passed) r.detail = "P(0)=0, P'>0 on grid";
    return r;
  }));

  rep.results.push_back(guarded("H3", [&] {
    HypothesisResult r{"H3", true, {}, ""};
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double z : z_grid) {
      const Dual p = gas.profile(z);
      const double ratio = ((5.0 / 3.0) * p.v - p.d * z) / z;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        r.passed = false;
        r.witnesses.push_back(z);
      }
    }
    rep.h3_ratio_min = lo;
    rep.h3_ratio_max = hi;
    const double zmax = *std::max_element(z_grid.begin(), z_grid.end());
    const double tail = gas.P(zmax) / std::pow(zmax, 5.0 / 3.0);
    const bool converges = std::abs(tail - gas.P_inf) <= gas.P_inf_tol * std::max(1.0, gas.P_inf);
    if (!converges) {
      r.passed = false;
      r.witnesses.push_back(zmax);
    }
    std::ostringstream d;
    d.precision(15);
    d << "ratio in [" << lo << ", " << hi << "], P(Zmax)/Zmax^(5/3)=" << tail
      << " vs declared P_inf=" << gas.P_inf;
    if (gas.P_inf <= 0.0) d << " (declared limit is not positive)";
    r.detail = d.str();
    return r;
  }));

  rep.results.push_back(guarded("H6", [&] {
    HypothesisResult r{"H6", true, {}, ""};
    std::vector<double> zs(z_grid.begin(), z_grid.end());
    std::sort(zs.begin(), zs.end());
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < zs.size(); ++k) {
      if (!(gas.dS(zs[k]) < 0.0)) {
        r.passed = false;
        r.witnesses.push_back(zs[k]);
      }
      const double s = gas.S(zs[k]);
      if (k > 0 && !(s < prev)) {
        r.passed = false;
        r.witnesses.push_back(zs[k]);
      }
      prev = s;
    }
    r.detail = r.passed ? "S' < 0 and S strictly decreasing on grid" : "S not decreasing";
    return r;
  }));

  rep.results.push_back(guarded("H7", [&] {
    HypothesisResult r{"H7", true, {}, ""};
    const double zmax = *std::max_element(z_grid.begin(), z_grid.end());
    const double s_end = gas.S(zmax);
    const double s_mid = gas.S(zmax / 10.0);
    if (!(std::abs(s_end) <= gas.S_limit_tol) || !(std::abs(s_end) <= std::abs(s_mid))) {
      r.passed = false;
      r.witnesses.push_back(zmax);
    }
    std::ostringstream d;
    d << "S(Zmax)=" << s_end << " (required -> 0, tol " << gas.S_limit_tol << ")";
    r.detail = d.str();
    return r;
  }));

  rep.results.push_back(guarded("H8", [&] {
    HypothesisResult r{"H8", true, {}, ""};
    if (!(transport.b > 0.4 && transport.b <= 1.0)) {
      r.passed = false;
      r.detail += "exponent b outside (2/5, 1]; ";
    }
    double max_slope = 0.0;
    for (double th : theta_grid) {
      const double env = 1.0 + std::pow(th, transport.b);
      const double mu = transport.mu(th);
      const double eta = transport.eta(th);
      const double h = fd_step(th);
      const double slope = std::abs(transport.mu(th + h) - transport.mu(std::max(th - h, 0.0))) /
                           (th + h - std::max(th - h, 0.0));
      max_slope = std::max(max_slope, slope);
      const bool ok = mu >= transport.mu_lower * env * (1.0 - 1e-12) && mu > 0.0 && eta >= 0.0 &&
                      eta <= transport.eta_upper * env * (1.0 + 1e-12);
      if (!ok) {
        r.passed = false;
        r.witnesses.push_back(th);
      }
    }
    if (!std::isfinite(max_slope)) r.passed = false;
    std::ostringstream d;
    d << "max |mu'| on grid = " << max_slope;
    r.detail += d.str();
    return r;
  }));

  rep.results.push_back(guarded("H9", [&] {
    HypothesisResult r{"H9", true, {}, ""};
    for (double th : theta_grid) {
      const double env = 1.0 + th * th * th;
      const double k = transport.kappa(th);
      if (!(k >= transport.kappa_lower * env * (1.0 - 1e-12) &&
            k <= transport.kappa_upper * env * (1.0 + 1e-12))) {
        r.passed = false;
        r.witnesses.push_back(th);
      }
    }
    r.detail = r.passed ? "kappa within envelope" : "kappa outside envelope";
    return r;
  }));

  return rep;
}

AuxBounds aux_bounds_check(const GasModel& gas, std::span<const std::array<double, 2>> samples) {
  if (samples.empty()) throw UsageError("aux_bounds_check needs samples");
  double c_entropy = -std::numeric_limits<double>::infinity();
  double c_energy = std::numeric_limits<double>::infinity();
  for (const auto& [rho, theta] : samples) {
    if (!(rho > 0.0 && theta > 0.0)) throw UsageError("aux_bounds_check samples must be positive");
    const double weight = 1.0 + std::abs(std::log(rho)) + std::max(std::log(theta), 0.0);
    c_entropy = std::max(c_entropy, entropy_molecular(gas, rho, theta) / weight);
    const double rho_e = rho * energy_molecular(gas, rho, theta);
    c_energy = std::min(c_energy, rho_e / (rho * theta + std::pow(rho, 5.0 / 3.0)));
  }
  c_entropy = std::max(c_entropy, 0.0);
  if (!std::isfinite(c_entropy)) throw ModelViolation("entropy bound constant is unbounded");
  if (!(c_energy > 0.0) || !std::isfinite(c_energy)) {
    throw ModelViolation("energy lower-bound constant is not positive");
  }
  return {c_entropy, c_energy};
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  const double l0 = std::log(lo);
  const double l1 = std::log(hi);
  for (int k = 0; k < n; ++k) {
    g[static_cast<std::size_t>(k)] = n == 1 ? lo : std::exp(l0 + (l1 - l0) * k / (n - 1));
  }
  if (n > 1) {
    g.front() = lo;
    g.back() = hi;
  }
  return g;
}

}  // namespace nsflab
