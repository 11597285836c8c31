#include "nsflab/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nsflab/errors.hpp"

namespace nsflab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::map<std::string, std::string>& config_schema() {
  static const std::map<std::string, std::string> schema{
      {"gas.name", "ideal | custom"},
      {"gas.P", "pressure profile P(Z) for gas.name = custom"},
      {"gas.S0", "entropy constant S(1)"},
      {"gas.P_inf", "declared limit of P(Z)/Z^(5/3) (custom gas; estimated when absent)"},
      {"transport.name", "default | canonical"},
      {"transport.b", "viscosity exponent b in (0.4, 1]"},
      {"scaling.a", "radiation constant"},
      {"scaling.nu", "viscosity scale"},
      {"scaling.omega", "conductivity scale"},
      {"scaling.lambda", "damping rate"},
      {"grid.dim", "1 or 2"},
      {"grid.cells", "cells along x"},
      {"grid.cells_y", "cells along y (dim 2)"},
      {"grid.extent_x", "domain length along x"},
      {"grid.extent_y", "domain length along y"},
      {"grid.bc_x", "periodic | slip"},
      {"grid.bc_y", "periodic | slip"},
      {"cfl", "Courant number of the NSF solver"},
      {"t_end", "final time"},
      {"output.stride", "time between output instants"},
      {"floors.rho", "density floor"},
      {"floors.theta", "temperature floor"},
      {"solver", "nsf | euler (simulate)"},
      {"reconstruction", "linear | minmod | constant"},
      {"initial.kind", "acoustic | compressive | shear | uniform"},
      {"initial.rho0", "base density"},
      {"initial.theta0", "base temperature"},
      {"initial.amp_rho", "density perturbation amplitude"},
      {"initial.amp_theta", "temperature perturbation amplitude"},
      {"initial.amp_u", "velocity amplitude"},
      {"initial.u0x", "uniform velocity x (uniform)"},
      {"initial.u0y", "uniform velocity y (uniform)"},
      {"sweep.a_values", "comma-separated decreasing radiation constants"},
      {"sweep.alpha", "nu = a^alpha"},
      {"sweep.beta", "omega = a^beta"},
      {"sweep.gamma", "lambda = a^gamma"},
      {"sweep.prep", "well | ill"},
      {"sweep.ill_amp", "perturbation amplitude of ill-prepared data"},
      {"reference.refine", "reference grid refinement factor"},
      {"reference.filter", "initial hyperdissipation amplitude"},
      {"reference.cfl", "Courant number of the reference solver"},
      {"reference.blowup_factor", "gradient growth factor declaring blow-up"},
      {"reference.safety", "fraction of the detected life span used"},
      {"coercivity.rho_lo", "box lower density"},
      {"coercivity.rho_hi", "box upper density"},
      {"coercivity.theta_lo", "box lower temperature"},
      {"coercivity.theta_hi", "box upper temperature"},
      {"coercivity.samples", "number of low-discrepancy samples"},
      {"thermo.z_min", "smallest Z of the hypothesis grid"},
      {"thermo.z_max", "largest Z of the hypothesis grid"},
      {"thermo.theta_min", "smallest temperature of the hypothesis grid"},
      {"thermo.theta_max", "largest temperature of the hypothesis grid"},
      {"thermo.points", "points per hypothesis grid"},
  };
  return schema;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    std::ostringstream where;
    where << origin << ':' << lineno << ": ";
    if (eq == std::string::npos) throw ConfigError(where.str() + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (config_schema().count(key) == 0) throw ConfigError(where.str() + "unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where.str() + "empty value for '" + key + "'");
    if (c.values_.count(key) != 0) throw ConfigError(where.str() + "duplicate key '" + key + "'");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  if (config_schema().count(key) == 0) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::number(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' is not a number: " + it->second);
  }
  if (used != it->second.size() || !std::isfinite(v)) {
    throw ConfigError("'" + key + "' is not a finite number: " + it->second);
  }
  return v;
}

long Config::integer(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(it->second, &used);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' is not an integer: " + it->second);
  }
  if (used != it->second.size()) throw ConfigError("'" + key + "' is not an integer: " + it->second);
  return v;
}

bool Config::flag(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw ConfigError("'" + key + "' is not a boolean: " + it->second);
}

std::vector<double> Config::numbers(const std::string& key,
                                    const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  std::istringstream in(it->second);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' holds a non-number: " + item);
    }
    if (used != item.size()) throw ConfigError("'" + key + "' holds a non-number: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("'" + key + "' is an empty list");
  return out;
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << '\n';
  return os.str();
}

GasModel gas_from_config(const Config& c) {
  const std::string name = c.text("gas.name", "ideal");
  const double S0 = c.number("gas.S0", 0.0);
  if (name == "ideal") {
    if (c.has("gas.P") || c.has("gas.P_inf")) {
      throw ConfigError("gas.P and gas.P_inf are only used with gas.name = custom");
    }
    return GasModel::ideal_gas(S0);
  }
  if (name == "custom") {
    if (!c.has("gas.P")) throw ConfigError("gas.name = custom needs gas.P");
    GasModel gas = GasModel::from_expression("custom", c.text("gas.P", ""), S0);
    if (c.has("gas.P_inf")) gas.P_inf = c.number("gas.P_inf", 0.0);
    return gas;
  }
  throw ConfigError("unknown gas.name '" + name + "' (ideal, custom)");
}

TransportModel transport_from_config(const Config& c) {
  const std::string name = c.text("transport.name", "default");
  if (name == "default") return TransportModel::default_model(c.number("transport.b", 1.0));
  if (name == "canonical") {
    if (c.has("transport.b")) throw ConfigError("transport.b is not used by the canonical model");
    return TransportModel::canonical();
  }
  throw ConfigError("unknown transport.name '" + name + "' (default, canonical)");
}

ScalingParams scaling_from_config(const Config& c) {
  ScalingParams s;
  s.a = c.number("scaling.a", 0.0);
  s.nu = c.number("scaling.nu", 0.0);
  s.omega = c.number("scaling.omega", 0.0);
  s.lambda = c.number("scaling.lambda", 0.0);
  s.validate(false);
  return s;
}

Grid grid_from_config(const Config& c, int ghosts) {
  const long dim = c.integer("grid.dim", 1);
  const auto bcx = boundary_from_string(c.text("grid.bc_x", "slip"));
  const int nx = static_cast<int>(c.integer("grid.cells", 64));
  const double lx = c.number("grid.extent_x", 1.0);
  Grid g;
  if (dim == 1) {
    if (c.has("grid.cells_y") || c.has("grid.extent_y") || c.has("grid.bc_y")) {
      throw ConfigError("grid.*_y keys need grid.dim = 2");
    }
    g = Grid::line(nx, lx, bcx, ghosts);
  } else if (dim == 2) {
    g = Grid::rectangle(nx, static_cast<int>(c.integer("grid.cells_y", nx)), lx,
                        c.number("grid.extent_y", lx), bcx,
                        boundary_from_string(c.text("grid.bc_y", "slip")), ghosts);
  } else {
    throw ConfigError("grid.dim must be 1 or 2");
  }
  g.validate();
  return g;
}

NsfRunConfig nsf_config_from(const Config& c) {
  NsfRunConfig cfg;
  cfg.gas = gas_from_config(c);
  cfg.transport = transport_from_config(c);
  cfg.scaling = scaling_from_config(c);
  cfg.grid = grid_from_config(c, 2);
  cfg.cfl = c.number("cfl", 0.4);
  cfg.t_end = c.number("t_end", 0.5);
  cfg.output_stride = c.number("output.stride", 0.01);
  cfg.floors.rho = c.number("floors.rho", 1e-12);
  cfg.floors.theta = c.number("floors.theta", 1e-12);
  cfg.reconstruction = reconstruction_from_string(c.text("reconstruction", "linear"));
  cfg.validate();
  return cfg;
}

EulerRunConfig euler_config_from(const Config& c) {
  EulerRunConfig cfg;
  cfg.gas = gas_from_config(c);
  const long refine = c.integer("reference.refine", 4);
  if (refine < 1 || refine > 16) throw ConfigError("reference.refine must lie in [1, 16]");
  cfg.grid = grid_from_config(c, 3).refined(static_cast<int>(refine), 3);
  cfg.cfl = c.number("reference.cfl", 0.5);
  cfg.t_end = c.number("t_end", 0.5);
  cfg.output_stride = c.number("output.stride", 0.01);
  cfg.filter_eps = c.number("reference.filter", 0.01);
  cfg.blowup_factor = c.number("reference.blowup_factor", 20.0);
  cfg.safety = c.number("reference.safety", 0.8);
  cfg.validate();
  return cfg;
}

InitialData initial_from_config(const Config& c, const Grid& grid) {
  const std::string kind = c.text("initial.kind", "acoustic");
  const double rho0 = c.number("initial.rho0", 1.0);
  const double th0 = c.number("initial.theta0", 1.0);
  const double ar = c.number("initial.amp_rho", 0.1);
  const double at = c.number("initial.amp_theta", 0.1);
  const double au = c.number("initial.amp_u", 0.1);
  const double lx = grid.extent[0];
  const double ly = grid.extent[1];
  constexpr double pi = std::numbers::pi;
  // Wall-compatible modes: even fields use cos(k pi x / L), normal velocity
  // uses sin(k pi x / L); periodic axes need even k.
  const bool periodic = grid.bc[0] == Boundary::Periodic;
  const double k_half = periodic ? 2.0 : 1.0;
  InitialData d;
  std::ostringstream desc;
  if (kind == "acoustic") {
    d.rho = [=](double x, double) { return rho0 * (1.0 + ar * std::cos(2.0 * pi * x / lx)); };
    d.theta = [=](double x, double) { return th0 * (1.0 + at * std::cos(k_half * pi * x / lx)); };
    d.u = [=](double x, double) { return std::array<double, 2>{au * std::sin(k_half * pi * x / lx), 0.0}; };
  } else if (kind == "compressive") {
    d.rho = [=](double, double) { return rho0; };
    d.theta = [=](double, double) { return th0; };
    d.u = [=](double x, double) { return std::array<double, 2>{-au * std::sin(2.0 * pi * x / lx), 0.0}; };
  } else if (kind == "shear") {
    if (grid.dim != 2) throw ConfigError("initial.kind = shear needs grid.dim = 2");
    d.rho = [=](double, double) { return rho0; };
    d.theta = [=](double, double) { return th0; };
    d.u = [=](double, double y) { return std::array<double, 2>{au * std::sin(2.0 * pi * y / ly), 0.0}; };
  } else if (kind == "uniform") {
    const double ux = c.number("initial.u0x", 0.0);
    const double uy = c.number("initial.u0y", 0.0);
    d.rho = [=](double, double) { return rho0; };
    d.theta = [=](double, double) { return th0; };
    d.u = [=](double, double) { return std::array<double, 2>{ux, uy}; };
  } else {
    throw ConfigError("unknown initial.kind '" + kind + "'");
  }
  desc << kind << " rho0=" << format_double(rho0) << " theta0=" << format_double(th0)
       << " amp_rho=" << format_double(ar) << " amp_theta=" << format_double(at)
       << " amp_u=" << format_double(au);
  d.description = desc.str();
  return d;
}

StateBox box_from_config(const Config& c) {
  StateBox K;
  K.rho_lo = c.number("coercivity.rho_lo", 0.5);
  K.rho_hi = c.number("coercivity.rho_hi", 2.0);
  K.theta_lo = c.number("coercivity.theta_lo", 0.5);
  K.theta_hi = c.number("coercivity.theta_hi", 2.0);
  K.validate();
  return K;
}

}  // namespace nsflab
