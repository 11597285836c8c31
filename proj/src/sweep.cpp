#include "nsflab/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "nsflab/errors.hpp"
#include "nsflab/relative_energy.hpp"

namespace nsflab {

namespace fs = std::filesystem;

PathCheck validate_path(double alpha, double beta, double gamma, std::span<const double> a_values) {
  PathCheck r;
  auto violate = [&](const std::string& what) {
    r.valid = false;
    r.violations.push_back(what);
  };
  if (!(beta > 1.0)) violate("beta must exceed 1 (beta = " + format_double(beta) + ")");
  if (!(alpha > 0.5 && alpha < 2.0 / 3.0)) {
    violate("alpha must lie in (1/2, 2/3) (alpha = " + format_double(alpha) + ")");
  }
  const double gmax = 1.0 - 1.5 * alpha;
  if (!(gamma > 0.0 && gamma < gmax)) {
    violate("gamma must lie in (0, 1 - 3 alpha / 2) = (0, " + format_double(gmax) +
            ") (gamma = " + format_double(gamma) + ")");
  }
  if (a_values.empty()) return r;

  for (std::size_t i = 0; i < a_values.size(); ++i) {
    if (!(a_values[i] > 0.0) || !std::isfinite(a_values[i])) {
      violate("a values must be finite and positive");
      return r;
    }
    if (i > 0 && !(a_values[i] < a_values[i - 1])) {
      violate("a values must be strictly decreasing");
      return r;
    }
  }
  struct Quantity {
    const char* name;
    double (*eval)(double a, double nu, double omega, double lambda);
  };
  static const Quantity quantities[] = {
      {"a", [](double a, double, double, double) { return a; }},
      {"nu", [](double, double nu, double, double) { return nu; }},
      {"omega", [](double, double, double om, double) { return om; }},
      {"lambda", [](double, double, double, double la) { return la; }},
      {"omega/a", [](double a, double, double om, double) { return om / a; }},
      {"nu/sqrt(a)", [](double a, double nu, double, double) { return nu / std::sqrt(a); }},
      {"a/sqrt(nu^3 lambda)",
       [](double a, double nu, double, double la) { return a / std::sqrt(nu * nu * nu * la); }},
  };
  for (const auto& q : quantities) {
    double prev = std::numeric_limits<double>::infinity();
    for (double a : a_values) {
      const double v = q.eval(a, std::pow(a, alpha), std::pow(a, beta), std::pow(a, gamma));
      if (!(v < prev)) {
        violate(std::string(q.name) + " does not decrease along the a values");
        break;
      }
      prev = v;
    }
  }
  return r;
}

ScalingParams ScalingPath::at(std::size_t i) const {
  if (i >= a_values.size()) throw UsageError("path index out of range");
  const double a = a_values[i];
  ScalingParams s;
  s.a = a;
  s.nu = std::pow(a, alpha);
  s.omega = std::pow(a, beta);
  s.lambda = std::pow(a, gamma);
  return s;
}

namespace {

std::string to_string(Preparation p) { return p == Preparation::Well ? "well" : "ill"; }

Preparation preparation_from_string(const std::string& s) {
  if (s == "well") return Preparation::Well;
  if (s == "ill") return Preparation::Ill;
  throw ConfigError("unknown preparation '" + s + "' (well, ill)");
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  return out;
}

std::string run_id(int index) {
  std::ostringstream os;
  os << "run_";
  os.width(2);
  os.fill('0');
  os << index;
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SweepSettings sweep_settings_from(const Config& c) {
  for (const char* key : {"scaling.a", "scaling.nu", "scaling.omega", "scaling.lambda"}) {
    if (c.has(key)) throw ConfigError(std::string(key) + " is set by the sweep path; remove it");
  }
  SweepSettings s;
  s.path.a_values = c.numbers("sweep.a_values", s.path.a_values);
  s.path.alpha = c.number("sweep.alpha", s.path.alpha);
  s.path.beta = c.number("sweep.beta", s.path.beta);
  s.path.gamma = c.number("sweep.gamma", s.path.gamma);
  s.prep = preparation_from_string(c.text("sweep.prep", "well"));
  s.ill_amp = c.number("sweep.ill_amp", s.ill_amp);
  if (!(s.ill_amp > 0.0 && s.ill_amp < 0.5)) throw ConfigError("sweep.ill_amp must lie in (0, 0.5)");
  return s;
}

// --- manifest ---------------------------------------------------------------
//
//   nsflab-manifest 1
//   path.alpha <v>      path.beta <v>      path.gamma <v>      path.a_values <v,v,...>
//   prep <well|ill>     ill_amp <v>        config_hash <hex>   grid_hash <hex>
//   reference_key <hex> t_safe <v>         lifespan <text to end of line>
//   run <index> <id> <a> <healthy 0|1> <steps> <t_end> <E_init> <E_sup> <envelope> <inequality_excess> <failure...>
//   end

std::string SweepManifest::to_text() const {
  std::ostringstream os;
  os << "nsflab-manifest 1\n"
     << "path.alpha " << format_double(path.alpha) << '\n'
     << "path.beta " << format_double(path.beta) << '\n'
     << "path.gamma " << format_double(path.gamma) << '\n'
     << "path.a_values " << join(path.a_values) << '\n'
     << "prep " << to_string(prep) << '\n'
     << "ill_amp " << format_double(ill_amp) << '\n'
     << "config_hash " << config_hash << '\n'
     << "grid_hash " << grid_hash << '\n'
     << "reference_key " << reference_key << '\n'
     << "t_safe " << format_double(t_safe) << '\n'
     << "lifespan " << lifespan << '\n';
  for (const auto& r : runs) {
    os << "run " << r.index << ' ' << r.id << ' ' << format_double(r.a) << ' ' << (r.healthy ? 1 : 0)
       << ' ' << r.steps << ' ' << format_double(r.t_end) << ' ' << format_double(r.E_init) << ' '
       << format_double(r.E_sup) << ' ' << format_double(r.envelope) << ' '
       << format_double(r.inequality_excess) << ' ' << (r.failure.empty() ? "-" : r.failure) << '\n';
  }
  os << "end\n";
  return os.str();
}

SweepManifest SweepManifest::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "nsflab-manifest 1") throw UsageError("not a sweep manifest");
  SweepManifest m;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    try {
      if (key == "path.alpha") m.path.alpha = std::stod(rest);
      else if (key == "path.beta") m.path.beta = std::stod(rest);
      else if (key == "path.gamma") m.path.gamma = std::stod(rest);
      else if (key == "path.a_values") m.path.a_values = split_numbers(rest);
      else if (key == "prep") m.prep = preparation_from_string(rest);
      else if (key == "ill_amp") m.ill_amp = std::stod(rest);
      else if (key == "config_hash") m.config_hash = rest;
      else if (key == "grid_hash") m.grid_hash = rest;
      else if (key == "reference_key") m.reference_key = rest;
      else if (key == "t_safe") m.t_safe = std::stod(rest);
      else if (key == "lifespan") m.lifespan = rest;
      else if (key == "run") {
        std::istringstream rs(rest);
        SweepRun r;
        int healthy = 0;
        std::string a, t_end, e_init, e_sup, env, excess;
        rs >> r.index >> r.id >> a >> healthy >> r.steps >> t_end >> e_init >> e_sup >> env >> excess;
        if (!rs) throw UsageError("truncated run line");
        std::getline(rs >> std::ws, r.failure);
        if (r.failure == "-") r.failure.clear();
        r.a = std::stod(a);
        r.healthy = healthy != 0;
        r.t_end = std::stod(t_end);
        r.E_init = std::stod(e_init);
        r.E_sup = std::stod(e_sup);
        r.envelope = std::stod(env);
        r.inequality_excess = std::stod(excess);
        m.runs.push_back(r);
      } else {
        throw UsageError("unknown manifest key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw UsageError("malformed manifest line: " + line);
    }
  }
  if (!ended) throw UsageError("manifest is missing its end marker");
  for (auto& r : m.runs) {
    if (r.index < 0 || static_cast<std::size_t>(r.index) >= m.path.a_values.size()) {
      throw UsageError("manifest run index out of range");
    }
    r.scaling = m.path.at(static_cast<std::size_t>(r.index));
  }
  return m;
}

void SweepManifest::save(const fs::path& path) const { write_text(path, to_text()); }

SweepManifest SweepManifest::load(const fs::path& path) { return parse(read_text(path)); }

// --- rate fit ---------------------------------------------------------------

RateFit fit_rate(const SweepManifest& manifest) {
  RateFit fit;
  fit.ratios.assign(manifest.runs.size(), std::numeric_limits<double>::quiet_NaN());
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t k = 0; k < manifest.runs.size(); ++k) {
    const SweepRun& r = manifest.runs[k];
    const double denom = r.E_init + r.envelope;
    if (!r.healthy || !std::isfinite(r.E_sup) || !(denom > 0.0)) {
      fit.excluded.push_back(r.index);
      continue;
    }
    const double ratio = r.E_sup / denom;
    fit.ratios[k] = ratio;
    fit.used.push_back(r.index);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  if (fit.used.size() < 2) throw UsageError("rate fit needs at least two healthy runs");
  fit.constant = hi;
  if (hi == 0.0) {
    fit.spread = 1.0;
  } else {
    fit.spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  }
  fit.flagged = !(fit.spread < 10.0);
  return fit;
}

std::string RateFit::to_text() const {
  std::ostringstream os;
  os << "constant " << format_double(constant) << '\n'
     << "spread " << format_double(spread) << '\n'
     << "flagged " << (flagged ? "yes" : "no") << '\n';
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    os << "ratio " << k << ' ' << (std::isnan(ratios[k]) ? "excluded" : format_double(ratios[k]))
       << '\n';
  }
  return os.str();
}

// --- per-run diagnostics ----------------------------------------------------

std::vector<FluidState> load_run_snapshots(const fs::path& run_dir) {
  std::vector<fs::path> files;
  const fs::path dir = run_dir / "snapshots";
  if (!fs::is_directory(dir)) throw UsageError("no snapshots in " + run_dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("snap_", 0) == 0 && e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no snapshots in " + run_dir.string());
  std::vector<FluidState> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(from_snapshot(read_snapshot(f), 2));
  return out;
}

RunDiagnostics run_diagnostics(const fs::path& run_dir, const NsfRunConfig& config,
                               const ReferenceTrajectory& reference) {
  const std::vector<FluidState> snaps = load_run_snapshots(run_dir);
  std::vector<ReferenceFields> refs;
  std::vector<double> times, values;
  std::vector<VectorField> velocities;
  refs.reserve(snaps.size());
  RunDiagnostics d;
  d.min_sigma = std::numeric_limits<double>::infinity();
  for (const auto& s : snaps) {
    refs.push_back(sample_reference(reference, s.time, s.grid));
    FluidState filled = s;
    filled.fill_ghosts();
    const Primitives p = to_primitives(filled, config.gas, config.scaling.a);
    times.push_back(s.time);
    values.push_back(relative_energy(p, refs.back(), config.gas, config.scaling.a));
    velocities.push_back(p.u);
    d.min_sigma = std::min(d.min_sigma, interior_min(entropy_production(filled, config).sigma));
  }
  double envelope = std::numeric_limits<double>::quiet_NaN();
  try {
    envelope = rate_envelope(config.scaling);
  } catch (const DomainError&) {
    // Envelope undefined without dissipation; the report keeps NaN.
  }
  d.energy = RelativeEnergyReport::make(times, values, envelope);
  d.inequality = rel_energy_inequality_residual(snaps, refs, config);
  d.bounds = uniform_bounds(snaps, config);
  d.interpolation = interpolation_check(velocities);

  {
    std::ofstream out(run_dir / "relative_energy.csv", std::ios::binary);
    if (!out) throw UsageError("cannot write relative_energy.csv in " + run_dir.string());
    out << "t,E\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
      out << format_double(times[k]) << ',' << format_double(values[k]) << '\n';
    }
  }
  write_inequality_csv(run_dir / "inequality.csv", d.inequality);
  std::ostringstream os;
  os << "E_init " << format_double(values.front()) << '\n'
     << "E_sup " << format_double(d.energy.sup_value) << '\n'
     << "envelope " << format_double(envelope) << '\n'
     << "inequality_max_excess " << format_double(d.inequality.max_excess) << '\n'
     << "inequality_max_abs " << format_double(d.inequality.max_abs) << '\n'
     << "interpolation_ratio " << format_double(d.interpolation) << '\n'
     << "min_sigma " << format_double(d.min_sigma) << '\n'
     << d.bounds.to_text();
  write_text(run_dir / "summary.txt", os.str());
  return d;
}

// --- orchestration ----------------------------------------------------------

ReferenceTrajectory cached_reference(const Config& config, const fs::path& cache_root,
                                     std::string* key_out) {
  const EulerRunConfig ecfg = euler_config_from(config);
  const InitialData data = initial_from_config(config, ecfg.grid);
  const Primitives prim = sample_initial(data, ecfg.grid);
  (void)measure_data_bounds(prim);
  const FluidState initial = from_primitives(prim, ecfg.gas, 0.0);
  const std::string key = reference_key(ecfg, initial);
  if (key_out) *key_out = key;
  const fs::path dir = cache_root / ("ref_" + key);
  if (!fs::exists(dir / "index.txt")) {
    const ReferenceTrajectory traj = run_euler(ecfg, initial);
    const fs::path tmp = cache_root / ("ref_" + key + ".partial");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    save_reference(tmp, traj);
    fs::remove_all(dir);
    fs::rename(tmp, dir);
  }
  // Always reload so that fresh and cached sweeps see identical bits.
  return load_reference(dir, ecfg.gas);
}

FluidState nsf_initial_state(const ReferenceTrajectory& reference, const NsfRunConfig& config,
                             Preparation prep, double amp) {
  const Grid& g = config.grid;
  const ReferenceFields r0 = sample_reference(reference, 0.0, g);
  Primitives p = Primitives::zeros(g);
  p.rho.set_interior(r0.rho.interior());
  p.theta.set_interior(r0.theta.interior());
  p.u[0].set_interior(r0.u[0].interior());
  p.u[1].set_interior(r0.u[1].interior());
  if (prep == Preparation::Ill) {
    // Wall-compatible second harmonic along x.
    const double k = 4.0 * std::numbers::pi / g.extent[0];
    for (int j = 0; j < g.cells[1]; ++j) {
      for (int i = 0; i < g.cells[0]; ++i) {
        const double x = g.center(0, i);
        p.rho.at(i, j) *= 1.0 + amp * std::cos(k * x);
        p.theta.at(i, j) *= 1.0 + amp * std::cos(k * x);
        p.u[0].at(i, j) += amp * std::sin(k * x);
      }
    }
  }
  p.fill_ghosts();
  return from_primitives(p, config.gas, config.scaling.a);
}

SweepManifest run_sweep(const Config& config, const fs::path& out) {
  const SweepSettings settings = sweep_settings_from(config);
  const PathCheck check = settings.path.check();
  if (!check.valid) {
    std::string msg = "invalid scaling path:";
    for (const auto& v : check.violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
  // Scaling keys are rejected above; the base config carries a placeholder.
  Config base = config;
  const ScalingParams first = settings.path.at(0);
  base.set("scaling.a", format_double(first.a));
  base.set("scaling.nu", format_double(first.nu));
  base.set("scaling.omega", format_double(first.omega));
  base.set("scaling.lambda", format_double(first.lambda));
  NsfRunConfig nsf = nsf_config_from(base);

  fs::create_directories(out);
  write_text(out / "config.txt", config.canonical());

  SweepManifest m;
  m.path = settings.path;
  m.prep = settings.prep;
  m.ill_amp = settings.prep == Preparation::Ill ? settings.ill_amp : 0.0;
  m.config_hash = hex(content_hash(config.canonical()));
  m.grid_hash = hex(content_hash(nsf.grid.describe()));
  const ReferenceTrajectory ref = cached_reference(config, out / "cache", &m.reference_key);
  m.t_safe = ref.lifespan.t_safe;
  m.lifespan = ref.lifespan.reason.empty() ? "-" : ref.lifespan.reason;
  nsf.t_end = std::min(nsf.t_end, ref.lifespan.t_safe);
  if (!(nsf.t_end > 0.0)) throw NumericalError("reference life span leaves no time to compare", 0.0);

  for (std::size_t i = 0; i < settings.path.a_values.size(); ++i) {
    SweepRun r;
    r.index = static_cast<int>(i);
    r.id = run_id(r.index);
    r.scaling = settings.path.at(i);
    r.a = r.scaling.a;
    r.envelope = rate_envelope(r.scaling);
    r.t_end = nsf.t_end;
    NsfRunConfig cfg = nsf;
    cfg.scaling = r.scaling;
    const fs::path run_dir = out / r.id;
    fs::remove_all(run_dir);
    fs::create_directories(run_dir);

    const FluidState init = nsf_initial_state(ref, cfg, settings.prep, settings.ill_amp);
    SimulateOptions opts;
    opts.keep_snapshots = false;
    opts.out_dir = run_dir;
    const Trajectory traj = simulate(cfg, init, opts);
    r.steps = traj.steps;
    r.healthy = traj.healthy && !traj.aborted;
    r.failure = traj.failure;
    if (r.healthy) {
      const RunDiagnostics d = run_diagnostics(run_dir, cfg, ref);
      r.E_init = d.energy.values.front();
      r.E_sup = d.energy.sup_value;
      r.inequality_excess = d.inequality.max_excess;
      if (!std::isfinite(r.E_sup)) {
        r.healthy = false;
        r.failure = "non-finite relative energy";
      }
    } else {
      r.E_init = std::numeric_limits<double>::quiet_NaN();
      r.E_sup = std::numeric_limits<double>::quiet_NaN();
      r.inequality_excess = std::numeric_limits<double>::quiet_NaN();
      if (r.failure.empty()) r.failure = "floor hits above threshold";
    }
    std::replace(r.failure.begin(), r.failure.end(), '\n', ' ');
    m.runs.push_back(r);
  }

  m.save(out / "manifest.txt");
  std::ostringstream csv, plot;
  csv << "index,a,nu,omega,lambda,envelope,E_init,E_sup,ratio,healthy,steps\n";
  plot << "# a envelope E_sup E_sup/envelope\n";
  for (const auto& r : m.runs) {
    const double ratio = r.E_sup / (r.E_init + r.envelope);
    csv << r.index << ',' << format_double(r.a) << ',' << format_double(r.scaling.nu) << ','
        << format_double(r.scaling.omega) << ',' << format_double(r.scaling.lambda) << ','
        << format_double(r.envelope) << ',' << format_double(r.E_init) << ','
        << format_double(r.E_sup) << ',' << format_double(ratio) << ',' << (r.healthy ? 1 : 0)
        << ',' << r.steps << '\n';
    if (r.healthy) {
      plot << format_double(r.a) << ' ' << format_double(r.envelope) << ' ' << format_double(r.E_sup)
           << ' ' << format_double(r.E_sup / r.envelope) << '\n';
    }
  }
  write_text(out / "sweep.csv", csv.str());
  write_text(out / "plot.dat", plot.str());
  return m;
}

void rediagnose_sweep(const fs::path& out) {
  const Config config = Config::load(out / "config.txt");
  const SweepManifest m = SweepManifest::load(out / "manifest.txt");
  const ReferenceTrajectory ref = load_reference(out / "cache" / ("ref_" + m.reference_key),
                                                 gas_from_config(config));
  Config base = config;
  const ScalingParams first = m.path.at(0);
  base.set("scaling.a", format_double(first.a));
  base.set("scaling.nu", format_double(first.nu));
  base.set("scaling.omega", format_double(first.omega));
  base.set("scaling.lambda", format_double(first.lambda));
  NsfRunConfig nsf = nsf_config_from(base);
  for (const auto& r : m.runs) {
    if (!r.healthy) continue;
    NsfRunConfig cfg = nsf;
    cfg.scaling = r.scaling;
    cfg.t_end = r.t_end;
    (void)run_diagnostics(out / r.id, cfg, ref);
  }
}

}  // namespace nsflab
