#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "nsflab/config.hpp"
#include "nsflab/diagnostics.hpp"
#include "nsflab/errors.hpp"
#include "nsflab/euler_reference.hpp"
#include "nsflab/nsf_solver.hpp"
#include "nsflab/parallel.hpp"
#include "nsflab/relative_energy.hpp"
#include "nsflab/sweep.hpp"
#include "nsflab/thermo.hpp"

namespace fs = std::filesystem;
using namespace nsflab;

namespace {

struct Common {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
};

Config load_config(const Common& c) {
  return c.config_path.empty() ? Config{} : Config::load(c.config_path);
}

// Prints to stdout and, when an output directory is given, to out/<name>.
void emit(const Common& c, const std::string& name, const std::string& text) {
  std::cout << text;
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream(fs::path(c.out) / name, std::ios::binary) << text;
  }
}

int thermo_check(const Common& c) {
  const Config cfg = load_config(c);
  const GasModel gas = gas_from_config(cfg);
  const TransportModel tr = transport_from_config(cfg);
  const int n = static_cast<int>(cfg.integer("thermo.points", 30));
  const auto z = log_grid(cfg.number("thermo.z_min", 1e-3), cfg.number("thermo.z_max", 1e3), n);
  const auto th = log_grid(cfg.number("thermo.theta_min", 0.1), cfg.number("thermo.theta_max", 10.0), n);
  std::ostringstream os;
  os << "gas " << gas.name << " P(Z) = " << gas.expression << '\n';
  os << hypothesis_report(gas, tr, z, th).to_text();
  const auto rho = log_grid(0.1, 10.0, n);
  for (double a : {0.0, cfg.number("scaling.a", 0.5)}) {
    double worst = 0.0;
    for (double r : rho) {
      for (double t : th) {
        const auto [g1, g2] = gibbs_residual(gas, a, r, t);
        worst = std::max({worst, std::abs(g1), std::abs(g2)});
      }
    }
    os << "gibbs a=" << format_double(a) << " max_residual " << format_double(worst) << '\n';
  }
  emit(c, "thermo_check.txt", os.str());
  return 0;
}

int coercivity(const Common& c) {
  const Config cfg = load_config(c);
  const GasModel gas = gas_from_config(cfg);
  const StateBox K = box_from_config(cfg);
  const double a = cfg.number("scaling.a", 0.0);
  const long samples = cfg.integer("coercivity.samples", 10000);
  const CoercivityResult r = coercivity_constant(gas, a, K, samples, c.seed);
  std::ostringstream os;
  os << "constant " << format_double(r.constant) << '\n'
     << "argmin rho=" << format_double(r.argmin[0]) << " theta=" << format_double(r.argmin[1])
     << " r=" << format_double(r.argmin[2]) << " Theta=" << format_double(r.argmin[3])
     << " |u-U|=" << format_double(r.argmin[4]) << '\n'
     << "used " << r.used << " excluded " << r.excluded << '\n';
  emit(c, "coercivity.txt", os.str());
  return 0;
}

int simulate_cmd(const Common& c) {
  if (c.out.empty()) throw UsageError("simulate needs --out");
  const Config cfg = load_config(c);
  const fs::path out(c.out);
  fs::create_directories(out);
  const std::string solver = cfg.text("solver", "nsf");
  if (solver == "nsf") {
    const NsfRunConfig run = nsf_config_from(cfg);
    const InitialData data = initial_from_config(cfg, run.grid);
    Primitives p = sample_initial(data, run.grid);
    const FluidState init = from_primitives(p, run.gas, run.scaling.a);
    SimulateOptions opts;
    opts.keep_snapshots = false;
    opts.out_dir = out;
    const Trajectory traj = simulate(run, init, opts);
    std::ostringstream os;
    os << "steps " << traj.steps << '\n'
       << "healthy " << (traj.healthy ? "yes" : "no") << '\n'
       << "aborted " << (traj.aborted ? "yes" : "no") << '\n'
       << "mass_M " << format_double(traj.bounds.M) << '\n'
       << "bound_D " << format_double(traj.bounds.D) << '\n';
    if (!traj.failure.empty()) os << "failure " << traj.failure << '\n';
    emit(c, "summary.txt", os.str());
    return traj.aborted ? 1 : 0;
  }
  if (solver == "euler") {
    const EulerRunConfig run = euler_config_from(cfg);
    const InitialData data = initial_from_config(cfg, run.grid);
    const FluidState init = from_primitives(sample_initial(data, run.grid), run.gas, 0.0);
    const ReferenceTrajectory traj = run_euler(run, init);
    save_reference(out / "reference", traj);
    {
      std::ofstream csv(out / "lifespan.csv", std::ios::binary);
      csv << "t,grad_u,grad_rho\n";
      for (std::size_t k = 0; k < traj.lifespan.times.size(); ++k) {
        csv << format_double(traj.lifespan.times[k]) << ',' << format_double(traj.lifespan.grad_u[k])
            << ',' << format_double(traj.lifespan.grad_rho[k]) << '\n';
      }
    }
    std::ostringstream os;
    os << "steps " << traj.steps << '\n'
       << "filter_eps " << format_double(traj.filter_eps) << '\n'
       << "filter_drain " << format_double(traj.filter_drain) << '\n'
       << "mass_drift " << format_double(traj.mass_drift) << '\n'
       << "energy_drift " << format_double(traj.energy_drift) << '\n'
       << "smooth " << (traj.lifespan.smooth ? "yes" : "no") << '\n'
       << "t_star " << format_double(traj.lifespan.t_star) << '\n'
       << "t_safe " << format_double(traj.lifespan.t_safe) << '\n'
       << "reason " << traj.lifespan.reason << '\n';
    if (run.grid.bc[0] == Boundary::SlipWall ||
        (run.grid.dim == 2 && run.grid.bc[1] == Boundary::SlipWall)) {
      os << compatibility_check(data, run.grid, run.gas).to_text();
    }
    emit(c, "summary.txt", os.str());
    return 0;
  }
  throw ConfigError("unknown solver '" + solver + "' (nsf, euler)");
}

int sweep_cmd(const Common& c) {
  if (c.out.empty()) throw UsageError("sweep needs --out");
  const Config cfg = load_config(c);
  const SweepManifest m = run_sweep(cfg, c.out);
  std::ostringstream os;
  os << "t_safe " << format_double(m.t_safe) << '\n';
  for (const auto& r : m.runs) {
    os << r.id << " a=" << format_double(r.a) << " healthy=" << (r.healthy ? "yes" : "no")
       << " E_init=" << format_double(r.E_init) << " E_sup=" << format_double(r.E_sup)
       << " envelope=" << format_double(r.envelope) << '\n';
  }
  std::cout << os.str();
  return 0;
}

int rate_fit_cmd(const Common& c, const std::string& manifest_path) {
  fs::path path = manifest_path;
  if (path.empty()) {
    if (c.out.empty()) throw UsageError("rate-fit needs --manifest or --out");
    path = fs::path(c.out) / "manifest.txt";
  }
  const RateFit fit = fit_rate(SweepManifest::load(path));
  emit(c, "rate_fit.txt", fit.to_text());
  return fit.flagged ? 3 : 0;
}

int diag_cmd(const Common& c) {
  if (c.out.empty()) throw UsageError("diag needs --out pointing at a sweep directory");
  rediagnose_sweep(c.out);
  std::cout << "diagnostics rewritten in " << c.out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the vanishing dissipation limit of Navier-Stokes-Fourier flows"};
  app.require_subcommand(1);
  Common common;
  std::string manifest;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "key = value configuration file")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--seed", common.seed, "skip count of the low-discrepancy sequence");
    sub->add_option("--threads", common.threads, "worker threads (results do not depend on it)")
        ->check(CLI::NonNegativeNumber);
  };
  auto* thermo = app.add_subcommand("thermo-check", "hypothesis report and Gibbs residuals");
  auto* coer = app.add_subcommand("coercivity", "estimate the coercivity constant c(K)");
  auto* sim = app.add_subcommand("simulate", "single NSF or Euler run");
  auto* sweep = app.add_subcommand("sweep", "run the scaling path sweep");
  auto* fit = app.add_subcommand("rate-fit", "fit the rate constant of a sweep manifest");
  auto* diag = app.add_subcommand("diag", "recompute diagnostics of a stored sweep");
  for (auto* s : {thermo, coer, sim, sweep, fit, diag}) add_common(s);
  fit->add_option("--manifest", manifest, "manifest file")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (common.threads > 0) set_thread_count(common.threads);
    if (thermo->parsed()) return thermo_check(common);
    if (coer->parsed()) return coercivity(common);
    if (sim->parsed()) return simulate_cmd(common);
    if (sweep->parsed()) return sweep_cmd(common);
    if (fit->parsed()) return rate_fit_cmd(common, manifest);
    if (diag->parsed()) return diag_cmd(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
