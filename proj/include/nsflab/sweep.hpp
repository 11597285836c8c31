#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "nsflab/config.hpp"
#include "nsflab/diagnostics.hpp"
#include "nsflab/euler_reference.hpp"
#include "nsflab/nsf_solver.hpp"

namespace nsflab {

struct PathCheck {
  bool valid = true;
  std::vector<std::string> violations;
};

/// Checks beta > 1, 1/2 < alpha < 2/3 and 0 < gamma < 1 - (3/2) alpha. With a
/// non-empty `a_values`, also checks that the sequence is positive and strictly
/// decreasing and that a, nu, omega, lambda, omega/a, nu/sqrt(a) and
/// a/sqrt(nu^3 lambda) all strictly decrease along it.
[[nodiscard]] PathCheck validate_path(double alpha, double beta, double gamma,
                                      std::span<const double> a_values = {});

/// nu = a^alpha, omega = a^beta, lambda = a^gamma along decreasing a.
struct ScalingPath {
  std::vector<double> a_values{1e-2, 1e-3, 1e-4};
  double alpha = 0.55;
  double beta = 1.2;
  double gamma = 0.1;

  [[nodiscard]] ScalingParams at(std::size_t i) const;
  [[nodiscard]] PathCheck check() const { return validate_path(alpha, beta, gamma, a_values); }
};

enum class Preparation { Well, Ill };

struct SweepSettings {
  ScalingPath path;
  Preparation prep = Preparation::Well;
  double ill_amp = 0.05;
};

/// Reads sweep.* keys; throws ConfigError when scaling.* is set, since the
/// path owns the scaling parameters.
[[nodiscard]] SweepSettings sweep_settings_from(const Config& c);

struct SweepRun {
  int index = 0;
  double a = 0.0;
  ScalingParams scaling;
  std::string id;
  bool healthy = true;
  std::string failure;
  long steps = 0;
  double t_end = 0.0;
  double E_init = 0.0;
  double E_sup = 0.0;
  double envelope = 0.0;
  double inequality_excess = 0.0;
};

/// Lossless text form: every number is written in shortest round-trip form.
struct SweepManifest {
  ScalingPath path;
  Preparation prep = Preparation::Well;
  double ill_amp = 0.0;
  std::string config_hash;
  std::string grid_hash;
  std::string reference_key;
  double t_safe = 0.0;
  std::string lifespan;
  std::vector<SweepRun> runs;

  [[nodiscard]] std::string to_text() const;
  static SweepManifest parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static SweepManifest load(const std::filesystem::path& path);
};

struct RateFit {
  /// Per-run E_sup / (E_init + envelope); NaN for excluded runs.
  std::vector<double> ratios;
  std::vector<int> used;
  std::vector<int> excluded;
  double constant = 0.0;
  /// max/min of the used ratios (1 when all are zero).
  double spread = 1.0;
  bool flagged = false;

  [[nodiscard]] std::string to_text() const;
};

/// Throws UsageError with fewer than two healthy runs. Flags when the used
/// ratios differ by a factor of 10 or more.
[[nodiscard]] RateFit fit_rate(const SweepManifest& manifest);

struct RunDiagnostics {
  RelativeEnergyReport energy;
  InequalitySeries inequality;
  UniformBounds bounds;
  double interpolation = 0.0;
  double min_sigma = 0.0;
};

/// Recomputes every diagnostic of a stored run from its snapshots and writes
/// relative_energy.csv, inequality.csv and summary.txt into `run_dir`. The same
/// routine serves the sweep and the diag command, so outputs agree exactly.
RunDiagnostics run_diagnostics(const std::filesystem::path& run_dir, const NsfRunConfig& config,
                               const ReferenceTrajectory& reference);

/// Reads snapshots/snap_*.bin of a run in index order.
[[nodiscard]] std::vector<FluidState> load_run_snapshots(const std::filesystem::path& run_dir);

/// Computes (or reloads from out/cache) the reference for the configured
/// initial data, then runs one NSF simulation per path point up to the safe
/// time and writes manifest.txt, sweep.csv, plot.dat and config.txt.
SweepManifest run_sweep(const Config& config, const std::filesystem::path& out);

/// Re-runs the diagnostics of every run of a finished sweep directory.
void rediagnose_sweep(const std::filesystem::path& out);

/// Reference for a configuration, computed once and cached under
/// cache_root/ref_<key>.
[[nodiscard]] ReferenceTrajectory cached_reference(const Config& config,
                                                   const std::filesystem::path& cache_root,
                                                   std::string* key = nullptr);

/// Well-prepared NSF initial state: the reference initial state averaged onto
/// the NSF grid, converted with the NSF radiation constant; ill-prepared adds
/// a wall-compatible perturbation of relative size `amp` to every field.
[[nodiscard]] FluidState nsf_initial_state(const ReferenceTrajectory& reference,
                                           const NsfRunConfig& config, Preparation prep,
                                           double amp);

}  // namespace nsflab
