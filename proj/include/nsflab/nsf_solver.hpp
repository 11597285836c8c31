#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nsflab/grid.hpp"
#include "nsflab/thermo.hpp"

namespace nsflab {

struct Floors {
  double rho = 1e-12;
  double theta = 1e-12;
};

/// Face reconstruction of the primitive variables for the convective flux.
/// Linear uses unlimited centered slopes (second order on smooth data);
/// Constant gives the first-order Rusanov scheme.
enum class Reconstruction { Constant, Linear, Minmod };

[[nodiscard]] std::string to_string(Reconstruction r);
[[nodiscard]] Reconstruction reconstruction_from_string(const std::string& s);

struct NsfRunConfig {
  GasModel gas = GasModel::ideal_gas();
  TransportModel transport = TransportModel::default_model();
  ScalingParams scaling;
  Grid grid;
  double cfl = 0.4;
  double t_end = 0.1;
  /// Time between output instants; t_end is always an output instant.
  double output_stride = 0.01;
  Floors floors;
  Reconstruction reconstruction = Reconstruction::Linear;

  /// Throws UsageError on cfl outside (0, 0.9], nonpositive floors, t_end or stride.
  void validate() const;
};

/// Temperature from the conservative variables; throws PositivityError when
/// rho or the internal energy is not positive.
[[nodiscard]] double recover_temperature(double rho, const Vec3& mom, double etot,
                                         const GasModel& gas, double a);
/// Solves rho e_M(rho, theta) + a theta^4 = rho_e for theta.
[[nodiscard]] double temperature_from_internal(double rho, double rho_e, const GasModel& gas,
                                               double a);

/// Interior and halo cells are converted; ghosts of the result are valid when
/// those of the state are.
[[nodiscard]] Primitives to_primitives(const FluidState& state, const GasModel& gas, double a);
[[nodiscard]] FluidState from_primitives(const Primitives& prim, const GasModel& gas, double a);

/// Adds a forcing term to the tendency at time t (manufactured solutions).
using SourceFn = std::function<void(double t, FluidState& tendency)>;

/// Tendencies of (rho, mom, etot). Requires valid ghosts.
[[nodiscard]] FluidState rhs_nsf(const FluidState& state, const NsfRunConfig& config,
                                 const SourceFn& source = {});

[[nodiscard]] double stable_dt(const FluidState& state, const NsfRunConfig& config);

struct StepStats {
  long floor_hits = 0;
  /// Largest number of floored cells in one stage.
  long max_stage_hits = 0;
};

/// One SSP-RK3 step; the result has valid ghosts and time advanced by dt.
[[nodiscard]] FluidState step(const FluidState& state, double dt, const NsfRunConfig& config,
                              StepStats* stats = nullptr, const SourceFn& source = {});

struct EntropyProduction {
  Field sigma;
  double integral = 0.0;
};

/// sigma = (S : grad u + omega kappa |grad theta|^2 / theta) / theta from centered gradients.
[[nodiscard]] EntropyProduction entropy_production(const FluidState& state,
                                                   const NsfRunConfig& config);

struct DiagnosticsRow {
  double t = 0.0;
  double mass = 0.0;
  double etot = 0.0;
  double damping_integral = 0.0;
  double sigma_integral = 0.0;
  double min_rho = 0.0;
  double min_theta = 0.0;
  long floor_hits = 0;
};

struct SimulateOptions {
  SourceFn source;
  bool keep_snapshots = true;
  /// When set, snapshots and the diagnostics CSV are written here, and the
  /// last good state is dumped on abort.
  std::optional<std::filesystem::path> out_dir;
  long max_steps = 10'000'000;
};

struct Trajectory {
  std::vector<FluidState> snapshots;
  std::vector<DiagnosticsRow> rows;
  DataBounds bounds;
  long steps = 0;
  bool healthy = true;
  bool aborted = false;
  std::string failure;
};

/// Output instants 0, stride, 2 stride, ..., t_end (the last one clipped).
[[nodiscard]] std::vector<double> output_times(double t_end, double stride);

/// Runs to t_end. A positivity failure or a non-finite state aborts the run:
/// the trajectory is returned with aborted set and the failure described.
[[nodiscard]] Trajectory simulate(const NsfRunConfig& config, const FluidState& initial,
                                  const SimulateOptions& options = {});

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRow>& rows);

/// Snapshot fields: rho, mom_x[, mom_y], etot.
[[nodiscard]] Snapshot to_snapshot(const FluidState& state);
[[nodiscard]] FluidState from_snapshot(const Snapshot& snap, int ghosts = 2);

}  // namespace nsflab
