#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "nsflab/grid.hpp"
#include "nsflab/thermo.hpp"

namespace nsflab {

/// Initial data as functions of the cell center (x, y); y is 0 in one dimension.
struct InitialData {
  std::function<double(double, double)> rho;
  std::function<double(double, double)> theta;
  std::function<std::array<double, 2>(double, double)> u;
  std::string description;
};

[[nodiscard]] Primitives sample_initial(const InitialData& data, const Grid& grid);

struct EulerRunConfig {
  GasModel gas = GasModel::ideal_gas();
  /// Needs three ghost layers (filter stencil).
  Grid grid;
  double cfl = 0.5;
  double t_end = 0.1;
  double output_stride = 0.01;
  /// Initial hyperdissipation amplitude; lowered by calibration when needed.
  double filter_eps = 0.01;
  bool calibrate_filter = true;
  /// Allowed kinetic-energy drain by the filter over [0, t_end], relative to
  /// the initial total energy.
  double drain_budget = 1e-6;
  double blowup_factor = 20.0;
  double safety = 0.8;
  /// Stop as soon as the life span is declared exhausted.
  bool stop_at_blowup = true;
  long max_steps = 10'000'000;

  void validate() const;
};

/// Fourth-order centered flux differences plus the filter; requires ghosts.
[[nodiscard]] FluidState rhs_euler(const FluidState& state, const GasModel& gas, double filter_eps);
/// The filter term eps (c_max/h) delta^6 U alone, in flux form per axis.
[[nodiscard]] FluidState filter_tendency(const FluidState& state, const GasModel& gas,
                                         double filter_eps);

struct LifespanResult {
  bool smooth = true;
  /// Declared blow-up time, or t_end when smooth.
  double t_star = 0.0;
  /// Comparisons with the reference are restricted to [0, t_safe].
  double t_safe = 0.0;
  std::string reason;
  std::vector<double> times;
  std::vector<double> grad_u;
  std::vector<double> grad_rho;
};

/// Tracks max |grad u| and max |grad rho| and declares the life span exhausted
/// when either exceeds `factor` times its initial value, or when a fit of
/// 1/g = alpha - beta t over recent samples predicts a blow-up before the next
/// two samples.
class LifespanMonitor {
 public:
  explicit LifespanMonitor(double factor = 20.0, double safety = 0.8)
      : factor_(factor), safety_(safety) {}

  /// Returns true once blow-up has been declared.
  bool observe(double t, double grad_u, double grad_rho);
  /// Positivity loss counts as blow-up at time t.
  void fail(double t, const std::string& why);
  [[nodiscard]] bool declared() const noexcept { return !result_.smooth; }
  /// Final result for a run that ended at t_end.
  [[nodiscard]] LifespanResult result(double t_end) const;

 private:
  bool check_fit(const std::vector<double>& g, double g0);
  double factor_;
  double safety_;
  LifespanResult result_;
};

struct ReferenceTrajectory {
  GasModel gas = GasModel::ideal_gas();
  Grid grid;
  std::vector<double> times;
  std::vector<FluidState> states;
  std::vector<FluidState> tendencies;
  double filter_eps = 0.0;
  double filter_drain = 0.0;
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  long steps = 0;
  LifespanResult lifespan;
};

/// Classic RK4 in time. Snapshots keep the state and its tendency so that time
/// derivatives of the reference are available without differencing in time.
[[nodiscard]] ReferenceTrajectory run_euler(const EulerRunConfig& config, const FluidState& initial);

/// Largest gradient magnitudes on the interior (centered differences).
[[nodiscard]] std::array<double, 2> max_gradients(const FluidState& state, const GasModel& gas);

/// Re-evaluates the monitor on a stored trajectory.
[[nodiscard]] LifespanResult lifespan_monitor(const ReferenceTrajectory& traj, double factor = 20.0,
                                              double safety = 0.8);

struct FormulationResiduals {
  std::vector<double> times;
  /// L2 norms of d_t(rho s) + div(rho s u).
  std::vector<double> entropy;
  /// L2 norms of c_v (d_t(rho theta) + div(rho theta u)) + theta p_theta div u.
  std::vector<double> thermal;
};

[[nodiscard]] FormulationResiduals formulation_residuals(const ReferenceTrajectory& traj);

struct CompatibilityReport {
  bool k0_pass = false;
  double k0_max_normal = 0.0;
  bool k1_pass = false;
  /// Wall value of d_t (u . n), extrapolated from the interior.
  double k1_residual = 0.0;
  double k1_threshold = 0.0;
  std::string k2 = "unchecked";
  [[nodiscard]] std::string to_text() const;
};

/// Requires at least one slip-wall axis.
[[nodiscard]] CompatibilityReport compatibility_check(const InitialData& data, const Grid& grid,
                                                      const GasModel& gas);

/// Linear interpolation in time of the stored states and tendencies, then
/// conservative averaging onto `target`, whose cell counts must divide those
/// of the trajectory grid. Throws UsageError outside the stored time range.
[[nodiscard]] ReferenceFields sample_reference(const ReferenceTrajectory& traj, double t,
                                               const Grid& target);

/// Directory layout: index.txt plus one snapshot per output instant holding
/// the state and its tendency.
void save_reference(const std::filesystem::path& dir, const ReferenceTrajectory& traj);
[[nodiscard]] ReferenceTrajectory load_reference(const std::filesystem::path& dir,
                                                 const GasModel& gas);

/// FNV-1a, 64 bit.
[[nodiscard]] std::uint64_t content_hash(std::string_view bytes, std::uint64_t seed = 14695981039346656037ULL);
[[nodiscard]] std::string hex(std::uint64_t v);
/// Hash over the sampled initial state, the grid, the gas and the run settings.
[[nodiscard]] std::string reference_key(const EulerRunConfig& config, const FluidState& initial);

}  // namespace nsflab
