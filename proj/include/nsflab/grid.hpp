#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace nsflab {

enum class Boundary { Periodic, SlipWall };
enum class Parity { Even, Odd };

[[nodiscard]] std::string to_string(Boundary b);
[[nodiscard]] Boundary boundary_from_string(const std::string& s);

/// Uniform cell-centered box in one or two dimensions with a halo of ghost
/// cells along every active axis.
struct Grid {
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> cells{8, 1};
  std::array<Boundary, 2> bc{Boundary::Periodic, Boundary::Periodic};
  int ghosts = 2;

  static Grid line(int n, double length, Boundary bc, int ghosts = 2);
  static Grid rectangle(int nx, int ny, double lx, double ly, Boundary bcx, Boundary bcy,
                        int ghosts = 2);

  /// Throws UsageError on fewer than 8 cells per active axis or bad extents.
  void validate() const;

  [[nodiscard]] double spacing(int axis) const { return extent[axis] / cells[axis]; }
  [[nodiscard]] int halo(int axis) const { return axis < dim ? ghosts : 0; }
  [[nodiscard]] int alloc(int axis) const { return cells[axis] + 2 * halo(axis); }
  [[nodiscard]] std::size_t alloc_size() const {
    return static_cast<std::size_t>(alloc(0)) * static_cast<std::size_t>(alloc(1));
  }
  [[nodiscard]] std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j + halo(1)) * static_cast<std::size_t>(alloc(0)) +
           static_cast<std::size_t>(i + halo(0));
  }
  [[nodiscard]] int interior_count() const { return cells[0] * cells[1]; }
  [[nodiscard]] double cell_volume() const {
    return dim == 1 ? spacing(0) : spacing(0) * spacing(1);
  }
  [[nodiscard]] double volume() const { return dim == 1 ? extent[0] : extent[0] * extent[1]; }
  [[nodiscard]] double center(int axis, int i) const { return (i + 0.5) * spacing(axis); }
  [[nodiscard]] bool same_cells(const Grid& o) const {
    return dim == o.dim && cells == o.cells && extent == o.extent && bc == o.bc;
  }
  /// Same geometry with a different resolution factor per active axis.
  [[nodiscard]] Grid refined(int factor, int new_ghosts) const;
  [[nodiscard]] std::string describe() const;
};

/// Scalar cell field with ghost halo. Writes through at() invalidate the halo;
/// stencil operators refuse to read a field whose halo is stale.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double fill = 0.0);

  [[nodiscard]] const Grid& grid() const noexcept { return grid_; }
  [[nodiscard]] double operator()(int i, int j = 0) const { return data_[grid_.index(i, j)]; }
  double& at(int i, int j = 0) {
    ghosts_valid_ = false;
    return data_[grid_.index(i, j)];
  }
  /// Write that leaves the halo flag untouched; used by the ghost filler and
  /// by parallel loops over freshly created fields.
  double& raw_ref(int i, int j) { return data_[grid_.index(i, j)]; }

  /// Whole allocation (interior and halo), laid out as Grid::index.
  [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

  [[nodiscard]] bool ghosts_valid() const noexcept { return ghosts_valid_; }
  void mark_ghosts_valid() noexcept { ghosts_valid_ = true; }
  void require_ghosts(const char* who) const;

  /// Interior values, x fastest.
  [[nodiscard]] std::vector<double> interior() const;
  void set_interior(std::span<const double> values);

 private:
  Grid grid_;
  std::vector<double> data_;
  bool ghosts_valid_ = false;
};

using VectorField = std::array<Field, 2>;

/// Periodic copy or mirror across slip walls: even parity copies, odd parity negates.
void fill_ghosts(Field& f, std::array<Parity, 2> parity = {Parity::Even, Parity::Even});
/// Velocity-like field: component k is odd across walls normal to axis k.
void fill_ghosts_vector(VectorField& v);

/// Second-order centered derivative along axis; interior cells only.
[[nodiscard]] Field gradient(const Field& f, int axis);
[[nodiscard]] Field divergence(const VectorField& v);

/// Cell-volume weighted integral (deterministic reduction).
[[nodiscard]] double integrate(const Field& f);
[[nodiscard]] double inner(const Field& f, const Field& g);
/// ( integral |f|^p )^(1/p), p in {2, 4, 6} or p = infinity.
[[nodiscard]] double lp_norm(const Field& f, double p);
/// Pointwise Euclidean magnitude of the active components.
[[nodiscard]] Field magnitude(const VectorField& v);
[[nodiscard]] double interior_min(const Field& f);
[[nodiscard]] double interior_max(const Field& f);

/// Accumulates a time integral by the trapezoid rule over supplied samples.
class TrapezoidAccumulator {
 public:
  void add(double t, double value);
  [[nodiscard]] double value() const noexcept { return integral_; }
  [[nodiscard]] bool empty() const noexcept { return !started_; }

 private:
  bool started_ = false;
  double t_prev_ = 0.0;
  double v_prev_ = 0.0;
  double integral_ = 0.0;
};

/// Conservative state of the compressible system on a grid.
struct FluidState {
  Grid grid;
  Field rho;
  VectorField mom;
  Field etot;
  double time = 0.0;

  static FluidState zeros(const Grid& grid);
  void fill_ghosts();
};

/// Primitive variables (density, velocity, temperature).
struct Primitives {
  Grid grid;
  Field rho;
  VectorField u;
  Field theta;

  static Primitives zeros(const Grid& grid);
  void fill_ghosts();
};

/// Bounds recorded from initial data: total mass M and the sum D of the sup
/// norms of density, temperature and speed.
struct DataBounds {
  double M = 0.0;
  double D = 0.0;
};

/// Throws UsageError if density or temperature is not strictly positive.
[[nodiscard]] DataBounds measure_data_bounds(const Primitives& p);

/// Smooth Euler fields sampled on a grid, with their time derivatives.
struct ReferenceFields {
  Grid grid;
  Field rho;
  Field theta;
  VectorField u;
  Field rho_t;
  Field theta_t;
  VectorField u_t;
  double time = 0.0;

  void fill_ghosts();
  /// Throws UsageError if rho or theta is not strictly positive.
  void check_positive() const;
};

// --- snapshots ------------------------------------------------------------
//
// Binary layout: an ASCII header of "key value..." lines terminated by a line
// "end", followed by the interior values of each listed field as little-endian
// IEEE-754 doubles, field after field, x fastest.
//
//   nsflab-snapshot 1
//   grid <dim> <nx> <ny> <lx> <ly> <bcx> <bcy>
//   time <t, %.17g>
//   fields <name>...
//   end

struct Snapshot {
  Grid grid;
  double time = 0.0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
};

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
[[nodiscard]] Snapshot read_snapshot(const std::filesystem::path& path);

/// CSV of a 1-D profile: header "x,<names...>", one row per cell.
void write_profile_csv(const std::filesystem::path& path, const Grid& grid,
                       const std::vector<std::string>& names,
                       const std::vector<const Field*>& fields);

/// Shortest round-trip decimal representation, used for every CSV value.
[[nodiscard]] std::string format_double(double v);

}  // namespace nsflab
