#include "nsflab/grid.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "nsflab/errors.hpp"
#include "nsflab/parallel.hpp"

namespace nsflab {

std::string to_string(Boundary b) { return b == Boundary::Periodic ? "periodic" : "slip"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::Periodic;
  if (s == "slip" || s == "slip-wall" || s == "wall") return Boundary::SlipWall;
  throw ConfigError("unknown boundary kind '" + s + "' (expected periodic or slip)");
}

// ---------------------------------------------------------------------------
// Grid

Grid Grid::line(int n, double length, Boundary bc, int ghosts) {
  Grid g;
  g.dim = 1;
  g.extent = {length, 1.0};
  g.cells = {n, 1};
  g.bc = {bc, Boundary::Periodic};
  g.ghosts = ghosts;
  g.validate();
  return g;
}

Grid Grid::rectangle(int nx, int ny, double lx, double ly, Boundary bcx, Boundary bcy, int ghosts) {
  Grid g;
  g.dim = 2;
  g.extent = {lx, ly};
  g.cells = {nx, ny};
  g.bc = {bcx, bcy};
  g.ghosts = ghosts;
  g.validate();
  return g;
}

void Grid::validate() const {
  if (dim != 1 && dim != 2) throw UsageError("grid dimension must be 1 or 2");
  if (ghosts < 1) throw UsageError("grid needs at least one ghost layer");
  for (int ax = 0; ax < dim; ++ax) {
    if (cells[ax] < 8) throw UsageError("grid needs at least 8 cells per axis");
    if (!(extent[ax] > 0.0) || !std::isfinite(extent[ax])) throw UsageError("grid extent must be positive");
    if (cells[ax] < ghosts) throw UsageError("fewer cells than ghost layers");
  }
  if (dim == 1 && cells[1] != 1) throw UsageError("1-D grid must have a single row");
}

Grid Grid::refined(int factor, int new_ghosts) const {
  Grid g = *this;
  for (int ax = 0; ax < dim; ++ax) g.cells[ax] *= factor;
  g.ghosts = new_ghosts;
  g.validate();
  return g;
}

std::string Grid::describe() const {
  std::ostringstream os;
  os << "dim=" << dim << " cells=" << cells[0] << 'x' << cells[1] << " extent="
     << format_double(extent[0]) << 'x' << format_double(extent[1]) << " bc=" << to_string(bc[0])
     << ',' << to_string(bc[1]);
  return os.str();
}

// ---------------------------------------------------------------------------
// Field

Field::Field(const Grid& grid, double fill) : grid_(grid), data_(grid.alloc_size(), fill) {}

void Field::require_ghosts(const char* who) const {
  if (!ghosts_valid_) throw UsageError(std::string(who) + ": ghost cells are not filled");
}

std::vector<double> Field::interior() const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(grid_.interior_count()));
  for (int j = 0; j < grid_.cells[1]; ++j)
    for (int i = 0; i < grid_.cells[0]; ++i) out.push_back((*this)(i, j));
  return out;
}

void Field::set_interior(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(grid_.interior_count())) {
    throw UsageError("set_interior: size mismatch");
  }
  std::size_t k = 0;
  for (int j = 0; j < grid_.cells[1]; ++j)
    for (int i = 0; i < grid_.cells[0]; ++i) at(i, j) = values[k++];
}

// ---------------------------------------------------------------------------
// ghosts

void fill_ghosts(Field& f, std::array<Parity, 2> parity) {
  const Grid& g = f.grid();
  const int nx = g.cells[0];
  const int ny = g.cells[1];
  const int gx = g.halo(0);
  const int gy = g.halo(1);
  for (int j = 0; j < ny; ++j) {
    for (int k = 0; k < gx; ++k) {
      if (g.bc[0] == Boundary::Periodic) {
        f.raw_ref(-1 - k, j) = f(nx - 1 - k, j);
        f.raw_ref(nx + k, j) = f(k, j);
      } else {
        const double s = parity[0] == Parity::Odd ? -1.0 : 1.0;
        f.raw_ref(-1 - k, j) = s * f(k, j);
        f.raw_ref(nx + k, j) = s * f(nx - 1 - k, j);
      }
    }
  }
  for (int i = -gx; i < nx + gx; ++i) {
    for (int k = 0; k < gy; ++k) {
      if (g.bc[1] == Boundary::Periodic) {
        f.raw_ref(i, -1 - k) = f(i, ny - 1 - k);
        f.raw_ref(i, ny + k) = f(i, k);
      } else {
        const double s = parity[1] == Parity::Odd ? -1.0 : 1.0;
        f.raw_ref(i, -1 - k) = s * f(i, k);
        f.raw_ref(i, ny + k) = s * f(i, ny - 1 - k);
      }
    }
  }
  f.mark_ghosts_valid();
}

void fill_ghosts_vector(VectorField& v) {
  fill_ghosts(v[0], {Parity::Odd, Parity::Even});
  fill_ghosts(v[1], {Parity::Even, Parity::Odd});
}

// ---------------------------------------------------------------------------
// stencils

Field gradient(const Field& f, int axis) {
  f.require_ghosts("gradient");
  const Grid& g = f.grid();
  Field out(g);
  if (axis >= g.dim) {
    out.mark_ghosts_valid();
    return out;
  }
  const double inv = 1.0 / (2.0 * g.spacing(axis));
  const int di = axis == 0 ? 1 : 0;
  const int dj = axis == 1 ? 1 : 0;
  const int ny = g.cells[1];
#pragma omp parallel for schedule(static)
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < g.cells[0]; ++i) out.raw_ref(i, j) = (f(i + di, j + dj) - f(i - di, j - dj)) * inv;
  return out;
}

Field divergence(const VectorField& v) {
  const Grid& g = v[0].grid();
  Field out = gradient(v[0], 0);
  if (g.dim == 2) {
    const Field dy = gradient(v[1], 1);
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i) out.at(i, j) += dy(i, j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// reductions and norms

double integrate(const Field& f) {
  const std::vector<double> vals = f.interior();
  return deterministic_sum(vals) * f.grid().cell_volume();
}

double inner(const Field& f, const Field& g) {
  if (!f.grid().same_cells(g.grid())) throw UsageError("inner: grid mismatch");
  std::vector<double> vals = f.interior();
  const std::vector<double> other = g.interior();
  for (std::size_t k = 0; k < vals.size(); ++k) vals[k] *= other[k];
  return deterministic_sum(vals) * f.grid().cell_volume();
}

double lp_norm(const Field& f, double p) {
  std::vector<double> vals = f.interior();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : vals) m = std::max(m, std::abs(v));
    return m;
  }
  if (!(p >= 1.0)) throw UsageError("lp_norm: p must be >= 1");
  const bool even_integer = p == 2.0 || p == 4.0 || p == 6.0;
  for (double& v : vals) {
    const double a = std::abs(v);
    if (even_integer) {
      const double a2 = a * a;
      v = p == 2.0 ? a2 : (p == 4.0 ? a2 * a2 : a2 * a2 * a2);
    } else {
      v = std::pow(a, p);
    }
  }
  const double s = deterministic_sum(vals) * f.grid().cell_volume();
  return std::pow(s, 1.0 / p);
}

Field magnitude(const VectorField& v) {
  const Grid& g = v[0].grid();
  Field out(g);
  for (int j = 0; j < g.cells[1]; ++j) {
    for (int i = 0; i < g.cells[0]; ++i) {
      const double a = v[0](i, j);
      const double b = g.dim == 2 ? v[1](i, j) : 0.0;
      out.at(i, j) = std::sqrt(a * a + b * b);
    }
  }
  return out;
}

double interior_min(const Field& f) {
  const auto v = f.interior();
  return deterministic_min(v);
}

double interior_max(const Field& f) {
  const auto v = f.interior();
  return deterministic_max(v);
}

void TrapezoidAccumulator::add(double t, double value) {
  if (started_) integral_ += 0.5 * (t - t_prev_) * (value + v_prev_);
  started_ = true;
  t_prev_ = t;
  v_prev_ = value;
}

// ---------------------------------------------------------------------------
// states

FluidState FluidState::zeros(const Grid& grid) {
  FluidState s;
  s.grid = grid;
  s.rho = Field(grid);
  s.mom = {Field(grid), Field(grid)};
  s.etot = Field(grid);
  return s;
}

void FluidState::fill_ghosts() {
  nsflab::fill_ghosts(rho);
  fill_ghosts_vector(mom);
  nsflab::fill_ghosts(etot);
}

Primitives Primitives::zeros(const Grid& grid) {
  Primitives p;
  p.grid = grid;
  p.rho = Field(grid);
  p.u = {Field(grid), Field(grid)};
  p.theta = Field(grid);
  return p;
}

void Primitives::fill_ghosts() {
  nsflab::fill_ghosts(rho);
  fill_ghosts_vector(u);
  nsflab::fill_ghosts(theta);
}

DataBounds measure_data_bounds(const Primitives& p) {
  const double rmin = interior_min(p.rho);
  const double tmin = interior_min(p.theta);
  if (!(rmin > 0.0) || !(tmin > 0.0)) throw UsageError("initial density and temperature must be positive");
  DataBounds b;
  b.M = integrate(p.rho);
  b.D = interior_max(p.rho) + interior_max(p.theta) + lp_norm(magnitude(p.u), INFINITY);
  return b;
}

void ReferenceFields::fill_ghosts() {
  nsflab::fill_ghosts(rho);
  nsflab::fill_ghosts(theta);
  fill_ghosts_vector(u);
  nsflab::fill_ghosts(rho_t);
  nsflab::fill_ghosts(theta_t);
  fill_ghosts_vector(u_t);
}

void ReferenceFields::check_positive() const {
  if (!(interior_min(rho) > 0.0) || !(interior_min(theta) > 0.0)) {
    throw UsageError("reference density and temperature must be strictly positive");
  }
}

// ---------------------------------------------------------------------------
// snapshots

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  if (snap.names.size() != snap.values.size()) throw UsageError("snapshot names/values mismatch");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const Grid& g = snap.grid;
  os << "nsflab-snapshot 1\n";
  os << "grid " << g.dim << ' ' << g.cells[0] << ' ' << g.cells[1] << ' ' << format_double(g.extent[0])
     << ' ' << format_double(g.extent[1]) << ' ' << to_string(g.bc[0]) << ' ' << to_string(g.bc[1])
     << '\n';
  os << "time " << format_double(snap.time) << '\n';
  os << "fields";
  for (const auto& n : snap.names) os << ' ' << n;
  os << "\nend\n";
  static_assert(std::endian::native == std::endian::little, "snapshot writer assumes little endian");
  for (const auto& vals : snap.values) {
    if (vals.size() != static_cast<std::size_t>(g.interior_count())) {
      throw UsageError("snapshot field size does not match grid");
    }
    os.write(reinterpret_cast<const char*>(vals.data()),
             static_cast<std::streamsize>(vals.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  Snapshot snap;
  std::string line;
  std::getline(is, line);
  if (line != "nsflab-snapshot 1") throw std::runtime_error(path.string() + ": not a snapshot file");
  bool have_grid = false;
  while (std::getline(is, line)) {
    if (line == "end") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "grid") {
      Grid& g = snap.grid;
      std::string bx;
      std::string by;
      ls >> g.dim >> g.cells[0] >> g.cells[1] >> g.extent[0] >> g.extent[1] >> bx >> by;
      g.bc = {boundary_from_string(bx), boundary_from_string(by)};
      have_grid = true;
    } else if (key == "time") {
      std::string tv;
      ls >> tv;
      std::from_chars(tv.data(), tv.data() + tv.size(), snap.time);
    } else if (key == "fields") {
      std::string n;
      while (ls >> n) snap.names.push_back(n);
    } else {
      throw std::runtime_error(path.string() + ": unknown header key " + key);
    }
  }
  if (!have_grid) throw std::runtime_error(path.string() + ": missing grid header");
  const auto count = static_cast<std::size_t>(snap.grid.interior_count());
  for (std::size_t f = 0; f < snap.names.size(); ++f) {
    std::vector<double> vals(count);
    is.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw std::runtime_error(path.string() + ": truncated field data");
    snap.values.push_back(std::move(vals));
  }
  return snap;
}

void write_profile_csv(const std::filesystem::path& path, const Grid& grid,
                       const std::vector<std::string>& names,
                       const std::vector<const Field*>& fields) {
  if (grid.dim != 1) throw UsageError("profile CSV export is 1-D only");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << 'x';
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (int i = 0; i < grid.cells[0]; ++i) {
    os << format_double(grid.center(0, i));
    for (const Field* f : fields) os << ',' << format_double((*f)(i, 0));
    os << '\n';
  }
}

}  // namespace nsflab
