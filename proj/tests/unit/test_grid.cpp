#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "nsflab/errors.hpp"
#include "nsflab/grid.hpp"
#include "nsflab/parallel.hpp"
#include "nsflab/thermo.hpp"
#include "support.hpp"

using namespace nsflab;
using namespace nsflab::testing;

namespace {
constexpr double kPi = std::numbers::pi;

Field make_field(const Grid& g, const Profile& f) {
  Field out(g);
  for (int j = 0; j < g.cells[1]; ++j)
    for (int i = 0; i < g.cells[0]; ++i) out.at(i, j) = f(g.center(0, i), g.dim == 2 ? g.center(1, j) : 0.0);
  return out;
}
}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid::line(4, 1.0, Boundary::Periodic).validate(), UsageError);
  CHECK_THROWS_AS(Grid::line(16, -1.0, Boundary::Periodic).validate(), UsageError);
  const Grid g = Grid::rectangle(16, 8, 2.0, 1.0, Boundary::Periodic, Boundary::SlipWall);
  CHECK_NOTHROW(g.validate());
  CHECK(g.spacing(0) == 0.125);
  CHECK(g.spacing(1) == 0.125);
  CHECK(boundary_from_string("slip") == Boundary::SlipWall);
  CHECK(boundary_from_string("periodic") == Boundary::Periodic);
  CHECK_THROWS((void)boundary_from_string("open"));
}

TEST_CASE("gradient exactness and order") {
  for (Boundary bc : {Boundary::Periodic, Boundary::SlipWall}) {
    const Grid g = Grid::line(32, 1.0, bc);
    Field c = make_field(g, [](double, double) { return 2.5; });
    fill_ghosts(c);
    const Field gc = gradient(c, 0);
    for (int i = 0; i < g.cells[0]; ++i) CHECK(gc(i) == 0.0);
  }
  // Affine data is exact in the interior, away from the wall mirror.
  const Grid g = Grid::rectangle(16, 16, 1.0, 1.0, Boundary::SlipWall, Boundary::SlipWall);
  Field f = make_field(g, [](double x, double y) { return 3.0 * x - 2.0 * y + 1.0; });
  fill_ghosts(f);
  const Field gx = gradient(f, 0), gy = gradient(f, 1);
  for (int j = 1; j < 15; ++j) {
    for (int i = 1; i < 15; ++i) {
      CHECK(std::abs(gx(i, j) - 3.0) < 1e-13);
      CHECK(std::abs(gy(i, j) + 2.0) < 1e-13);
    }
  }
  Field unfilled(g);
  unfilled.at(0, 0) = 1.0;
  CHECK_THROWS_AS((void)gradient(unfilled, 0), UsageError);

  auto err = [](int n) {
    const Grid p = Grid::line(n, 1.0, Boundary::Periodic);
    Field s = make_field(p, [](double x, double) { return std::sin(2 * kPi * x); });
    fill_ghosts(s);
    return l2_error(gradient(s, 0), [](double x, double) { return 2 * kPi * std::cos(2 * kPi * x); });
  };
  const double e1 = err(32), e2 = err(64), e3 = err(128);
  CHECK(std::log2(e1 / e2) > 1.9);
  CHECK(std::log2(e2 / e3) > 1.9);
}

TEST_CASE("divergence") {
  const Grid g = Grid::rectangle(16, 16, 1.0, 1.0, Boundary::Periodic, Boundary::Periodic);
  VectorField v{make_field(g, [](double x, double) { return std::sin(2 * kPi * x); }),
                make_field(g, [](double, double y) { return std::cos(2 * kPi * y); })};
  fill_ghosts_vector(v);
  const Field d = divergence(v);
  const double h = g.spacing(0);
  const double factor = std::sin(2 * kPi * h) / h;
  for (int j = 0; j < 16; ++j) {
    for (int i = 0; i < 16; ++i) {
      const double x = g.center(0, i), y = g.center(1, j);
      CHECK(std::abs(d(i, j) - factor * (std::cos(2 * kPi * x) - std::sin(2 * kPi * y))) < 1e-12);
    }
  }
}

TEST_CASE("slip wall ghosts") {
  const Grid g = Grid::line(8, 1.0, Boundary::SlipWall, 2);
  VectorField u{Field(g), Field(g)};
  Field th(g);
  for (int i = 0; i < 8; ++i) {
    u[0].at(i) = 0.1 * (i + 1);
    th.at(i) = 1.0 + 0.05 * i * i;
  }
  fill_ghosts_vector(u);
  fill_ghosts(th);
  CHECK(u[0](-1) == -u[0](0));
  CHECK(u[0](-2) == -u[0](1));
  CHECK(u[0](8) == -u[0](7));
  CHECK(th(-1) == th(0));
  CHECK(th(8) == th(7));
  // Centered wall-face heat flux -kappa (theta_0 - theta_ghost)/h vanishes exactly.
  const TransportModel tr = TransportModel::default_model();
  const double h = g.spacing(0);
  const double face = 0.5 * (th(0) + th(-1));
  CHECK(-tr.kappa(face) * (th(0) - th(-1)) / h == 0.0);
  CHECK(0.5 * (u[0](0) + u[0](-1)) == 0.0);

  // Idempotent.
  const auto before = th.data();
  fill_ghosts(th);
  CHECK(th.data() == before);
}

TEST_CASE("periodic ghosts") {
  const Grid g = Grid::line(8, 1.0, Boundary::Periodic, 2);
  Field f(g);
  for (int i = 0; i < 8; ++i) f.at(i) = i;
  fill_ghosts(f);
  CHECK(f(-1) == 7.0);
  CHECK(f(-2) == 6.0);
  CHECK(f(8) == 0.0);
  CHECK(f(9) == 1.0);
}

TEST_CASE("norms") {
  const Grid g = Grid::rectangle(10, 20, 2.0, 3.0, Boundary::Periodic, Boundary::SlipWall);
  const Field one(g, 1.0);
  const double V = 6.0;
  for (double p : {2.0, 4.0, 6.0}) CHECK(lp_norm(one, p) == doctest::Approx(std::pow(V, 1.0 / p)).epsilon(1e-14));
  CHECK(lp_norm(one, INFINITY) == 1.0);
  const Field zero(g);
  CHECK(lp_norm(zero, 2.0) == 0.0);
  CHECK(integrate(one) == doctest::Approx(V).epsilon(1e-14));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Field f(g);
    for (int j = 0; j < 20; ++j)
      for (int i = 0; i < 10; ++i) f.at(i, j) = n(rng) * std::exp(n(rng));
    const double lhs = lp_norm(f, 4.0);
    const double rhs = std::pow(lp_norm(f, 6.0), 0.75) * std::pow(lp_norm(f, 2.0), 0.25);
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("trapezoid accumulator") {
  TrapezoidAccumulator acc;
  CHECK(acc.empty());
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    acc.add(t, 2.0 * t + 1.0);
  }
  CHECK(acc.value() == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("deterministic reductions") {
  std::vector<double> v(100000);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& x : v) x = u(rng) * std::pow(10.0, 8 * u(rng));
  const int saved = thread_count();
  set_thread_count(1);
  const double s1 = deterministic_sum(v);
  set_thread_count(4);
  const double s4 = deterministic_sum(v);
  set_thread_count(saved);
  CHECK(s1 == s4);

  const Grid g = Grid::rectangle(64, 64, 1.0, 1.0, Boundary::Periodic, Boundary::Periodic);
  Field f(g);
  for (int j = 0; j < 64; ++j)
    for (int i = 0; i < 64; ++i) f.at(i, j) = u(rng);
  set_thread_count(1);
  const double i1 = integrate(f);
  set_thread_count(3);
  const double i3 = integrate(f);
  set_thread_count(saved);
  CHECK(i1 == i3);
}

TEST_CASE("parallel_for rethrows the smallest failing index") {
  std::vector<int> out(100, 0);
  CHECK_THROWS_WITH(parallel_for(100, [&](long k) {
                      if (k == 37 || k == 80) throw UsageError("fail " + std::to_string(k));
                      out[static_cast<std::size_t>(k)] = 1;
                    }),
                    "fail 37");
}

TEST_CASE("snapshot round trip") {
  const Grid g = Grid::rectangle(9, 8, 1.5, 1.0, Boundary::SlipWall, Boundary::Periodic);
  Snapshot s;
  s.grid = g;
  s.time = 0.1 + 0.2;
  s.names = {"a", "b"};
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int k = 0; k < 2; ++k) {
    std::vector<double> v(72);
    for (auto& x : v) x = u(rng);
    s.values.push_back(v);
  }
  const auto dir = std::filesystem::temp_directory_path() / "nsflab_snapshot_test";
  std::filesystem::create_directories(dir);
  write_snapshot(dir / "s.bin", s);
  const Snapshot r = read_snapshot(dir / "s.bin");
  CHECK(r.time == s.time);
  CHECK(r.names == s.names);
  CHECK(r.values == s.values);
  CHECK(r.grid.same_cells(g));

  const Grid line = Grid::line(8, 1.0, Boundary::SlipWall);
  Field f(line, 2.0);
  write_profile_csv(dir / "p.csv", line, {"f"}, {&f});
  std::ifstream in(dir / "p.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,f");
  std::filesystem::remove_all(dir);
}

TEST_CASE("data bounds") {
  const Grid g = Grid::line(16, 2.0, Boundary::SlipWall);
  const Primitives p = make_primitives(
      g, [](double, double) { return 1.5; }, [](double x, double) { return 1.0 + 0.1 * x; },
      [](double x, double) { return -0.4 * x * (2.0 - x); });
  const DataBounds b = measure_data_bounds(p);
  CHECK(b.M == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(b.D > 1.5 + 1.0);
  Primitives bad = p;
  bad.rho.at(3) = 0.0;
  CHECK_THROWS_AS((void)measure_data_bounds(bad), UsageError);
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-300.0, 300.0);
  for (int k = 0; k < 1000; ++k) {
    const double v = std::pow(10.0, u(rng)) * (k % 2 ? -1.0 : 1.0);
    CHECK(std::stod(format_double(v)) == v);
  }
}
