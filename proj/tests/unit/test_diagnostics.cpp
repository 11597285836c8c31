#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "nsflab/diagnostics.hpp"
#include "nsflab/errors.hpp"
#include "nsflab/euler_reference.hpp"
#include "support.hpp"

using namespace nsflab;
using namespace nsflab::testing;

namespace {

constexpr double kPi = std::numbers::pi;

ScalingParams path_point(double a) { return {a, std::pow(a, 0.55), std::pow(a, 1.2), std::pow(a, 0.1)}; }

NsfRunConfig slip_config(int n, ScalingParams s) {
  NsfRunConfig c;
  c.grid = Grid::line(n, 1.0, Boundary::SlipWall);
  c.scaling = s;
  return c;
}

}  // namespace

TEST_CASE("rate envelope") {
  CHECK(rate_envelope({1.0, 1.0, 1.0, 1.0}) == 1.0);
  for (double t : rate_envelope_terms({1.0, 1.0, 1.0, 1.0})) CHECK(t == 1.0);

  // Direct evaluation of the seven terms at a = 1e-4 on the default path.
  const double a = 1e-4;
  const ScalingParams s = path_point(a);
  const double nu = std::pow(a, 0.55), om = std::pow(a, 1.2), lam = std::pow(a, 0.1);
  const std::array<double, 7> expect{a, nu, om, lam, nu / std::sqrt(a), om / a,
                                     std::cbrt(a / std::sqrt(nu * nu * nu * lam))};
  const auto terms = rate_envelope_terms(s);
  for (int k = 0; k < 7; ++k) CHECK(terms[k] == doctest::Approx(expect[k]).epsilon(1e-13));
  const double env = rate_envelope(s);
  CHECK(env == *std::max_element(expect.begin(), expect.end()));
  // The cube-root term dominates here; it equals a^(0.125/3).
  CHECK(std::max_element(terms.begin(), terms.end()) - terms.begin() == 6);
  CHECK(env == doctest::Approx(std::pow(a, 0.125 / 3.0)).epsilon(1e-13));

  double prev = INFINITY;
  double prev_ratio = INFINITY;
  for (double ak : {1e-2, 1e-3, 1e-4}) {
    const double e = rate_envelope(path_point(ak));
    CHECK(e < prev);
    prev = e;
    const double r = rate_envelope_terms(path_point(ak))[5];
    CHECK(r < prev_ratio);
    prev_ratio = r;
  }

  CHECK_THROWS_AS((void)rate_envelope({0.0, 1.0, 1.0, 1.0}), DomainError);
  CHECK_THROWS_AS((void)rate_envelope({1.0, 0.0, 1.0, 1.0}), DomainError);
  CHECK_THROWS_AS((void)rate_envelope({1.0, 1.0, 1.0, 0.0}), DomainError);
}

TEST_CASE("interpolation ratio") {
  const Grid g = Grid::rectangle(12, 10, 1.0, 2.0, Boundary::Periodic, Boundary::SlipWall);
  VectorField c{Field(g, 0.3), Field(g, -0.4)};
  CHECK(interpolation_ratio(c) == doctest::Approx(1.0).epsilon(1e-14));
  VectorField z{Field(g), Field(g)};
  CHECK(interpolation_ratio(z) == 0.0);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<VectorField> fields;
  for (int k = 0; k < 100; ++k) {
    VectorField v{Field(g), Field(g)};
    const double spike = std::exp(3.0 * n(rng));
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 12; ++i) {
        v[0].at(i, j) = n(rng) * (i == 3 && j == 4 ? spike : 1.0);
        v[1].at(i, j) = n(rng);
      }
    CHECK(interpolation_ratio(v) <= 1.0 + 1e-12);
    fields.push_back(v);
  }
  const double worst = interpolation_check(fields);
  CHECK(worst <= 1.0 + 1e-12);
  CHECK(worst > 0.5);
}

TEST_CASE("uniform bounds") {
  NsfRunConfig c = slip_config(32, {0.01, 0.02, 0.03, 0.1});
  const Primitives rest = make_primitives(
      c.grid, [](double, double) { return 1.2; }, [](double, double) { return 1.0; },
      [](double, double) { return 0.0; });
  std::vector<FluidState> still;
  for (double t : {0.0, 0.5, 1.0}) {
    FluidState s = from_primitives(rest, c.gas, c.scaling.a);
    s.time = t;
    still.push_back(s);
  }
  const UniformBounds b = uniform_bounds(still, c);
  CHECK(b.kinetic == 0.0);
  CHECK(b.strain == 0.0);
  CHECK(b.damping == 0.0);
  CHECK(b.heat == 0.0);
  CHECK(b.rho_theta == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(b.rho_53 == doctest::Approx(std::pow(1.2, 5.0 / 3.0)).epsilon(1e-14));
  CHECK(b.radiation == doctest::Approx(0.01).epsilon(1e-14));

  auto moving = [&](double scale) {
    const Primitives p = make_primitives(
        c.grid, [](double x, double) { return 1.0 + 0.1 * std::cos(kPi * x); },
        [](double, double) { return 1.0; }, [=](double x, double) { return scale * 0.2 * std::sin(kPi * x); });
    FluidState s = from_primitives(p, c.gas, c.scaling.a);
    std::vector<FluidState> v{s, s};
    v[1].time = 1.0;
    return uniform_bounds(v, c);
  };
  const UniformBounds one = moving(1.0), two = moving(2.0);
  CHECK(two.kinetic == doctest::Approx(4.0 * one.kinetic).epsilon(1e-13));
  CHECK(two.damping == doctest::Approx(4.0 * one.damping).epsilon(1e-13));
  CHECK(two.strain == doctest::Approx(4.0 * one.strain).epsilon(1e-12));
  CHECK(one.to_text().find("kinetic") != std::string::npos);
}

TEST_CASE("relative energy inequality on an equilibrium") {
  NsfRunConfig c = slip_config(16, {0.05, 0.05, 0.05, 0.1});
  const Primitives rest = make_primitives(
      c.grid, [](double, double) { return 1.0; }, [](double, double) { return 1.0; },
      [](double, double) { return 0.0; });
  std::vector<FluidState> nsf;
  std::vector<ReferenceFields> ref;
  for (double t : {0.0, 0.1, 0.2}) {
    FluidState s = from_primitives(rest, c.gas, c.scaling.a);
    s.time = t;
    nsf.push_back(s);
    ref.push_back(as_reference(rest, t));
  }
  const InequalitySeries r = rel_energy_inequality_residual(nsf, ref, c);
  REQUIRE(r.rows.size() == 3);
  for (const auto& row : r.rows) {
    CHECK(row.E == 0.0);
    CHECK(row.lhs == 0.0);
    for (double term : row.terms) CHECK(std::abs(term) < 1e-14);
  }
  CHECK(r.max_abs < 1e-14);

  ref.pop_back();
  CHECK_THROWS_AS((void)rel_energy_inequality_residual(nsf, ref, c), UsageError);
  ref.push_back(as_reference(rest, 0.25));
  CHECK_THROWS_AS((void)rel_energy_inequality_residual(nsf, ref, c), UsageError);
}

TEST_CASE("relative energy inequality along a smooth run and its sign mutation") {
  NsfRunConfig c = slip_config(32, path_point(1e-2));
  c.t_end = 0.2;
  c.output_stride = 0.02;
  EulerRunConfig e;
  e.grid = Grid::line(128, 1.0, Boundary::SlipWall, 3);
  e.t_end = 0.2;
  e.output_stride = 0.02;
  const InitialData data{[](double x, double) { return 1.0 + 0.1 * std::cos(2 * kPi * x); },
                         [](double x, double) { return 1.0 + 0.1 * std::cos(kPi * x); },
                         [](double x, double) { return std::array<double, 2>{0.1 * std::sin(kPi * x), 0.0}; },
                         "acoustic"};
  const ReferenceTrajectory reference = run_euler(e, from_primitives(sample_initial(data, e.grid), e.gas, 0.0));
  const ReferenceFields r0 = sample_reference(reference, 0.0, c.grid);
  Primitives p0 = Primitives::zeros(c.grid);
  p0.rho = r0.rho;
  p0.theta = r0.theta;
  p0.u = r0.u;
  p0.fill_ghosts();
  const Trajectory t = simulate(c, from_primitives(p0, c.gas, c.scaling.a));
  REQUIRE(t.healthy);
  std::vector<ReferenceFields> ref;
  for (const auto& s : t.snapshots) ref.push_back(sample_reference(reference, s.time, c.grid));

  const InequalitySeries honest = rel_energy_inequality_residual(t.snapshots, ref, c);
  const InequalitySeries mutated = rel_energy_inequality_residual(t.snapshots, ref, c, InequalityOptions{-1.0});
  CHECK(honest.rows.front().E < 1e-12);
  CHECK(honest.max_excess < 1e-3 * mutated.max_excess);
  CHECK(mutated.max_excess > 0.0);
}
