#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nsflab/errors.hpp"
#include "nsflab/thermo.hpp"

using namespace nsflab;

namespace {

// Independent closed forms for P(Z) = Z.
double ideal_p(double a, double rho, double th) { return rho * th + a / 3.0 * std::pow(th, 4); }
double ideal_e(double a, double rho, double th) { return 1.5 * th + a * std::pow(th, 4) / rho; }
double ideal_s(double a, double rho, double th, double S0 = 0.0) {
  return S0 - std::log(rho) + 1.5 * std::log(th) + 4.0 * a * std::pow(th, 3) / (3.0 * rho);
}

Tensor3 random_tensor(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  Tensor3 g{};
  for (auto& row : g)
    for (auto& v : row) v = u(rng);
  return g;
}

}  // namespace

TEST_CASE("pressure examples") {
  const GasModel ideal = GasModel::ideal_gas();
  CHECK(pressure(ideal, 0.0, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pressure(ideal, 0.3, 0.0, 1.0) == doctest::Approx(0.1).epsilon(1e-15));
  const auto parts = pressure_parts(ideal, 0.3, 2.0, 1.5);
  CHECK(parts.molecular == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(parts.radiation == doctest::Approx(0.1 * std::pow(1.5, 4)).epsilon(1e-15));

  const GasModel g = GasModel::from_expression("rational", "Z + Z^2/(1 + Z)");
  const double z = 2.0;
  CHECK(std::abs(pressure(g, 0.0, 2.0, 1.0) - (z + z * z / (1.0 + z))) < 1e-14);
  const double th = 1.7, rho = 0.4;
  const double zz = rho / std::pow(th, 1.5);
  const double oracle = std::pow(th, 2.5) * (zz + zz * zz / (1.0 + zz));
  CHECK(std::abs(pressure(g, 0.0, rho, th) - oracle) < 1e-14 * oracle);
}

TEST_CASE("pressure domain errors") {
  const GasModel ideal = GasModel::ideal_gas();
  CHECK_THROWS_AS((void)pressure(ideal, 0.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS((void)pressure(ideal, 0.0, 1.0, -1.0), DomainError);
  CHECK_THROWS_AS((void)pressure(ideal, 0.0, NAN, 1.0), DomainError);
  CHECK_THROWS_AS((void)pressure(ideal, 0.0, -1.0, 1.0), DomainError);
}

TEST_CASE("internal energy examples") {
  const GasModel ideal = GasModel::ideal_gas();
  CHECK(internal_energy(ideal, 0.0, 1.0, 2.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(internal_energy(ideal, 1.0, 2.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)internal_energy(ideal, 0.0, 0.0, 1.0), DomainError);
  CHECK(energy_density(ideal, 0.7, 0.0, 2.0) == doctest::Approx(0.7 * 16.0).epsilon(1e-15));

  // c_v positivity for a generic profile, oracle: centered differences h = 1e-6.
  const GasModel g = GasModel::from_expression("rational", "Z + Z^2/(1 + Z)");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lr(std::log(0.1), std::log(10.0));
  for (int k = 0; k < 100; ++k) {
    const double rho = std::exp(lr(rng));
    const double th = std::exp(lr(rng));
    const double h = 1e-6;
    const double fd = (rho * energy_molecular(g, rho, th + h) - rho * energy_molecular(g, rho, th - h)) / (2 * h);
    CHECK(fd > 0.0);
  }
}

TEST_CASE("entropy examples") {
  const GasModel ideal = GasModel::ideal_gas();
  CHECK(std::abs(entropy(ideal, 0.0, 1.0, 1.0)) < 1e-15);
  CHECK(entropy(ideal, 0.0, 1.0, std::exp(2.0 / 3.0)) == doctest::Approx(1.0).epsilon(1e-14));

  const GasModel g = GasModel::from_expression("rational", "Z + Z^2/(1 + Z)");
  CHECK(std::abs(g.S(1.0) - g.S0) < 1e-15);
  const auto z = log_grid(1e-3, 1e3, 60);
  for (std::size_t i = 1; i < z.size(); ++i) CHECK(g.S(z[i]) < g.S(z[i - 1]));
}

TEST_CASE("ideal gas closures match closed forms") {
  const GasModel ideal = GasModel::ideal_gas(0.3);
  for (double a : {0.0, 0.5}) {
    for (double rho : {0.1, 1.0, 7.0}) {
      for (double th : {0.2, 1.0, 9.0}) {
        CHECK(std::abs(pressure(ideal, a, rho, th) - ideal_p(a, rho, th)) <= 1e-13 * ideal_p(a, rho, th));
        CHECK(std::abs(internal_energy(ideal, a, rho, th) - ideal_e(a, rho, th)) <= 1e-13 * ideal_e(a, rho, th));
        const double s = ideal_s(a, rho, th, 0.3);
        CHECK(std::abs(entropy(ideal, a, rho, th) - s) <= 1e-13 * std::max(1.0, std::abs(s)));
      }
    }
  }
}

TEST_CASE("generic entropy quadrature agrees with the ideal closed form") {
  const GasModel g = GasModel::from_expression("ideal-as-text", "Z");
  for (double z : {1e-3, 0.1, 1.0, 10.0, 1e3}) CHECK(std::abs(g.S(z) + std::log(z)) < 1e-9);
}

TEST_CASE("entropy monotonicity in rho and theta") {
  const GasModel g = GasModel::from_expression("rational", "Z + Z^2/(1 + Z)");
  for (double a : {0.0, 0.5}) {
    for (double rho : {0.2, 1.0, 5.0}) {
      for (double th : {0.2, 1.0, 5.0}) {
        CHECK(entropy(g, a, rho * 1.01, th) < entropy(g, a, rho, th));
        CHECK(entropy(g, a, rho, th * 1.01) > entropy(g, a, rho, th));
      }
    }
  }
}

TEST_CASE("gibbs residual examples") {
  const GasModel ideal = GasModel::ideal_gas();
  auto [r1, r2] = gibbs_residual(ideal, 0.0, 1.0, 1.0);
  CHECK(std::abs(r1) < 1e-8);
  CHECK(std::abs(r2) < 1e-8);
  std::tie(r1, r2) = gibbs_residual(ideal, 0.5, 2.0, 3.0);
  CHECK(std::abs(r1) < 1e-7);
  CHECK(std::abs(r2) < 1e-7);
  const auto [m1, m2] = gibbs_residual_with(ideal, 0.0, 1.0, 1.0, [&](double r, double t) {
    return 1.01 * internal_energy(ideal, 0.0, r, t);
  });
  CHECK(std::abs(m1) > 1e-3);
  (void)m2;
}

TEST_CASE("gibbs residual of a generic profile") {
  const GasModel g = GasModel::from_expression("rational", "Z + Z^2/(1 + Z)");
  for (double a : {0.0, 0.5}) {
    for (double rho : log_grid(0.1, 10.0, 7)) {
      for (double th : log_grid(0.1, 10.0, 7)) {
        const auto [r1, r2] = gibbs_residual(g, a, rho, th);
        CHECK(std::abs(r1) < 1e-7);
        CHECK(std::abs(r2) < 1e-7);
      }
    }
  }
}

TEST_CASE("heat capacity") {
  const GasModel ideal = GasModel::ideal_gas();
  CHECK(heat_capacity_cv(ideal, 0.3, 4.0) == 1.5);
  const GasModel g = GasModel::from_expression("rational", "Z + Z^2/(1 + Z)");
  const double h = 1e-5;
  const double fd = (energy_molecular(g, 1.0, 1.0 + h) - energy_molecular(g, 1.0, 1.0 - h)) / (2 * h);
  CHECK(std::abs(heat_capacity_cv(g, 1.0, 1.0) - fd) < 1e-6);
  CHECK(heat_capacity_cv(g, 0.1, 10.0) > 0.0);
  // P = Z^(5/3) has (5/3)P - P'Z = 0, so c_v vanishes.
  const GasModel deg = GasModel::from_expression("degenerate", "Z^(5/3)");
  CHECK_THROWS_AS((void)heat_capacity_cv(deg, 1.0, 1.0), ModelViolation);
}

TEST_CASE("stress tensor") {
  const TransportModel tr = TransportModel::default_model();
  const Tensor3 zero{};
  const Tensor3 s0 = stress_tensor(tr, 0.3, 1.2, zero);
  for (const auto& row : s0)
    for (double v : row) CHECK(v == 0.0);

  const TransportModel can = TransportModel::canonical();
  Tensor3 g{};
  g[0][0] = 2.5;
  const double nu = 0.2, th = 1.3;
  const Tensor3 s1 = stress_tensor(can, nu, th, g, 1);
  CHECK(s1[0][0] == doctest::Approx(4.0 / 3.0 * nu * can.mu(th) * 2.5).epsilon(1e-14));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i || j) CHECK(s1[i][j] == 0.0);

  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const Tensor3 gu = random_tensor(rng);
    const Tensor3 s = stress_tensor(tr, 0.7, 2.0, gu);
    double contraction = 0.0, trace = 0.0;
    for (int i = 0; i < 3; ++i) {
      trace += s[i][i];
      for (int j = 0; j < 3; ++j) {
        contraction += s[i][j] * gu[i][j];
        CHECK(s[i][j] == doctest::Approx(s[j][i]).epsilon(1e-14));
      }
    }
    CHECK(contraction >= 0.0);
    const double div = gu[0][0] + gu[1][1] + gu[2][2];
    CHECK(std::abs(trace - 3.0 * 0.7 * tr.eta(2.0) * div) < 1e-12 * (1.0 + std::abs(trace)));
    CHECK(viscous_dissipation(tr, 0.7, 2.0, gu) == doctest::Approx(contraction).epsilon(1e-12));
  }
}

TEST_CASE("heat flux") {
  const TransportModel tr = TransportModel::default_model();
  const Vec3 q0 = heat_flux(tr, 2.0, 1.0, Vec3{0, 0, 0});
  for (double v : q0) CHECK(v == 0.0);
  const Vec3 q = heat_flux(tr, 2.0, 1.0, Vec3{1, 0, 0});
  CHECK(q[0] == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(q[1] == 0.0);
  CHECK(q[2] == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0), t(0.01, 10.0);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 g{u(rng), u(rng), u(rng)};
    const Vec3 qq = heat_flux(tr, 0.3, t(rng), g);
    CHECK(-(qq[0] * g[0] + qq[1] * g[1] + qq[2] * g[2]) >= 0.0);
  }
}

TEST_CASE("hypothesis report patterns") {
  const auto z = log_grid(1e-3, 1e3, 30);
  const auto th = log_grid(0.1, 10.0, 30);
  const HypothesisReport ideal = hypothesis_report(GasModel::ideal_gas(), TransportModel::default_model(), z, th);
  CHECK(ideal.get("H2").passed);
  CHECK(ideal.get("H3").passed);
  CHECK(std::abs(ideal.h3_ratio_min - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(ideal.h3_ratio_max - 2.0 / 3.0) < 1e-12);
  CHECK(ideal.get("H6").passed);
  CHECK_FALSE(ideal.get("H7").passed);
  CHECK(ideal.get("H8").passed);
  CHECK(ideal.get("H9").passed);

  const HypothesisReport can = hypothesis_report(GasModel::ideal_gas(), TransportModel::canonical(), z, th);
  CHECK(can.get("H8").passed);
  CHECK(can.get("H9").passed);

  std::vector<double> z_small{1e-6, 1e-3, 1.0, 10.0};
  const HypothesisReport sq =
      hypothesis_report(GasModel::from_expression("square", "Z^2"), TransportModel::default_model(), z_small, th);
  const auto& h2 = sq.get("H2");
  CHECK_FALSE(h2.passed);
  REQUIRE_FALSE(h2.witnesses.empty());
  CHECK(h2.witnesses.front() == 1e-6);
}

TEST_CASE("hypothesis report is total") {
  const auto z = log_grid(1e-3, 1e3, 10);
  const auto th = log_grid(0.1, 10.0, 10);
  for (const char* expr : {"Z", "Z^2", "Z^(5/3)", "Z + Z^2/(1+Z)", "2*Z^(5/3) + Z"}) {
    const GasModel g = GasModel::from_expression("probe", expr);
    CHECK_NOTHROW((void)hypothesis_report(g, TransportModel::default_model(), z, th));
  }
}

TEST_CASE("auxiliary bounds") {
  const GasModel ideal = GasModel::ideal_gas();
  const std::vector<std::array<double, 2>> one{{1.0, 1.0}};
  CHECK(aux_bounds_check(ideal, one).energy_constant == doctest::Approx(0.75).epsilon(1e-14));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lr(std::log(1e-2), std::log(1e2));
  std::vector<std::array<double, 2>> sample;
  double brute = 1e300;
  for (int k = 0; k < 10000; ++k) {
    const double rho = std::exp(lr(rng)), th = std::exp(lr(rng));
    sample.push_back({rho, th});
    brute = std::min(brute, 1.5 * rho * th / (rho * th + std::pow(rho, 5.0 / 3.0)));
  }
  const AuxBounds b = aux_bounds_check(ideal, sample);
  CHECK(b.energy_constant > 0.0);
  CHECK(b.energy_constant == doctest::Approx(brute).epsilon(1e-12));
  CHECK(std::isfinite(b.entropy_constant));

  const std::vector<std::array<double, 2>> extreme{{1e-6, 1.0}, {1e6, 1.0}, {1.0, 1e-3}, {1.0, 1e3}};
  const AuxBounds e = aux_bounds_check(ideal, extreme);
  CHECK(std::isfinite(e.entropy_constant));
  CHECK(std::isfinite(e.energy_constant));
  CHECK(e.energy_constant > 0.0);
}

TEST_CASE("scaling params validation") {
  ScalingParams s{0.1, 0.1, 0.1, 0.0};
  CHECK_NOTHROW(s.validate(true));
  s.a = 0.0;
  CHECK_NOTHROW(s.validate(false));
  CHECK_THROWS_AS(s.validate(true), DomainError);
  s.a = -1.0;
  CHECK_THROWS_AS(s.validate(false), DomainError);
  s.a = INFINITY;
  CHECK_THROWS_AS(s.validate(false), DomainError);
}

TEST_CASE("expression parser") {
  CHECK_THROWS_AS((void)GasModel::from_expression("bad", "Z +"), ConfigError);
  CHECK_THROWS_AS((void)GasModel::from_expression("bad", "Z^Z"), ConfigError);
  const GasModel g = GasModel::from_expression("unicode", "Z \xE2\x88\x92 Z\xC3\x97Z/(1 + Z)");
  CHECK(g.P(1.0) == doctest::Approx(0.5));
  CHECK(g.dP(1.0) == doctest::Approx(1.0 - 0.75));
}
