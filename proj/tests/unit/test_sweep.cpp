#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nsflab/config.hpp"
#include "nsflab/errors.hpp"
#include "nsflab/parallel.hpp"
#include "nsflab/sweep.hpp"

using namespace nsflab;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A small sweep that runs in well under a second.
Config small_sweep(const std::string& prep = "well") {
  return Config::parse(
      "grid.dim = 1\n"
      "grid.cells = 32\n"
      "grid.bc_x = slip\n"
      "t_end = 0.2\n"
      "output.stride = 0.05\n"
      "initial.kind = acoustic\n"
      "initial.amp_rho = 0.1\n"
      "initial.amp_theta = 0.1\n"
      "initial.amp_u = 0.1\n"
      "reference.refine = 2\n"
      "sweep.prep = " +
      prep + "\n");
}

SweepManifest synthetic(const std::vector<double>& env, const std::vector<double>& e_sup) {
  SweepManifest m;
  for (std::size_t k = 0; k < env.size(); ++k) {
    SweepRun r;
    r.index = static_cast<int>(k);
    r.envelope = env[k];
    r.E_sup = e_sup[k];
    r.id = "run_" + std::to_string(k);
    m.runs.push_back(r);
  }
  return m;
}

}  // namespace

TEST_CASE("path validation examples") {
  CHECK(validate_path(0.55, 1.2, 0.1).valid);
  const PathCheck big_alpha = validate_path(0.7, 1.2, 0.1);
  CHECK_FALSE(big_alpha.valid);
  CHECK_FALSE(big_alpha.violations.empty());
  CHECK_FALSE(validate_path(0.55, 0.9, 0.1).valid);
  CHECK_FALSE(validate_path(0.55, 1.2, 0.2).valid);
  CHECK_FALSE(validate_path(0.5, 1.2, 0.1).valid);
  CHECK_FALSE(validate_path(0.55, 1.2, 0.0).valid);

  const std::vector<double> a{1e-2, 1e-3, 1e-4};
  CHECK(validate_path(0.55, 1.2, 0.1, a).valid);
  const std::vector<double> rising{1e-4, 1e-3};
  CHECK_FALSE(validate_path(0.55, 1.2, 0.1, rising).valid);
  const std::vector<double> negative{1e-2, -1e-3};
  CHECK_FALSE(validate_path(0.55, 1.2, 0.1, negative).valid);
  CHECK(ScalingPath{}.check().valid);
  CHECK(ScalingPath{}.at(2).nu == doctest::Approx(std::pow(1e-4, 0.55)).epsilon(1e-14));
}

TEST_CASE("valid exponents make every path quantity decrease") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<double> a{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
  int valid = 0;
  for (int k = 0; k < 2000; ++k) {
    const double alpha = 0.4 + 0.4 * u(rng);
    const double beta = 0.8 + 0.8 * u(rng);
    const double gamma = -0.1 + 0.4 * u(rng);
    const bool inside = beta > 1.0 && alpha > 0.5 && alpha < 2.0 / 3.0 && gamma > 0.0 &&
                        gamma < 1.0 - 1.5 * alpha;
    CHECK(validate_path(alpha, beta, gamma).valid == inside);
    if (inside) {
      ++valid;
      CHECK(validate_path(alpha, beta, gamma, a).valid);
      double prev = INFINITY;
      for (double ak : a) {
        const double e = rate_envelope({ak, std::pow(ak, alpha), std::pow(ak, beta), std::pow(ak, gamma)});
        CHECK(e < prev);
        prev = e;
      }
    }
  }
  CHECK(valid > 50);
}

TEST_CASE("manifest round trip") {
  SweepManifest m;
  m.prep = Preparation::Ill;
  m.ill_amp = 0.05;
  m.config_hash = "0123456789abcdef";
  m.grid_hash = "fedcba9876543210";
  m.reference_key = "00ff00ff00ff00ff";
  m.t_safe = 0.1 + 0.2;
  m.lifespan = "smooth through t_end";
  for (int k = 0; k < 3; ++k) {
    SweepRun r;
    r.index = k;
    r.a = m.path.a_values[k];
    r.scaling = m.path.at(k);
    r.id = "run_0" + std::to_string(k);
    r.healthy = k != 1;
    r.failure = k == 1 ? "floor activations in 3 cells" : "";
    r.steps = 100 + k;
    r.t_end = 1.0 / 3.0;
    r.E_init = 1e-17 * k;
    r.E_sup = std::sqrt(2.0) * 1e-3;
    r.envelope = rate_envelope(r.scaling);
    r.inequality_excess = 1.0 / 7.0;
    m.runs.push_back(r);
  }
  const SweepManifest back = SweepManifest::parse(m.to_text());
  CHECK(back.to_text() == m.to_text());
  CHECK(back.prep == Preparation::Ill);
  CHECK(back.t_safe == m.t_safe);
  REQUIRE(back.runs.size() == 3);
  CHECK(back.runs[1].failure == m.runs[1].failure);
  CHECK_FALSE(back.runs[1].healthy);
  CHECK(back.runs[2].E_sup == m.runs[2].E_sup);
  CHECK(back.runs[2].scaling.nu == m.runs[2].scaling.nu);
  CHECK_THROWS((void)SweepManifest::parse("not a manifest\n"));
}

TEST_CASE("rate fit on synthetic sweeps") {
  const std::vector<double> env{0.5, 0.3, 0.2};
  const RateFit two = fit_rate(synthetic(env, {1.0, 0.6, 0.4}));
  CHECK(two.constant == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(two.spread == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(two.flagged);

  const std::vector<double> wide{1e-1, 1e-3, 1e-5};
  const RateFit root = fit_rate(synthetic(wide, {std::sqrt(1e-1), std::sqrt(1e-3), std::sqrt(1e-5)}));
  CHECK(root.flagged);
  CHECK(root.spread == doctest::Approx(100.0).epsilon(1e-12));

  const RateFit zero = fit_rate(synthetic(env, {0.0, 0.0, 0.0}));
  for (double r : zero.ratios) CHECK(r == 0.0);
  CHECK(zero.spread == 1.0);
  CHECK_FALSE(zero.flagged);

  SweepManifest sick = synthetic(env, {1.0, 0.6, 0.4});
  sick.runs[1].healthy = false;
  const RateFit partial = fit_rate(sick);
  CHECK(partial.used == std::vector<int>{0, 2});
  CHECK(partial.excluded == std::vector<int>{1});
  CHECK(std::isnan(partial.ratios[1]));
  sick.runs[0].healthy = false;
  CHECK_THROWS_AS((void)fit_rate(sick), UsageError);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS((void)Config::parse("grid.cels = 4\n"), ConfigError);
  CHECK_THROWS_AS((void)Config::parse("t_end = 1\nt_end = 2\n"), ConfigError);
  CHECK_THROWS_AS((void)Config::parse("t_end =\n"), ConfigError);
  const Config c = Config::parse("# comment\nt_end = 0.5 # trailing\nsweep.a_values = 1e-2, 1e-3\n");
  CHECK(c.number("t_end", 1.0) == 0.5);
  CHECK(c.numbers("sweep.a_values", {}) == std::vector<double>{1e-2, 1e-3});
  CHECK(c.number("cfl", 0.4) == 0.4);
  CHECK_THROWS_AS((void)c.integer("t_end", 0), ConfigError);
  CHECK(Config::parse(c.canonical()).canonical() == c.canonical());

  CHECK_THROWS_AS((void)sweep_settings_from(Config::parse("scaling.a = 0.1\n")), ConfigError);
  CHECK_THROWS_AS((void)sweep_settings_from(Config::parse("sweep.prep = ill\nsweep.ill_amp = 0.7\n")),
                  ConfigError);
  CHECK_THROWS_AS((void)sweep_settings_from(Config::parse("sweep.prep = sloppy\n")), ConfigError);
  CHECK_THROWS_AS((void)gas_from_config(Config::parse("gas.name = custom\n")), ConfigError);
  for (const auto& [key, text] : config_schema()) CHECK_FALSE(text.empty());
}

TEST_CASE("sweep, rate fit and re-diagnosis") {
  const fs::path out = fs::temp_directory_path() / "nsflab_sweep_test";
  fs::remove_all(out);
  const SweepManifest m = run_sweep(small_sweep(), out);
  REQUIRE(m.runs.size() == 3);
  for (const auto& r : m.runs) {
    CHECK(r.healthy);
    CHECK(r.E_init < 1e-20);
    CHECK(fs::exists(out / r.id / "relative_energy.csv"));
    CHECK(fs::exists(out / r.id / "inequality.csv"));
    CHECK(fs::exists(out / r.id / "summary.txt"));
  }
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(fs::exists(out / "plot.dat"));
  CHECK(m.runs[0].envelope > m.runs[1].envelope);
  CHECK(m.runs[1].envelope > m.runs[2].envelope);

  // The saved manifest fits exactly like the returned one.
  const SweepManifest loaded = SweepManifest::load(out / "manifest.txt");
  CHECK(fit_rate(loaded).to_text() == fit_rate(m).to_text());

  // Re-diagnosis from stored snapshots reproduces the files byte for byte.
  std::vector<std::string> before;
  for (const auto& r : m.runs)
    for (const char* f : {"relative_energy.csv", "inequality.csv", "summary.txt"}) before.push_back(read_file(out / r.id / f));
  rediagnose_sweep(out);
  std::size_t k = 0;
  for (const auto& r : m.runs)
    for (const char* f : {"relative_energy.csv", "inequality.csv", "summary.txt"}) CHECK(read_file(out / r.id / f) == before[k++]);

  // A second run reuses the cached reference and reproduces sweep.csv.
  const std::string csv = read_file(out / "sweep.csv");
  const fs::path again = fs::temp_directory_path() / "nsflab_sweep_test_again";
  fs::remove_all(again);
  fs::create_directories(again);
  fs::copy(out / "cache", again / "cache", fs::copy_options::recursive);
  (void)run_sweep(small_sweep(), again);
  CHECK(read_file(again / "sweep.csv") == csv);
  fs::remove_all(again);
  fs::remove_all(out);
}

TEST_CASE("sweep outputs do not depend on the thread count") {
  const int saved = thread_count();
  std::vector<std::string> csv;
  for (int threads : {1, 3}) {
    set_thread_count(threads);
    const fs::path out = fs::temp_directory_path() / ("nsflab_sweep_threads_" + std::to_string(threads));
    fs::remove_all(out);
    const SweepManifest m = run_sweep(small_sweep("ill"), out);
    std::string all = read_file(out / "sweep.csv");
    for (const auto& r : m.runs) all += read_file(out / r.id / "inequality.csv") + read_file(out / r.id / "relative_energy.csv");
    csv.push_back(all);
    fs::remove_all(out);
  }
  set_thread_count(saved);
  CHECK(csv[0] == csv[1]);
}
