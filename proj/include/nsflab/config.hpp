#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nsflab/euler_reference.hpp"
#include "nsflab/nsf_solver.hpp"
#include "nsflab/relative_energy.hpp"
#include "nsflab/thermo.hpp"

namespace nsflab {

/// Flat "key = value" configuration. Lines starting with '#' and blank lines
/// are ignored; a '#' after a value starts a comment. Every key must belong to
/// the known schema and may appear once.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<config>");
  static Config load(const std::filesystem::path& path);

  [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }
  [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double number(const std::string& key, double fallback) const;
  [[nodiscard]] long integer(const std::string& key, long fallback) const;
  [[nodiscard]] bool flag(const std::string& key, bool fallback) const;
  /// Comma-separated list of numbers.
  [[nodiscard]] std::vector<double> numbers(const std::string& key,
                                            const std::vector<double>& fallback) const;
  void set(const std::string& key, const std::string& value);

  /// Canonical "key = value" lines in key order.
  [[nodiscard]] std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Every accepted key with a one-line description.
[[nodiscard]] const std::map<std::string, std::string>& config_schema();

[[nodiscard]] GasModel gas_from_config(const Config& c);
[[nodiscard]] TransportModel transport_from_config(const Config& c);
[[nodiscard]] ScalingParams scaling_from_config(const Config& c);
[[nodiscard]] Grid grid_from_config(const Config& c, int ghosts = 2);
[[nodiscard]] NsfRunConfig nsf_config_from(const Config& c);
/// Reference settings on the grid refined by reference.refine.
[[nodiscard]] EulerRunConfig euler_config_from(const Config& c);
[[nodiscard]] InitialData initial_from_config(const Config& c, const Grid& grid);
[[nodiscard]] StateBox box_from_config(const Config& c);

}  // namespace nsflab
