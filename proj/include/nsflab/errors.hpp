#pragma once

#include <stdexcept>
#include <string>

namespace nsflab {

/// Argument outside the domain of a closure (non-finite, theta <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative or adaptive numerical procedure did not reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  [[nodiscard]] double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A constitutive model broke one of the structural hypotheses it must satisfy.
class ModelViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse: mismatched grids, unfilled ghosts, extrapolation requests.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed or unknown configuration entries.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Density or internal energy left the admissible set during a run.
class PositivityError : public std::runtime_error {
 public:
  PositivityError(const std::string& what, int cell_i, int cell_j, double time)
      : std::runtime_error(what), i_(cell_i), j_(cell_j), t_(time) {}
  [[nodiscard]] int cell_i() const noexcept { return i_; }
  [[nodiscard]] int cell_j() const noexcept { return j_; }
  [[nodiscard]] double time() const noexcept { return t_; }

 private:
  int i_;
  int j_;
  double t_;
};

}  // namespace nsflab
