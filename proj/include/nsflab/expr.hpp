#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace nsflab {

/// Value together with its first derivative in the single variable Z.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

/// A parsed scalar function of one variable Z.
///
/// Grammar (whitespace ignored):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := ('+' | '-') unary | power
///   power   := primary ('^' unary)?           right associative
///   primary := number | 'Z' | '(' expr ')'
/// The UTF-8 operators U+2212, U+00D7 and U+00F7 are accepted for '-', '*'
/// and '/'. Exponents must be constant (free of Z); rational exponents are
/// written as quotients, e.g. Z^(5/3).
class Expression {
 public:
  /// Throws ConfigError with the offending column on malformed input.
  static Expression parse(std::string_view text);

  [[nodiscard]] double operator()(double z) const { return eval(z).v; }
  [[nodiscard]] double derivative(double z) const { return eval(z).d; }
  [[nodiscard]] Dual eval(double z) const;
  [[nodiscard]] const std::string& source() const noexcept { return source_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace nsflab
