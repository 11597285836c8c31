#include "nsflab/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "nsflab/errors.hpp"

namespace nsflab {

struct Expression::Node {
  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg };
  Kind kind = Kind::Constant;
  double value = 0.0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
  bool has_variable = false;
};

namespace {

using Node = Expression::Node;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make_binary(Node::Kind kind, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->has_variable = lhs->has_variable || rhs->has_variable;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

std::string normalize(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    const auto rest = in.substr(k);
    if (rest.starts_with("\xE2\x88\x92")) {  // minus sign
      out += '-';
      k += 2;
    } else if (rest.starts_with("\xC3\x97")) {  // multiplication sign
      out += '*';
      k += 1;
    } else if (rest.starts_with("\xC3\xB7")) {  // division sign
      out += '/';
      k += 1;
    } else {
      out += in[k];
    }
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto root = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression '" + std::string(text_) + "': " + msg + " at column " +
                      std::to_string(pos_ + 1));
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Node::Kind::Add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(Node::Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Node::Kind::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = make_binary(Node::Kind::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Neg;
      n->lhs = unary();
      n->has_variable = n->lhs->has_variable;
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) {
      auto exponent = unary();
      if (exponent->has_variable) fail("exponent must not depend on Z");
      return make_binary(Node::Kind::Pow, base, exponent);
    }
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (c == 'Z' || c == 'z') {
      ++pos_;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Variable;
      n->has_variable = true;
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t end = pos_;
      while (end < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
              text_[end] == 'e' || text_[end] == 'E' ||
              ((text_[end] == '-' || text_[end] == '+') && end > pos_ &&
               (text_[end - 1] == 'e' || text_[end - 1] == 'E')))) {
        ++end;
      }
      double v = 0.0;
      const auto res = std::from_chars(text_.data() + pos_, text_.data() + end, v);
      if (res.ec != std::errc() || res.ptr != text_.data() + end) fail("malformed number");
      pos_ = end;
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::Constant;
      n->value = v;
      return n;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

Dual eval_node(const Node& n, double z) {
  switch (n.kind) {
    case Node::Kind::Constant:
      return {n.value, 0.0};
    case Node::Kind::Variable:
      return {z, 1.0};
    case Node::Kind::Neg: {
      const Dual a = eval_node(*n.lhs, z);
      return {-a.v, -a.d};
    }
    case Node::Kind::Add: {
      const Dual a = eval_node(*n.lhs, z);
      const Dual b = eval_node(*n.rhs, z);
      return {a.v + b.v, a.d + b.d};
    }
    case Node::Kind::Sub: {
      const Dual a = eval_node(*n.lhs, z);
      const Dual b = eval_node(*n.rhs, z);
      return {a.v - b.v, a.d - b.d};
    }
    case Node::Kind::Mul: {
      const Dual a = eval_node(*n.lhs, z);
      const Dual b = eval_node(*n.rhs, z);
      return {a.v * b.v, a.d * b.v + a.v * b.d};
    }
    case Node::Kind::Div: {
      const Dual a = eval_node(*n.lhs, z);
      const Dual b = eval_node(*n.rhs, z);
      return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
    }
    case Node::Kind::Pow: {
      const Dual a = eval_node(*n.lhs, z);
      const double c = eval_node(*n.rhs, z).v;
      if (c == 0.0) return {1.0, 0.0};
      // d(a^c) = c a^(c-1) da; written to stay finite at a = 0 for c >= 1
      const double deriv = (a.d == 0.0) ? 0.0 : c * std::pow(a.v, c - 1.0) * a.d;
      return {std::pow(a.v, c), deriv};
    }
  }
  return {};
}

}  // namespace

Expression Expression::parse(std::string_view text) {
  const std::string norm = normalize(text);
  Expression e;
  e.root_ = Parser(norm).parse();
  e.source_ = std::string(text);
  return e;
}

Dual Expression::eval(double z) const {
  if (!root_) throw UsageError("evaluating an empty expression");
  return eval_node(*root_, z);
}

}  // namespace nsflab
