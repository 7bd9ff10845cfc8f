#include "gwve/seqexpr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "gwve/errors.hpp"

namespace gwve {

ParseError::ParseError(std::size_t offset, std::vector<std::string> expected,
                       const std::string& what)
    : ValidationError(what), offset_(offset), expected_(std::move(expected)) {}

namespace {

using NodePtr = std::shared_ptr<const SeqExpr::Node>;
using Op = SeqExpr::Op;

NodePtr make(Op op, std::vector<NodePtr> args = {}, double value = 0.0) {
  auto node = std::make_shared<SeqExpr::Node>();
  node->op = op;
  node->value = value;
  node->args = std::move(args);
  return node;
}

const std::vector<std::string>& operand_start() {
  static const std::vector<std::string> tokens{"number", "n", "(", "-", "sqrt", "exp", "log",
                                               "pow"};
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail({"+", "-", "*", "/", "^", "end of input"});
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail({std::string(1, c)});
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::ostringstream msg;
    msg << "syntax error at offset " << pos_ << ": expected one of {";
    for (std::size_t i = 0; i < expected.size(); ++i) msg << (i ? ", " : "") << expected[i];
    msg << "}";
    if (pos_ < text_.size()) {
      msg << ", found '" << text_[pos_] << "'";
    } else {
      msg << ", found end of input";
    }
    throw ParseError(pos_, std::move(expected), msg.str());
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = make(Op::Add, {lhs, term()});
      } else if (accept('-')) {
        lhs = make(Op::Sub, {lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::Mul, {lhs, unary()});
      } else if (accept('/')) {
        lhs = make(Op::Div, {lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, {unary()});
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::Pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail(operand_start());
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    if (accept('(')) {
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    fail(operand_start());
  }

  NodePtr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t count = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++count;
      }
      return count;
    };
    std::size_t mantissa = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail({"digit"});
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail({"exponent digit"});
    }
    double value = 0.0;
    const char* first = text_.data() + start;
    const char* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
      throw ParseError(start, {"finite number"},
                       "numeric literal out of range at offset " + std::to_string(start));
    }
    return make(Op::Number, {}, value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "n") return make(Op::Var);
    Op op;
    if (name == "sqrt") {
      op = Op::Sqrt;
    } else if (name == "exp") {
      op = Op::Exp;
    } else if (name == "log") {
      op = Op::Log;
    } else if (name == "pow") {
      op = Op::PowCall;
    } else {
      throw ParseError(start, {"n", "sqrt", "exp", "log", "pow"},
                       "unknown identifier '" + std::string(name) + "' at offset " +
                           std::to_string(start));
    }
    expect('(');
    std::vector<NodePtr> args{expr()};
    if (op == Op::PowCall) {
      expect(',');
      args.push_back(expr());
    }
    expect(')');
    return make(op, std::move(args));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

[[noreturn]] void domain(const std::string& what) {
  throw EvalError(EvalError::Kind::Domain, "domain error: " + what);
}

double checked(double value, const char* what) {
  if (std::isnan(value)) domain(what);
  if (std::isinf(value)) {
    throw EvalError(EvalError::Kind::Overflow, std::string("overflow in ") + what);
  }
  return value;
}

double power(double base, double exponent) {
  if (base > 0.0) return checked(std::pow(base, exponent), "power");
  if (base == 0.0) {
    if (exponent < 0.0) domain("zero raised to a negative power (division by zero)");
    return exponent == 0.0 ? 1.0 : 0.0;
  }
  if (std::trunc(exponent) != exponent) domain("negative base with non-integer exponent");
  return checked(std::pow(base, exponent), "power");
}

double evaluate(const SeqExpr::Node& node, double n) {
  auto arg = [&](std::size_t i) { return evaluate(*node.args[i], n); };
  switch (node.op) {
    case Op::Number:
      return node.value;
    case Op::Var:
      return n;
    case Op::Neg:
      return -arg(0);
    case Op::Add:
      return checked(arg(0) + arg(1), "addition");
    case Op::Sub:
      return checked(arg(0) - arg(1), "subtraction");
    case Op::Mul:
      return checked(arg(0) * arg(1), "multiplication");
    case Op::Div: {
      const double num = arg(0);
      const double den = arg(1);
      if (den == 0.0) domain("division by zero");
      return checked(num / den, "division");
    }
    case Op::Pow:
    case Op::PowCall:
      return power(arg(0), arg(1));
    case Op::Sqrt: {
      const double x = arg(0);
      if (x < 0.0) domain("sqrt of a negative number");
      return std::sqrt(x);
    }
    case Op::Exp:
      return checked(std::exp(arg(0)), "exp");
    case Op::Log: {
      const double x = arg(0);
      if (x <= 0.0) domain("log of a nonpositive number");
      return std::log(x);
    }
  }
  domain("unknown node");
}

// Precedence levels used by the printer.
int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
      return 1;
    case Op::Mul:
    case Op::Div:
      return 2;
    case Op::Neg:
      return 3;
    case Op::Pow:
      return 4;
    default:
      return 5;
  }
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string render(const SeqExpr::Node& node);

std::string wrap(const SeqExpr::Node& node, bool parens) {
  std::string inner = render(node);
  return parens ? "(" + inner + ")" : inner;
}

std::string render(const SeqExpr::Node& node) {
  const int prec = precedence(node.op);
  switch (node.op) {
    case Op::Number:
      return format_number(node.value);
    case Op::Var:
      return "n";
    case Op::Neg:
      return "-" + wrap(*node.args[0], precedence(node.args[0]->op) < prec);
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      static constexpr std::array<char, 4> symbols{'+', '-', '*', '/'};
      const char sym = symbols[static_cast<int>(node.op) - static_cast<int>(Op::Add)];
      return wrap(*node.args[0], precedence(node.args[0]->op) < prec) + sym +
             wrap(*node.args[1], precedence(node.args[1]->op) <= prec);
    }
    case Op::Pow:
      return wrap(*node.args[0], precedence(node.args[0]->op) <= prec) + "^" +
             wrap(*node.args[1], precedence(node.args[1]->op) < precedence(Op::Neg));
    case Op::Sqrt:
      return "sqrt(" + render(*node.args[0]) + ")";
    case Op::Exp:
      return "exp(" + render(*node.args[0]) + ")";
    case Op::Log:
      return "log(" + render(*node.args[0]) + ")";
    case Op::PowCall:
      return "pow(" + render(*node.args[0]) + "," + render(*node.args[1]) + ")";
  }
  return {};
}

bool same_tree(const SeqExpr::Node& a, const SeqExpr::Node& b) {
  if (a.op != b.op || a.args.size() != b.args.size()) return false;
  if (a.op == Op::Number && a.value != b.value) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!same_tree(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

}  // namespace

SeqExpr SeqExpr::parse(std::string_view text) { return SeqExpr(Parser(text).parse_all()); }

SeqExpr SeqExpr::constant(double value) {
  if (!std::isfinite(value)) throw ValidationError("constant sequence value must be finite");
  if (std::signbit(value)) return SeqExpr(make(Op::Neg, {make(Op::Number, {}, -value)}));
  return SeqExpr(make(Op::Number, {}, value));
}

double SeqExpr::eval(std::int64_t n) const { return evaluate(*root_, static_cast<double>(n)); }

std::string SeqExpr::to_string() const { return render(*root_); }

bool SeqExpr::operator==(const SeqExpr& other) const { return same_tree(*root_, *other.root_); }

}  // namespace gwve
