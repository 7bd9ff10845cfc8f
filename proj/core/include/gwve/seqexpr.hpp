#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace gwve {

// Closed-form real sequences in the generation index n.
//
// Grammar (whitespace ignored between tokens):
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = "-" unary | power ;
//   power   = primary [ "^" unary ] ;          (right associative)
//   primary = number | "n" | call | "(" expr ")" ;
//   call    = ("sqrt" | "exp" | "log") "(" expr ")"
//           | "pow" "(" expr "," expr ")" ;
//   number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//           | "." digits [ exponent ] ;
//
// "^" binds tighter than unary minus, so "-n^2" is -(n^2) while "2^-1" is
// 2^(-1). Evaluation is binary64; domain violations and overflow raise
// EvalError instead of producing NaN or infinity.
class SeqExpr {
 public:
  enum class Op { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Sqrt, Exp, Log, PowCall };

  struct Node {
    Op op;
    double value = 0.0;
    std::vector<std::shared_ptr<const Node>> args;
  };

  static SeqExpr parse(std::string_view text);
  static SeqExpr constant(double value);

  /// Throws EvalError on domain violations or overflow.
  double eval(std::int64_t n) const;

  /// Minimal-parenthesis rendering; parse(to_string()) reproduces the tree.
  std::string to_string() const;

  bool operator==(const SeqExpr& other) const;

  const Node& root() const { return *root_; }

 private:
  explicit SeqExpr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
  std::shared_ptr<const Node> root_;
};

}  // namespace gwve
