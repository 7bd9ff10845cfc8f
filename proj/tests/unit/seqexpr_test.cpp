#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "gwve/errors.hpp"
#include "gwve/seqexpr.hpp"

using gwve::EvalError;
using gwve::ParseError;
using gwve::SeqExpr;

TEST(SeqExpr, EvaluatesRatio) { EXPECT_DOUBLE_EQ(SeqExpr::parse("n/(n-1)").eval(3), 1.5); }

TEST(SeqExpr, ExpSqrtRatioAtOne) {
  EXPECT_NEAR(SeqExpr::parse("exp(-sqrt(n))/exp(-sqrt(n-1))").eval(1), std::exp(-1.0), 1e-15);
}

TEST(SeqExpr, SyntaxErrorOffset) {
  try {
    SeqExpr::parse("n+*2");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 2u);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(SeqExpr, PowerAndDivision) {
  EXPECT_DOUBLE_EQ(SeqExpr::parse("1/(2*n^0.5)").eval(4), 0.25);
  EXPECT_NEAR(SeqExpr::parse("exp(sqrt(n))").eval(9), std::exp(3.0), 1e-12);
}

TEST(SeqExpr, DivisionByZeroIsDomainError) {
  const SeqExpr e = SeqExpr::parse("n/(n-1)");
  try {
    e.eval(1);
    FAIL() << "expected EvalError";
  } catch (const EvalError& err) {
    EXPECT_EQ(err.kind(), EvalError::Kind::Domain);
  }
}

TEST(SeqExpr, OverflowIsReported) {
  try {
    SeqExpr::parse("exp(n)").eval(1000);
    FAIL() << "expected EvalError";
  } catch (const EvalError& err) {
    EXPECT_EQ(err.kind(), EvalError::Kind::Overflow);
  }
}

TEST(SeqExpr, LogOfNegativeIsDomainError) {
  EXPECT_THROW(SeqExpr::parse("log(1-n)").eval(2), EvalError);
  EXPECT_THROW(SeqExpr::parse("sqrt(-n)").eval(1), EvalError);
}

TEST(SeqExpr, UnaryMinusBindsLooserThanPower) {
  EXPECT_DOUBLE_EQ(SeqExpr::parse("-n^2").eval(3), -9.0);
  EXPECT_DOUBLE_EQ(SeqExpr::parse("2^-1").eval(1), 0.5);
  EXPECT_DOUBLE_EQ(SeqExpr::parse("2^3^2").eval(1), 512.0);
}

TEST(SeqExpr, PowCallAndScientificNumbers) {
  EXPECT_DOUBLE_EQ(SeqExpr::parse("pow(n, 2) + 1.5e1").eval(3), 24.0);
  EXPECT_DOUBLE_EQ(SeqExpr::parse(".5*n").eval(4), 2.0);
}

TEST(SeqExpr, RejectsTrailingInput) {
  EXPECT_THROW(SeqExpr::parse("n n"), ParseError);
  EXPECT_THROW(SeqExpr::parse(""), ParseError);
  EXPECT_THROW(SeqExpr::parse("foo(n)"), ParseError);
  EXPECT_THROW(SeqExpr::parse("(n"), ParseError);
}

namespace {

// Random well-formed expression over n, small enough to stay finite.
std::string random_expr(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 1);
  std::uniform_real_distribution<double> value(0.1, 5.0);
  switch (pick(rng)) {
    case 0:
      return std::to_string(value(rng));
    case 1:
      return "n";
    case 2:
      return "(" + random_expr(rng, depth - 1) + "+" + random_expr(rng, depth - 1) + ")";
    case 3:
      return random_expr(rng, depth - 1) + "-" + random_expr(rng, depth - 1);
    case 4:
      return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
    case 5:
      return "(" + random_expr(rng, depth - 1) + ")/(n+" + std::to_string(value(rng)) + ")";
    case 6:
      return "-" + random_expr(rng, depth - 1);
    case 7:
      return "sqrt(n+" + random_expr(rng, 0) + ")";
    case 8:
      return "exp(-" + random_expr(rng, 0) + ")";
    default:
      return "(" + random_expr(rng, depth - 1) + ")^2";
  }
}

}  // namespace

TEST(SeqExprProperty, PrintParseRoundTripIsBitExact) {
  std::mt19937_64 rng(20240611);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string text = random_expr(rng, 4);
    const SeqExpr e = SeqExpr::parse(text);
    const SeqExpr back = SeqExpr::parse(e.to_string());
    EXPECT_TRUE(back == e) << text << " -> " << e.to_string();
    for (int n = 1; n <= 5; ++n) {
      double a = 0.0;
      try {
        a = e.eval(n);
      } catch (const EvalError&) {
        EXPECT_THROW(back.eval(n), EvalError);
        continue;
      }
      const double b = back.eval(n);
      EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0) << text << " at n=" << n;
      ++checked;
    }
  }
  EXPECT_GT(checked, 5000);
}

TEST(SeqExprProperty, MultiplicationBindsTighterThanAddition) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> value(-100.0, 100.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string a = std::to_string(value(rng));
    const std::string b = std::to_string(value(rng));
    const std::string c = std::to_string(value(rng));
    const double lhs = SeqExpr::parse(a + "+" + b + "*" + c).eval(1);
    const double rhs = SeqExpr::parse(a + "+(" + b + "*" + c + ")").eval(1);
    EXPECT_EQ(lhs, rhs);
  }
}
