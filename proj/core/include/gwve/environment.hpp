#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gwve/seqexpr.hpp"

namespace gwve {

using cplx = std::complex<double>;

/// First three factorial moments f'(1), f''(1), f'''(1) of an offspring law.
struct FactorialMoments {
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
};

/// One generation's reproduction law. Immutable value type.
///
/// Four shapes are supported:
///   - explicit pmf on {0, ..., K} (mass within 1e-12 of one),
///   - Poisson(lambda),
///   - linear fractional: q[0] = 1 - a, q[k] = a p (1-p)^(k-1) for k >= 1,
///   - symmetric perturbation of delta_1: q[0] = q[2] = delta/2, q[1] = 1 - delta.
class OffspringLaw {
 public:
  enum class Kind { ExplicitPmf, Poisson, LinearFractional, Symmetric };

  static OffspringLaw explicit_pmf(std::vector<double> probs);
  static OffspringLaw poisson(double lambda);
  static OffspringLaw linear_fractional(double a, double p);
  static OffspringLaw symmetric(double delta);

  Kind kind() const noexcept { return kind_; }
  std::string describe() const;

  FactorialMoments moments() const;
  double mean() const;

  /// f(s) for |s| <= 1 (+1e-12).
  cplx pgf(cplx s) const;
  double pgf(double s) const;

  /// g(u) = 1 - f(1 - u), evaluated without cancellation for small u.
  cplx complement(cplx u) const;
  double complement(double u) const;
  /// In-place u <- g(u) over a batch of points.
  void apply_complement(std::span<cplx> u) const;

  double pmf(std::int64_t k) const;
  std::vector<double> pmf_prefix(std::size_t count) const;

  double lambda() const noexcept { return x_; }
  double a() const noexcept { return x_; }
  double p() const noexcept { return y_; }
  double delta() const noexcept { return x_; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  bool operator==(const OffspringLaw& other) const;

 private:
  OffspringLaw() = default;

  Kind kind_ = Kind::ExplicitPmf;
  double x_ = 0.0;
  double y_ = 0.0;
  std::vector<double> probs_;
  // tails_[i] = sum_{k > i} probs_[k]; drives the cancellation-free complement.
  std::vector<double> tails_;
};

/// A real sequence n -> value for n >= 1: a constant, a closed-form
/// expression, or a finite list of leading values followed by an expression.
class ParamSeq {
 public:
  ParamSeq(double value);  // NOLINT(google-explicit-constructor)
  ParamSeq(SeqExpr expr);  // NOLINT(google-explicit-constructor)
  ParamSeq(std::vector<double> initial, std::optional<SeqExpr> rest);

  static ParamSeq parse(std::string_view text) { return ParamSeq(SeqExpr::parse(text)); }

  double at(std::int64_t n) const;
  std::string to_string() const;

 private:
  std::vector<double> initial_;
  std::optional<SeqExpr> rest_;
};

enum class Family { Poisson, LinearFractional, Symmetric, ConstantPmf, List, Custom };
enum class Extension { Error, Cycle, HoldLast };

std::string to_string(Family family);

/// An environment Q = {q_n : n >= 1} with a declared horizon. The generator
/// is pure; law(n) returns identical values on repeated calls.
class Environment {
 public:
  using Generator = std::function<OffspringLaw(int)>;

  Environment(std::string name, Family family, Generator generator, int horizon);

  static Environment constant(OffspringLaw law, int horizon, std::string name = "constant");
  static Environment poisson(ParamSeq lambda, int horizon, std::string name = "poisson");
  static Environment linear_fractional(ParamSeq a, ParamSeq p, int horizon,
                                       std::string name = "linear_fractional");
  static Environment symmetric(ParamSeq delta, int horizon, std::string name = "symmetric");
  static Environment list(std::vector<OffspringLaw> laws, Extension extension, int horizon,
                          std::string name = "list");

  /// Law of generation n, 1 <= n <= horizon. Throws ValidationError outside
  /// the horizon or when the generator produces an invalid law.
  OffspringLaw law(int n) const;
  /// Laws q_1..q_n materialized in order (index 0 holds q_1).
  std::vector<OffspringLaw> laws(int n) const;

  int horizon() const noexcept { return horizon_; }
  Family family() const noexcept { return family_; }
  const std::string& name() const noexcept { return name_; }

  /// True when every generation up to the horizon is linear fractional.
  bool all_linear_fractional() const;

  Environment with_horizon(int horizon) const;

 private:
  std::string name_;
  Family family_;
  Generator generator_;
  int horizon_;
};

/// Environments used throughout the examples and the acceptance suite.
namespace builtin {
/// q_n[0] = q_n[2] = 1/(2 n^a), q_n[1] = 1 - 1/n^a.
Environment symmetric(double a, int horizon);
/// Poisson with lambda_1 = 1, lambda_n = n/(n-1); mu_n = n.
Environment poisson_increasing(int horizon);
/// Poisson with lambda_n = exp(-sqrt(n))/exp(-sqrt(n-1)); mu_n = exp(-sqrt(n)).
Environment poisson_sqrt_decay(int horizon);
Environment linear_fractional_constant(double a, double p, int horizon);
/// Linear fractional with p_n = 1/2, a_n = 1/2 + (-1)^n / (2 (n+1)^2).
Environment linear_fractional_alternating(int horizon);
/// Constant binary law {0: 1/4, 1: 1/2, 2: 1/4}.
Environment binary_pmf(int horizon);
/// Every individual has exactly one child.
Environment delta_one(int horizon);

/// Lookup by name: "symmetric-a0.5", "symmetric-a1", "poisson-increasing",
/// "poisson-sqrt-decay", "lf-critical", "lf-alternating", "binary", "delta1".
Environment by_name(const std::string& name, int horizon);
std::vector<std::string> names();
}  // namespace builtin

struct StarStarReport {
  double c = 0.0;
  std::vector<bool> holds;        // per n = 1..horizon
  std::vector<double> minimal_c;  // f'''/(f''(1+f')), 0 when f'' = f''' = 0
  double sup_minimal_c = 0.0;     // +inf when some f'' = 0 < f'''
  bool all_hold() const;
};

/// Checks f_n'''(1) <= c f_n''(1) (1 + f_n'(1)) for n = 1..horizon.
StarStarReport check_starstar(const Environment& env, int horizon, double c);

struct CriticalityReport {
  int horizon = 0;
  std::vector<double> mu;      // mu_1..mu_N
  std::vector<double> rho;     // rho_{0,1}..rho_{0,N}
  std::vector<double> mu_rho;  // mu_n rho_{0,n}
  StarStarReport starstar;
  double trend_epsilon = 0.05;
  bool rho_increasing_unbounded = false;
  bool mu_rho_increasing_unbounded = false;
  double f1_min = 0.0;
  double f1_max = 0.0;
  double f2_min = 0.0;

  bool critical_evidence() const {
    return rho_increasing_unbounded && mu_rho_increasing_unbounded;
  }
  /// Always "finite-horizon evidence", never a proof of criticality.
  std::string label() const;
};

/// Fills the moment ledger over the horizon and applies the trend heuristics
/// x_N > x_ceil(N/2) (1 + eps) to rho and mu*rho. Requires horizon >= 3.
/// Without an explicit c the third-moment check uses the smallest feasible
/// constant over the horizon as its witness.
CriticalityReport classify(const Environment& env, int horizon, double trend_epsilon = 0.05,
                           std::optional<double> starstar_c = std::nullopt);

}  // namespace gwve
