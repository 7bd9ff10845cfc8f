#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gwve/bounds.hpp"
#include "gwve/environment.hpp"

namespace gwve {

enum class Provenance { Dft, Convolution, ClosedForm, Empirical, Transform };

std::string to_string(Provenance provenance);

/// Law on {0, 1, ...} stored as P[X = k] for k < K plus bounds on what lies
/// at or beyond K. The stored law is probs with the residual 1 - sum(probs)
/// lumped at K.
struct TruncatedPmf {
  std::vector<double> probs;
  double tail_mass = 0.0;    // >= P[X >= K]
  double tail_moment = 0.0;  // >= E[X; X >= K], +inf when unknown
  double transport = 0.0;    // >= W1(stored law, true law)
  Provenance provenance = Provenance::Transform;
  double max_clip = 0.0;  // largest negative round-off clipped to zero

  std::size_t truncation() const noexcept { return probs.size(); }
  double mass() const;
  /// Sum k p[k] over the stored prefix.
  double prefix_mean() const;
  /// Sum k (k-1) p[k] over the stored prefix.
  double prefix_second_factorial() const;
  /// max(0, 1 - sum probs), the mass the stored law places at K.
  double residual() const;
  /// Mean of the stored law.
  double stored_mean() const;

  static TruncatedPmf point_mass(std::size_t k);
  static TruncatedPmf from_probs(std::vector<double> probs, Provenance provenance = Provenance::Transform);

  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

/// f_{m+1}( ... f_n(s)), with f_{n,n}(s) = s.
cplx compose_pgf(const Environment& env, int m, int n, cplx s);
double compose_pgf(const Environment& env, int m, int n, double s);

/// 1 - f_{m,n}(1 - u), composed in complement space so that tiny results
/// keep full relative precision.
cplx compose_complement(const Environment& env, int m, int n, cplx u);
double compose_complement(const Environment& env, int m, int n, double u);

/// P[Z_{n-j} > 0] under the shifted environment Q_j, i.e. 1 - f_{j,n}(0).
/// Evaluated as compose_complement(env, j, n, 1), exactly 1 when j = n.
double survival_prob(const Environment& env, int j, int n);
/// survival_prob(env, 0, n) for n = 0..horizon with the laws materialized once.
std::vector<double> survival_curve(const Environment& env, int horizon);

enum class LawMethod { Auto, Dft, Convolution, ClosedForm };

struct LawOptions {
  LawMethod method = LawMethod::Auto;
  // Fixed truncation; chosen from b_n when absent. Must be a power of two for the DFT.
  std::optional<std::size_t> truncation;
  double tolerance = 1e-8;
  // Upper limit for the automatic doubling.
  std::size_t max_truncation = std::size_t{1} << 22;
};

/// Law of Z_n. DFT and closed form go through the conditional law; the
/// convolution path composes truncated power series generation by generation.
/// Throws TruncationError when tail_mass exceeds options.tolerance.
TruncatedPmf law_of_zn(const Environment& env, int n, const LawOptions& options = {});

struct ConditionalLaw {
  TruncatedPmf y;  // P[Y_n = k], probs[0] = 0
  double b = 1.0;  // mu_n / P[Z_n > 0]
  double survival = 1.0;
};

/// Law of Z_n given Z_n > 0. b_n uses the exact ledger mean and survival_prob.
/// Throws DomainError when the survival probability is below 1e-300.
ConditionalLaw conditional_law(const Environment& env, int n, const LawOptions& options = {});

/// Fills track.b[0..N] from survival_prob.
void fill_b(MomentTrack& track, const Environment& env);

/// k p[k] / m with m = sum k p[k] over the stored prefix.
TruncatedPmf size_biased_law(const TruncatedPmf& pmf);

/// CDF of U * (size-biased X) for the stored law, piecewise linear with
/// integer knots. Precomputes the running integral of P[X > t].
class EquilibriumCdf {
 public:
  explicit EquilibriumCdf(const TruncatedPmf& pmf);
  double operator()(double x) const;
  double mean() const noexcept { return mean_; }

 private:
  std::vector<double> survival_;  // P[X > k], k = 0..K-1
  std::vector<double> integral_;  // int_0^k P[X > t] dt, k = 0..K
  double mean_ = 0.0;
};

double equilibrium_cdf(const TruncatedPmf& pmf, double x);

/// f'(1) u - (1 - f(1 - u)) >= 0, evaluated without cancellation.
double linearization_gap(const OffspringLaw& law, double u);

inline constexpr double kShapeThreshold = 1e-7;

/// phi(s) = 1/(1 - f(s)) - 1/(f'(1)(1 - s)); the limit f''(1)/(2 f'(1)^2)
/// once 1 - s < kShapeThreshold.
double shape_function(const OffspringLaw& law, double s);
/// Same function with its argument given as u = 1 - s.
double shape_function_at_complement(const OffspringLaw& law, double u);

/// mu_k sum_{l=k+1}^{n} phi_l(f_{l,n}(s)) / mu_{l-1}.
double composed_shape(const Environment& env, int k, int n, double s);
/// 1/(1 - f_{k,n}(s)) - mu_k / (mu_n (1 - s)).
double composed_shape_direct(const Environment& env, int k, int n, double s);

}  // namespace gwve
