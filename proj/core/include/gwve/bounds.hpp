#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include "gwve/environment.hpp"

namespace gwve {

/// Moment ledger over generations 0..N. Every vector has N+1 entries and is
/// indexed by generation; entry 0 of nu, f1, f2, f3 is unused (zero).
struct MomentTrack {
  int horizon = 0;
  std::vector<double> mu;      // mu[0] = 1, mu[n] = f_1'(1)...f_n'(1)
  std::vector<double> log_mu;  // log mu[n], always finite
  std::vector<double> nu;      // f_n''(1) / f_n'(1)^2
  std::vector<double> rho;     // rho_{0,n}, rho[0] = 0
  std::vector<double> log_rho; // log rho_{0,n}, finite where rho overflows
  std::vector<double> mmax;    // sup_{k<=n} f_k'(1), mmax[0] = 0
  std::vector<double> f1, f2, f3;
  // nu_n / mu_{n-1}, the increments of rho.
  std::vector<double> drho;
  // b_n = mu_n / P[Z_n > 0]; empty until fill_b (exact.hpp) is called.
  std::vector<double> b;
  // Set when some mu_n left [1e-300, 1e300]; mu[n] is then exp(log_mu[n]) and
  // may have under- or overflowed, so use inv_mu / mu_rho instead.
  bool log_scaled = false;

  double inv_mu(int n) const;
  double mu_rho(int n) const;
  double log_mu_rho(int n) const;
};

MomentTrack moment_sequences(const Environment& env, int horizon);

/// r_n by direct O(n) summation with rho_{0,n} - rho_{0,j} accumulated from
/// the increments. Requires n >= 2.
double rn(const MomentTrack& track, int n);
/// r_2..r_N; entry n of the result holds r_n, entries 0 and 1 are NaN.
std::vector<double> rn_batch(const MomentTrack& track, int horizon);

/// s_n summed literally, including negative log factors. Zero for n < 3.
double sn(const MomentTrack& track, int n);
/// s_0..s_N by the incremental update s_{n+1} = s_n + term_n.
std::vector<double> sn_batch(const MomentTrack& track, int horizon);
/// Generations k in [2, n-1] whose log factor log(rho mu) + log f' is negative
/// while their weight |1/mu_{k-2} - 1/mu_k| is not zero.
std::vector<int> sn_negative_terms(const MomentTrack& track, int n);

struct ShapeValue {
  double value = 0.0;
  bool warning = false;
};

/// 1/(mu_n rho_{0,n}) + r_n / rho_{0,n}, with the unknown constant set to 1.
double theorem4_shape(const MomentTrack& track, double r_n, int n);

struct Thm5Options {
  double f2_floor = 1e-6;
  // f_N''(1) <= (1 - eps) min_{n <= ceil(N/2)} f_n''(1) is read as f'' -> 0.
  double decay_epsilon = 0.05;
};

/// True when the ledger suggests inf f_n''(1) = 0 over the horizon.
bool f2_vanishing(const MomentTrack& track, const Thm5Options& options = {});

ShapeValue theorem5_shape(const MomentTrack& track, double s_n, int n,
                          const Thm5Options& options = {});

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// log(mu rho)/(mu rho) + s_n/rho. Warns when f' or f'' over the horizon leave
/// the supplied ranges.
ShapeValue corollary_shape(const MomentTrack& track, double s_n, int n,
                           std::optional<Range> f1_range = std::nullopt,
                           std::optional<Range> f2_range = std::nullopt);

/// 4 / (2 + mu_n rho_{0,n}). Throws FamilyMismatch unless every generation of
/// env up to n is linear fractional.
double linear_fractional_bound(const Environment& env, const MomentTrack& track, int n);

struct RateBoundRow {
  int n = 0;
  double r_n = 0.0;
  double s_n = 0.0;
  bool s_negative_log = false;
  double thm4_shape = 0.0;
  double thm5_shape = 0.0;
  bool thm5_warning = false;
  double cor_shape = 0.0;
  bool cor_warning = false;
  std::optional<double> lf_bound;
};

struct RateBoundReport {
  std::vector<RateBoundRow> rows;  // n = 2..N
  bool has_lf_column = false;

  void write_csv(std::ostream& out) const;
};

struct RateBoundOptions {
  Thm5Options thm5;
  std::optional<Range> f1_range;
  std::optional<Range> f2_range;
};

/// Rows for n = 2..N. Throws ValidationError when N < 2.
RateBoundReport rate_bound_report(const Environment& env, int horizon,
                                  const RateBoundOptions& options = {});

}  // namespace gwve
