#include "gwve/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gwve/errors.hpp"

namespace gwve {

namespace {

constexpr double kMuFloor = 1e-300;
constexpr double kMuCeil = 1e300;

void check_index(const MomentTrack& track, int n, const char* what) {
  if (n < 0 || n > track.horizon) {
    throw ValidationError(std::string(what) + ": n = " + std::to_string(n) +
                          " outside ledger horizon " + std::to_string(track.horizon));
  }
}

// Weight |1/mu_{k-2} - 1/mu_k| of the k-th term of s_n.
double sn_weight(const MomentTrack& track, int k) {
  return std::abs(track.inv_mu(k - 2) - track.inv_mu(k));
}

double sn_log_factor(const MomentTrack& track, int k) {
  if (!(track.rho[k] > 0.0)) {
    throw DomainError("s_n needs rho_{0,k} mu_k > 0, but it vanishes at k = " + std::to_string(k));
  }
  return track.log_mu_rho(k) + std::log(track.f1[k]);
}

double sn_term(const MomentTrack& track, int k) { return sn_log_factor(track, k) * sn_weight(track, k); }

void require_positive_rho(const MomentTrack& track, int n, const char* what) {
  if (!(track.rho[n] > 0.0)) {
    throw DomainError(std::string(what) + " needs rho_{0,n} > 0, got 0 at n = " + std::to_string(n));
  }
}

}  // namespace

double MomentTrack::inv_mu(int n) const {
  if (!log_scaled) return 1.0 / mu[n];
  return std::exp(-log_mu[n]);
}

double MomentTrack::mu_rho(int n) const {
  if (!log_scaled) return mu[n] * rho[n];
  if (rho[n] <= 0.0) return 0.0;
  return std::exp(log_mu_rho(n));
}

double MomentTrack::log_mu_rho(int n) const { return log_mu[n] + log_rho[n]; }

MomentTrack moment_sequences(const Environment& env, int horizon) {
  if (horizon < 1) throw ValidationError("moment_sequences needs N >= 1");
  MomentTrack t;
  t.horizon = horizon;
  const auto size = static_cast<std::size_t>(horizon) + 1;
  t.mu.assign(size, 1.0);
  t.log_mu.assign(size, 0.0);
  t.nu.assign(size, 0.0);
  t.rho.assign(size, 0.0);
  t.log_rho.assign(size, -std::numeric_limits<double>::infinity());
  t.mmax.assign(size, 0.0);
  t.f1.assign(size, 0.0);
  t.f2.assign(size, 0.0);
  t.f3.assign(size, 0.0);
  t.drho.assign(size, 0.0);

  for (int n = 1; n <= horizon; ++n) {
    const FactorialMoments m = env.law(n).moments();
    t.f1[n] = m.f1;
    t.f2[n] = m.f2;
    t.f3[n] = m.f3;
    t.nu[n] = m.f2 / (m.f1 * m.f1);
    t.mmax[n] = std::max(t.mmax[n - 1], m.f1);
    t.log_mu[n] = t.log_mu[n - 1] + std::log(m.f1);
    t.mu[n] = t.mu[n - 1] * m.f1;
    if (!t.log_scaled && (t.mu[n] < kMuFloor || t.mu[n] > kMuCeil)) t.log_scaled = true;
    if (t.log_scaled) t.mu[n] = std::exp(t.log_mu[n]);
    // nu_n / mu_{n-1} formed in log space once mu has left the safe range.
    t.drho[n] = t.nu[n] == 0.0 ? 0.0
                : t.log_scaled ? std::exp(std::log(t.nu[n]) - t.log_mu[n - 1])
                               : t.nu[n] / t.mu[n - 1];
    t.rho[n] = t.rho[n - 1] + t.drho[n];
    if (t.nu[n] == 0.0) {
      t.log_rho[n] = t.log_rho[n - 1];
    } else {
      const double step = std::log(t.nu[n]) - t.log_mu[n - 1];
      const double hi = std::max(step, t.log_rho[n - 1]);
      t.log_rho[n] = hi + std::log1p(std::exp(std::min(step, t.log_rho[n - 1]) - hi));
    }
  }
  return t;
}

double rn(const MomentTrack& track, int n) {
  if (n < 2) throw ValidationError("r_n defined for n >= 2");
  check_index(track, n, "r_n");
  double total = track.drho[n] * (1.0 + track.f1[n]);
  // gap = rho_{0,n} - rho_{0,j}, summed from the increments to avoid cancellation.
  double gap = 0.0;
  for (int j = n - 1; j >= 1; --j) {
    gap += track.drho[j + 1];
    if (track.drho[j] == 0.0) continue;
    if (gap <= 0.0) {
      throw DomainError("r_n: rho_{0,n} = rho_{0,j} at j = " + std::to_string(j) +
                        " while nu_j > 0 (division by zero)");
    }
    total += track.drho[j] * (1.0 + track.f1[j]) * track.inv_mu(j) / gap;
  }
  return total;
}

std::vector<double> rn_batch(const MomentTrack& track, int horizon) {
  if (horizon < 2) throw ValidationError("r_n defined for n >= 2");
  check_index(track, horizon, "r_n batch");
  std::vector<double> out(static_cast<std::size_t>(horizon) + 1,
                          std::numeric_limits<double>::quiet_NaN());
  // Coefficients independent of n, computed once.
  std::vector<double> coef(out.size(), 0.0);
  for (int j = 1; j <= horizon; ++j) coef[j] = track.drho[j] * (1.0 + track.f1[j]) * track.inv_mu(j);
  for (int n = 2; n <= horizon; ++n) {
    double total = track.drho[n] * (1.0 + track.f1[n]);
    for (int j = 1; j < n; ++j) {
      if (coef[j] == 0.0) continue;
      const double gap = track.rho[n] - track.rho[j];
      if (gap <= 0.0) {
        throw DomainError("r_n: rho_{0,n} = rho_{0,j} at j = " + std::to_string(j) +
                          " while nu_j > 0 (division by zero)");
      }
      total += coef[j] / gap;
    }
    out[n] = total;
  }
  return out;
}

double sn(const MomentTrack& track, int n) {
  check_index(track, n, "s_n");
  double total = 0.0;
  for (int k = 2; k <= n - 1; ++k) total += sn_term(track, k);
  return total;
}

std::vector<double> sn_batch(const MomentTrack& track, int horizon) {
  check_index(track, horizon, "s_n batch");
  std::vector<double> out(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (int n = 3; n <= horizon; ++n) out[n] = out[n - 1] + sn_term(track, n - 1);
  return out;
}

std::vector<int> sn_negative_terms(const MomentTrack& track, int n) {
  check_index(track, n, "s_n");
  std::vector<int> out;
  for (int k = 2; k <= n - 1; ++k) {
    if (sn_weight(track, k) != 0.0 && sn_log_factor(track, k) < 0.0) out.push_back(k);
  }
  return out;
}

double theorem4_shape(const MomentTrack& track, double r_n, int n) {
  if (n < 2) throw ValidationError("r_n rate shape defined for n >= 2");
  check_index(track, n, "r_n rate shape");
  require_positive_rho(track, n, "r_n rate shape");
  return track.inv_mu(n) / track.rho[n] + r_n / track.rho[n];
}

bool f2_vanishing(const MomentTrack& track, const Thm5Options& options) {
  const int N = track.horizon;
  const double f2_min = *std::min_element(track.f2.begin() + 1, track.f2.end());
  if (f2_min < options.f2_floor) return true;
  if (N < 2) return false;
  const int half = (N + 1) / 2;
  const double early_min = *std::min_element(track.f2.begin() + 1, track.f2.begin() + half + 1);
  return track.f2[N] <= (1.0 - options.decay_epsilon) * early_min;
}

ShapeValue theorem5_shape(const MomentTrack& track, double s_n, int n, const Thm5Options& options) {
  check_index(track, n, "s_n rate shape");
  require_positive_rho(track, n, "s_n rate shape");
  const double mr = track.mu_rho(n);
  if (!(mr > 0.0)) throw DomainError("s_n rate shape needs mu_n rho_{0,n} > 0");
  const double lead = (track.log_mu_rho(n) + std::log(track.f1[n])) / mr;
  const double value = std::pow(1.0 + track.mmax[n], 5) * (lead + s_n / track.rho[n]);
  return {value, f2_vanishing(track, options)};
}

ShapeValue corollary_shape(const MomentTrack& track, double s_n, int n,
                           std::optional<Range> f1_range, std::optional<Range> f2_range) {
  check_index(track, n, "corollary shape");
  require_positive_rho(track, n, "corollary shape");
  const double mr = track.mu_rho(n);
  if (!(mr > 0.0)) throw DomainError("corollary shape needs mu_n rho_{0,n} > 0");
  ShapeValue out;
  out.value = track.log_mu_rho(n) / mr + s_n / track.rho[n];
  auto outside = [&](const std::vector<double>& v, const Range& r) {
    return std::any_of(v.begin() + 1, v.end(), [&](double x) { return x < r.lo || x > r.hi; });
  };
  out.warning = (f1_range && outside(track.f1, *f1_range)) || (f2_range && outside(track.f2, *f2_range));
  return out;
}

double linear_fractional_bound(const Environment& env, const MomentTrack& track, int n) {
  check_index(track, n, "linear fractional bound");
  for (int k = 1; k <= n; ++k) {
    if (env.law(k).kind() != OffspringLaw::Kind::LinearFractional) {
      throw FamilyMismatch("linear fractional bound needs a linear fractional environment; "
                           "generation " + std::to_string(k) + " is " + env.law(k).describe());
    }
  }
  return 4.0 / (2.0 + track.mu_rho(n));
}

void RateBoundReport::write_csv(std::ostream& out) const {
  out << "n,r_n,s_n,s_negative_log,thm4_shape,thm5_shape,thm5_warning,cor_shape,cor_warning";
  if (has_lf_column) out << ",lf_exact_bound";
  out << "\n";
  const auto old_precision = out.precision(17);
  for (const auto& row : rows) {
    out << row.n << ',' << row.r_n << ',' << row.s_n << ',' << (row.s_negative_log ? 1 : 0) << ','
        << row.thm4_shape << ',' << row.thm5_shape << ',' << (row.thm5_warning ? 1 : 0) << ','
        << row.cor_shape << ',' << (row.cor_warning ? 1 : 0);
    if (has_lf_column) out << ',' << row.lf_bound.value_or(std::nan(""));
    out << "\n";
  }
  out.precision(old_precision);
}

RateBoundReport rate_bound_report(const Environment& env, int horizon,
                                  const RateBoundOptions& options) {
  if (horizon < 2) throw ValidationError("r_n defined for n >= 2");
  const MomentTrack track = moment_sequences(env, horizon);
  const std::vector<double> r = rn_batch(track, horizon);
  const std::vector<double> s = sn_batch(track, horizon);
  RateBoundReport report;
  report.has_lf_column = env.all_linear_fractional();
  // The negative-log anomaly is cumulative in n, so track it incrementally.
  bool negative_seen = false;
  for (int n = 2; n <= horizon; ++n) {
    if (n >= 3) {
      const int k = n - 1;
      negative_seen = negative_seen || (sn_weight(track, k) != 0.0 && sn_log_factor(track, k) < 0.0);
    }
    RateBoundRow row;
    row.n = n;
    row.r_n = r[n];
    row.s_n = s[n];
    row.s_negative_log = negative_seen;
    row.thm4_shape = theorem4_shape(track, r[n], n);
    const ShapeValue t5 = theorem5_shape(track, s[n], n, options.thm5);
    row.thm5_shape = t5.value;
    row.thm5_warning = t5.warning;
    const ShapeValue cor = corollary_shape(track, s[n], n, options.f1_range, options.f2_range);
    row.cor_shape = cor.value;
    row.cor_warning = cor.warning;
    if (report.has_lf_column) row.lf_bound = linear_fractional_bound(env, track, n);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace gwve
