#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "gwve/exact.hpp"

namespace gwve {

enum class DistanceMethod { ExactPiecewise, EmpiricalCdf };

std::string to_string(DistanceMethod method);

struct DistanceResult {
  double value = 0.0;
  DistanceMethod method = DistanceMethod::ExactPiecewise;
  std::size_t knots_used = 0;
  // Distance the true law can sit from the one integrated; the error bar is
  // [value - truncation_bound, value + truncation_bound].
  double truncation_bound = 0.0;

  void write_json(std::ostream& out) const;
};

/// d_W(X/b, Exp(1)) for the stored law of pmf (residual lumped at K),
/// integrated exactly; truncation_bound = pmf.transport / b.
/// Throws TailTooHeavy when pmf.tail_mass >= 1e-6.
DistanceResult dw_scaled_pmf_vs_exp(const TruncatedPmf& pmf, double b);

/// d_W(F_M, Exp(1)) for the empirical CDF of the samples.
/// Throws EmptySample for fewer than two samples.
DistanceResult dw_empirical_vs_exp(std::vector<double> samples);

/// (1/b) sum_k |P[X <= k] - P[Y <= k]| for the stored laws.
double dw_between_scaled_pmfs(const TruncatedPmf& x, const TruncatedPmf& y, double b);

/// (1/2) sum_k |p[k] - q[k]| + (1/2) |tail_p - tail_q|.
double tv_distance(const TruncatedPmf& p, const TruncatedPmf& q);

/// int_{x0}^{x1} |e^{-x} - s| dx for a constant s in [0, 1].
double integrate_abs_exp_gap(double x0, double x1, double s);

}  // namespace gwve
