#include "gwve/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gwve/errors.hpp"
#include "json.hpp"

namespace gwve {

namespace {

constexpr double kTailLimit = 1e-6;

// e^{-x0} - e^{-x1}
double exp_drop(double x0, double x1) {
  if (std::isinf(x1)) return std::exp(-x0);
  return std::exp(-x0) * -std::expm1(-(x1 - x0));
}

}  // namespace

std::string to_string(DistanceMethod method) {
  return method == DistanceMethod::ExactPiecewise ? "exact-piecewise" : "empirical-cdf";
}

void DistanceResult::write_json(std::ostream& out) const {
  nlohmann::json j;
  j["value"] = value;
  j["method"] = to_string(method);
  j["knots_used"] = knots_used;
  j["truncation_bound"] = truncation_bound;
  out << j.dump() << '\n';
}

double integrate_abs_exp_gap(double x0, double x1, double s) {
  if (!(x1 > x0)) return 0.0;
  if (s <= 0.0) return exp_drop(x0, x1);
  const double cross = -std::log(s);
  if (cross <= x0) return s * (x1 - x0) - exp_drop(x0, x1);  // e^{-x} <= s throughout
  if (cross >= x1) return exp_drop(x0, x1) - s * (x1 - x0);
  return (exp_drop(x0, cross) - s * (cross - x0)) + (s * (x1 - cross) - exp_drop(cross, x1));
}

DistanceResult dw_scaled_pmf_vs_exp(const TruncatedPmf& pmf, double b) {
  if (!(b > 0.0) || !std::isfinite(b)) throw ValidationError("scale b must be positive and finite");
  if (pmf.tail_mass >= kTailLimit) {
    throw TailTooHeavy("tail mass " + std::to_string(pmf.tail_mass) +
                       " is at least 1e-6; increase the truncation");
  }
  const std::size_t K = pmf.probs.size();
  // P[X > k] accumulated from the top so small tails keep their precision.
  std::vector<double> survival(K, 0.0);
  double s = pmf.residual();
  for (std::size_t k = K; k-- > 0;) {
    survival[k] = s;
    s += pmf.probs[k];
  }
  DistanceResult out;
  out.method = DistanceMethod::ExactPiecewise;
  out.knots_used = K;
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    total += integrate_abs_exp_gap(static_cast<double>(k) / b, static_cast<double>(k + 1) / b,
                                   std::min(1.0, survival[k]));
  }
  total += std::exp(-static_cast<double>(K) / b);
  out.value = total;
  out.truncation_bound = pmf.transport / b;
  return out;
}

DistanceResult dw_empirical_vs_exp(std::vector<double> samples) {
  if (samples.size() < 2) throw EmptySample("empirical distance needs at least two samples");
  for (double x : samples) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("samples must be finite and nonnegative");
  }
  std::sort(samples.begin(), samples.end());
  const double M = static_cast<double>(samples.size());
  double total = 0.0;
  double left = 0.0;
  std::size_t i = 0;
  std::size_t knots = 0;
  while (i < samples.size()) {
    const double x = samples[i];
    // Fraction of samples strictly above every point of [left, x).
    total += integrate_abs_exp_gap(left, x, (M - static_cast<double>(i)) / M);
    while (i < samples.size() && samples[i] == x) ++i;
    left = x;
    ++knots;
  }
  total += std::exp(-left);
  DistanceResult out;
  out.value = total;
  out.method = DistanceMethod::EmpiricalCdf;
  out.knots_used = knots;
  out.truncation_bound = 0.0;
  return out;
}

double dw_between_scaled_pmfs(const TruncatedPmf& x, const TruncatedPmf& y, double b) {
  if (!(b > 0.0)) throw ValidationError("scale b must be positive");
  const std::size_t K = std::max(x.probs.size(), y.probs.size()) + 1;
  // Stored laws as explicit vectors with their residuals placed at their K.
  auto expand = [K](const TruncatedPmf& p) {
    std::vector<double> v(K, 0.0);
    std::copy(p.probs.begin(), p.probs.end(), v.begin());
    v[p.probs.size()] += p.residual();
    return v;
  };
  const std::vector<double> px = expand(x);
  const std::vector<double> py = expand(y);
  double cx = 0.0;
  double cy = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    cx += px[k];
    cy += py[k];
    total += std::abs(cx - cy);
  }
  return total / b;
}

double tv_distance(const TruncatedPmf& p, const TruncatedPmf& q) {
  const std::size_t K = std::max(p.probs.size(), q.probs.size());
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double a = k < p.probs.size() ? p.probs[k] : 0.0;
    const double c = k < q.probs.size() ? q.probs[k] : 0.0;
    total += std::abs(a - c);
  }
  return 0.5 * total + 0.5 * std::abs(p.tail_mass - q.tail_mass);
}

}  // namespace gwve
