#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gwve/errors.hpp"
#include "gwve/exact.hpp"
#include "gwve/wasserstein.hpp"
#include "oracles.hpp"

using namespace gwve;

namespace {

TruncatedPmf geometric(double p, std::size_t K) {
  std::vector<double> probs(K, 0.0);
  for (std::size_t k = 1; k < K; ++k) probs[k] = p * std::pow(1.0 - p, static_cast<double>(k - 1));
  TruncatedPmf out = TruncatedPmf::from_probs(std::move(probs));
  out.tail_mass = std::pow(1.0 - p, static_cast<double>(K - 1));
  return out;
}

TruncatedPmf random_pmf(std::mt19937_64& rng, std::size_t size, bool zero_allowed) {
  std::uniform_real_distribution<double> w(0.0, 1.0);
  std::vector<double> p(size);
  double total = 0.0;
  for (std::size_t k = 0; k < size; ++k) total += (p[k] = (k == 0 && !zero_allowed) ? 0.0 : w(rng));
  for (auto& x : p) x /= total;
  return TruncatedPmf::from_probs(std::move(p));
}

double cdf_of(const TruncatedPmf& p, double b, double x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.probs.size() && static_cast<double>(k) / b <= x; ++k) acc += p.probs[k];
  return acc;
}

}  // namespace

TEST(Wasserstein, PointMassAtOne) {
  EXPECT_NEAR(dw_scaled_pmf_vs_exp(TruncatedPmf::point_mass(1), 1.0).value, 2.0 / std::exp(1.0), 1e-15);
}

TEST(Wasserstein, CollapsingScale) {
  EXPECT_NEAR(dw_scaled_pmf_vs_exp(TruncatedPmf::point_mass(1), 1e6).value, 1.0, 1e-5);
}

TEST(Wasserstein, GeometricBelowLinearFractionalBound) {
  const int n = 50;
  const TruncatedPmf g = geometric(1.0 / (n + 1), 4096);
  const DistanceResult d = dw_scaled_pmf_vs_exp(g, n + 1.0);
  EXPECT_LE(d.value, 2.0 / (n + 1));
  EXPECT_EQ(d.method, DistanceMethod::ExactPiecewise);
}

TEST(Wasserstein, RejectsHeavyTail) {
  TruncatedPmf p = geometric(0.01, 64);
  EXPECT_THROW(dw_scaled_pmf_vs_exp(p, 100.0), TailTooHeavy);
}

TEST(Wasserstein, EmpiricalDegenerateSamples) {
  EXPECT_NEAR(dw_empirical_vs_exp(std::vector<double>(10, 1.0)).value, 2.0 / std::exp(1.0), 1e-15);
  EXPECT_NEAR(dw_empirical_vs_exp(std::vector<double>(10, 0.0)).value, 1.0, 1e-15);
  EXPECT_THROW(dw_empirical_vs_exp({1.0}), EmptySample);
  EXPECT_THROW(dw_empirical_vs_exp({}), EmptySample);
}

TEST(Wasserstein, EmpiricalExponentialSample) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> s(1'000'000);
  for (auto& x : s) x = e(rng);
  EXPECT_LT(dw_empirical_vs_exp(std::move(s)).value, 0.005);
}

TEST(TotalVariation, Examples) {
  const TruncatedPmf a = TruncatedPmf::from_probs({0.5, 0.5});
  EXPECT_EQ(tv_distance(a, a), 0.0);
  EXPECT_NEAR(tv_distance(TruncatedPmf::point_mass(0), TruncatedPmf::point_mass(1)), 1.0, 1e-15);
  EXPECT_NEAR(tv_distance(a, TruncatedPmf::from_probs({0.25, 0.75})), 0.25, 1e-15);
}

TEST(Wasserstein, IntegratorPieces) {
  EXPECT_NEAR(integrate_abs_exp_gap(0.0, 1.0, 0.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(integrate_abs_exp_gap(0.0, 1.0, 1.0), 1.0 - (1.0 - std::exp(-1.0)), 1e-15);
  // crossing at x = log 2 inside [0, 1]
  const double c = std::log(2.0);
  const double expected = (1.0 - 0.5 - 0.5 * c) + (0.5 * (1.0 - c) - (0.5 - std::exp(-1.0)));
  EXPECT_NEAR(integrate_abs_exp_gap(0.0, 1.0, 0.5), expected, 1e-15);
}

// --- properties -------------------------------------------------------------

TEST(WassersteinProperty, ContinuousInScale) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> scale(0.5, 50.0);
  for (int trial = 0; trial < 200; ++trial) {
    const TruncatedPmf p = random_pmf(rng, 2 + trial % 30, trial % 2 == 0);
    const double b = scale(rng);
    EXPECT_LT(std::abs(dw_scaled_pmf_vs_exp(p, b).value - dw_scaled_pmf_vs_exp(p, b * (1 + 1e-6)).value), 1e-4);
  }
}

TEST(WassersteinProperty, PiecewiseMatchesQuadrature) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const TruncatedPmf p = random_pmf(rng, 2 + trial % 8, true);
    const double b = std::ldexp(1.0, trial % 5);  // knots k / b land on cell edges
    const double quad = oracle::wasserstein_quadrature([&](double x) { return cdf_of(p, b, x); }, 64.0, 1 << 16);
    EXPECT_NEAR(dw_scaled_pmf_vs_exp(p, b).value, quad, 1e-9);
  }
}

TEST(WassersteinProperty, ExactMatchesEmpiricalForGeometric) {
  const double p_hat = 0.05;
  const TruncatedPmf g = geometric(p_hat, 2048);
  const double exact = dw_scaled_pmf_vs_exp(g, 1.0 / p_hat).value;
  std::mt19937_64 rng(23);
  std::geometric_distribution<int> geo(p_hat);
  std::vector<double> s(1'000'000);
  for (auto& x : s) x = (1.0 + geo(rng)) * p_hat;
  EXPECT_NEAR(dw_empirical_vs_exp(std::move(s)).value, exact, 0.01);
}

TEST(WassersteinProperty, TriangleInequality) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> scale(0.5, 20.0);
  for (int trial = 0; trial < 300; ++trial) {
    const TruncatedPmf x = random_pmf(rng, 2 + trial % 12, true);
    const TruncatedPmf y = random_pmf(rng, 2 + (trial * 7) % 12, true);
    const double b = scale(rng);
    const double lhs = dw_scaled_pmf_vs_exp(x, b).value;
    const double rhs = dw_between_scaled_pmfs(x, y, b) + dw_scaled_pmf_vs_exp(y, b).value;
    EXPECT_LE(lhs, rhs + 1e-12);
  }
}

TEST(WassersteinProperty, EquilibriumCouplingBound) {
  // d_W(X, Exp) <= 2 E|X - X^e| + |m - 1| with X^e = U * (size-biased X)
  // drawn independently of X.
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 500; ++trial) {
    const TruncatedPmf x = random_pmf(rng, 2 + trial % 6, true);
    const TruncatedPmf xs = size_biased_law(x);
    double m = 0.0;
    for (std::size_t k = 0; k < x.probs.size(); ++k) m += static_cast<double>(k) * x.probs[k];
    double coupling = 0.0;
    for (std::size_t i = 0; i < x.probs.size(); ++i) {
      for (std::size_t j = 0; j < xs.probs.size(); ++j) {
        coupling += x.probs[i] * xs.probs[j] *
                    oracle::abs_linear_integral(static_cast<double>(i), static_cast<double>(j));
      }
    }
    const double lhs = dw_scaled_pmf_vs_exp(x, 1.0).value;
    EXPECT_LE(lhs, 2.0 * coupling + std::abs(m - 1.0) + 1e-12) << "trial " << trial;
  }
}
