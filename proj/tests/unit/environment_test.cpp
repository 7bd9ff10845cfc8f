#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gwve/environment.hpp"
#include "gwve/errors.hpp"
#include "oracles.hpp"

using namespace gwve;

TEST(OffspringLaw, PoissonMoments) {
  const FactorialMoments m = OffspringLaw::poisson(2.0).moments();
  EXPECT_DOUBLE_EQ(m.f1, 2.0);
  EXPECT_DOUBLE_EQ(m.f2, 4.0);
  EXPECT_DOUBLE_EQ(m.f3, 8.0);
}

TEST(OffspringLaw, LinearFractionalMoments) {
  const FactorialMoments m = OffspringLaw::linear_fractional(0.5, 0.5).moments();
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.f2, 2.0);
}

TEST(OffspringLaw, SymmetricMoments) {
  const FactorialMoments m = OffspringLaw::symmetric(1.0).moments();
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.f2, 1.0);
  EXPECT_DOUBLE_EQ(m.f3, 0.0);
}

TEST(OffspringLaw, PgfValues) {
  for (const auto& law : {OffspringLaw::poisson(1.3), OffspringLaw::linear_fractional(0.7, 0.4),
                          OffspringLaw::symmetric(0.3), OffspringLaw::explicit_pmf({0.2, 0.3, 0.5})}) {
    EXPECT_NEAR(law.pgf(1.0), 1.0, 1e-15) << law.describe();
  }
  EXPECT_DOUBLE_EQ(OffspringLaw::linear_fractional(0.5, 0.5).pgf(0.0), 0.5);
  EXPECT_DOUBLE_EQ(OffspringLaw::symmetric(1.0).pgf(0.5), 0.625);
}

TEST(OffspringLaw, RejectsInvalidParameters) {
  EXPECT_THROW(OffspringLaw::explicit_pmf({0.5, 0.4}), ValidationError);
  EXPECT_THROW(OffspringLaw::explicit_pmf({-0.1, 1.1}), ValidationError);
  EXPECT_THROW(OffspringLaw::poisson(-1.0), ValidationError);
  EXPECT_THROW(OffspringLaw::linear_fractional(1.5, 0.5), ValidationError);
  EXPECT_THROW(OffspringLaw::linear_fractional(0.5, 0.0), ValidationError);
  EXPECT_THROW(OffspringLaw::symmetric(1.5), ValidationError);
}

TEST(OffspringLaw, ComplementKeepsRelativePrecision) {
  // g(u) = 1 - f(1-u) ~ f'(1) u for tiny u; naive evaluation would return 0.
  const double u = 1e-20;
  EXPECT_NEAR(OffspringLaw::poisson(1.0).complement(u) / u, 1.0, 1e-12);
  EXPECT_NEAR(OffspringLaw::linear_fractional(0.5, 0.5).complement(u) / u, 1.0, 1e-12);
  EXPECT_NEAR(OffspringLaw::symmetric(0.5).complement(u) / u, 1.0, 1e-12);
  EXPECT_NEAR(OffspringLaw::explicit_pmf({0.25, 0.5, 0.25}).complement(u) / u, 1.0, 1e-12);
}

TEST(OffspringLaw, ComplexComplementMatchesPgf) {
  const cplx s = std::polar(0.9, 1.1);
  for (const auto& law : {OffspringLaw::poisson(1.7), OffspringLaw::linear_fractional(0.6, 0.3),
                          OffspringLaw::symmetric(0.4), OffspringLaw::explicit_pmf({0.1, 0.2, 0.3, 0.4})}) {
    const cplx lhs = law.complement(1.0 - s);
    const cplx rhs = 1.0 - law.pgf(s);
    EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-14) << law.describe();
  }
}

TEST(StarStar, PoissonMinimalConstant) {
  const Environment env = Environment::poisson(1.5, 5);
  const StarStarReport r = check_starstar(env, 5, 1.0);
  EXPECT_TRUE(r.all_hold());
  for (double c : r.minimal_c) EXPECT_NEAR(c, 1.5 / 2.5, 1e-14);
}

TEST(StarStar, SymmetricHoldsForAnyConstant) {
  const StarStarReport r = check_starstar(builtin::symmetric(0.5, 20), 20, 1e-9);
  EXPECT_TRUE(r.all_hold());
}

TEST(StarStar, NoBranchingHasZeroConstant) {
  const Environment env = Environment::constant(OffspringLaw::explicit_pmf({0.5, 0.5}), 4);
  const StarStarReport r = check_starstar(env, 4, 1.0);
  for (double c : r.minimal_c) EXPECT_EQ(c, 0.0);
}

TEST(Classify, PoissonIncreasing) {
  const CriticalityReport r = classify(builtin::poisson_increasing(100), 100);
  EXPECT_NEAR(r.mu.back(), 100.0, 1e-10);
  EXPECT_TRUE(r.rho_increasing_unbounded);
  EXPECT_TRUE(r.mu_rho_increasing_unbounded);
  EXPECT_NE(r.label().find("finite-horizon evidence"), std::string::npos);
}

TEST(Classify, DeltaOneIsNotCritical) {
  const CriticalityReport r = classify(builtin::delta_one(10), 10);
  for (double x : r.rho) EXPECT_EQ(x, 0.0);
  EXPECT_FALSE(r.rho_increasing_unbounded);
  EXPECT_FALSE(r.mu_rho_increasing_unbounded);
  EXPECT_FALSE(r.critical_evidence());
}

TEST(Classify, SymmetricHalf) {
  const CriticalityReport r = classify(builtin::symmetric(0.5, 100), 100);
  double oracle = 0.0;
  for (int k = 1; k <= 100; ++k) oracle += 1.0 / std::sqrt(static_cast<double>(k));
  EXPECT_NEAR(r.rho.back(), oracle, 1e-12);
  EXPECT_NEAR(r.rho.back(), 18.59, 0.01);
  EXPECT_TRUE(r.critical_evidence());
}

TEST(Environment, HorizonIsEnforced) {
  const Environment env = builtin::binary_pmf(3);
  EXPECT_NO_THROW(env.law(3));
  EXPECT_THROW(env.law(4), ValidationError);
  EXPECT_THROW(env.law(0), ValidationError);
}

TEST(Environment, ListExtensions) {
  const std::vector<OffspringLaw> laws{OffspringLaw::poisson(1.0), OffspringLaw::symmetric(0.5)};
  EXPECT_THROW(Environment::list(laws, Extension::Error, 3).law(3), ValidationError);
  EXPECT_EQ(Environment::list(laws, Extension::Cycle, 3).law(3), OffspringLaw::poisson(1.0));
  EXPECT_EQ(Environment::list(laws, Extension::HoldLast, 3).law(3), OffspringLaw::symmetric(0.5));
}

TEST(Environment, InvalidGeneratedLawIsValidation) {
  // a_n = n exceeds one from n = 2 on.
  const Environment env = Environment::linear_fractional(ParamSeq::parse("n"), 0.5, 3);
  EXPECT_NO_THROW(env.law(1));
  EXPECT_THROW(env.law(2), ValidationError);
}

TEST(Environment, LawIsPure) {
  const Environment env = builtin::linear_fractional_alternating(50);
  for (int n = 1; n <= 50; ++n) EXPECT_EQ(env.law(n), env.law(n));
}

TEST(Environment, BuiltinNamesResolve) {
  for (const auto& name : builtin::names()) EXPECT_EQ(builtin::by_name(name, 5).horizon(), 5);
  EXPECT_THROW(builtin::by_name("nope", 5), ValidationError);
}

// --- properties -------------------------------------------------------------

TEST(EnvironmentProperty, ExplicitMomentsMatchFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> q(2 + trial % 6);  // degree <= 7, exact for the fit
    double total = 0.0;
    for (auto& x : q) total += (x = w(rng));
    for (auto& x : q) x /= total;
    const auto law = OffspringLaw::explicit_pmf(q);
    const FactorialMoments m = law.moments();
    // one-sided differences: fit through s = 1 - k h, k = 0..7, and read off
    // the derivatives at s = 1
    const auto d = oracle::one_sided_derivatives([&](double s) { return law.pgf(s); }, 0.05, 8);
    const double d1 = d[1], d2 = d[2], d3 = d[3];
    const auto exact = oracle::factorial_moments(q);
    EXPECT_NEAR(m.f1, static_cast<double>(exact[0]), 1e-14);
    EXPECT_NEAR(m.f2, static_cast<double>(exact[1]), 1e-13);
    EXPECT_NEAR(m.f3, static_cast<double>(exact[2]), 1e-12);
    EXPECT_LT(std::abs(d1 - m.f1), 1e-5 * std::max(1.0, m.f1));
    EXPECT_LT(std::abs(d2 - m.f2), 1e-5 * std::max(1.0, m.f2));
    EXPECT_LT(std::abs(d3 - m.f3), 1e-5 * std::max(1.0, m.f3));
  }
}

TEST(EnvironmentProperty, ExplicitPgfMatchesHorner) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> q(1 + trial % 12);
    double total = 0.0;
    for (auto& x : q) total += (x = w(rng));
    for (auto& x : q) x /= total;
    if (q.size() == 1) q = {0.0, 1.0};
    const auto law = OffspringLaw::explicit_pmf(q);
    const double s = w(rng);
    const double h = oracle::pgf(q, s);
    EXPECT_LE(std::abs(law.pgf(s) - h), 1e-14 * h);
  }
}

TEST(EnvironmentProperty, BuiltinPmfEntriesNonnegative) {
  for (const auto& name : builtin::names()) {
    const Environment env = builtin::by_name(name, 64);
    for (int n = 1; n <= 64; ++n) {
      const auto p = env.law(n).pmf_prefix(64);
      double mass = 0.0;
      for (double x : p) {
        EXPECT_GE(x, 0.0) << name << " n=" << n;
        mass += x;
      }
      EXPECT_LE(mass, 1.0 + 1e-12);
    }
  }
}
