// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "gwve/bounds.hpp"
#include "gwve/environment.hpp"
#include "gwve/exact.hpp"
#include "gwve/spine.hpp"
#include "gwve/wasserstein.hpp"
#include "oracles.hpp"

using namespace gwve;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

double tv_against(const TruncatedPmf& p, const std::vector<double>& ref) {
  double acc = 0.0;
  const std::size_t n = std::max(p.probs.size(), ref.size());
  for (std::size_t k = 0; k < n; ++k) {
    const double a = k < p.probs.size() ? p.probs[k] : 0.0;
    const double b = k < ref.size() ? ref[k] : 0.0;
    acc += std::abs(a - b);
  }
  return 0.5 * acc;
}

Environment lf_constant(int horizon) { return builtin::linear_fractional_constant(0.5, 0.5, horizon); }

SimOptions seeded(std::uint64_t seed) {
  SimOptions o;
  o.seed = seed;
  return o;
}

constexpr std::int64_t kM = 1'000'000;

// 1. exact d_W against 4/(2 + mu rho) on the DFT route at K = 2^15
Outcome lf_explicit_bound() {
  const int N = 200;
  const Environment env = lf_constant(N);
  const MomentTrack t = moment_sequences(env, N);
  LawOptions opts;
  opts.method = LawMethod::Dft;
  opts.truncation = std::size_t{1} << 15;
  bool ok = true;
  double worst_margin = -INFINITY, worst_tb = 0.0;
  int first_bad = 0;
  for (int n = 1; n <= N; ++n) {
    const ConditionalLaw c = conditional_law(env, n, opts);
    const DistanceResult d = dw_scaled_pmf_vs_exp(c.y, c.b);
    const double bound = linear_fractional_bound(env, t, n);
    const double margin = d.value - bound - d.truncation_bound;
    worst_margin = std::max(worst_margin, margin);
    worst_tb = std::max(worst_tb, d.truncation_bound);
    if (!(margin <= 0.0 && d.truncation_bound < 1e-9 && std::abs(bound - 4.0 / (2.0 + 2.0 * n)) < 1e-15)) {
      if (ok) first_bad = n;
      ok = false;
    }
  }
  return {ok, "max(dw - bound - tb) = " + g(worst_margin) + ", max truncation_bound = " + g(worst_tb) +
                  (ok ? "" : ", first failure n = " + std::to_string(first_bad))};
}

// 2. |n P[Z_n > 0] - 1| <= 1/(n+1) for n <= 10^4
Outcome kolmogorov_estimate() {
  const int N = 10'000;
  const Environment env = lf_constant(N);
  const std::vector<double> survival = survival_curve(env, N);
  bool ok = true;
  double worst = 0.0;
  for (int n = 1; n <= N; ++n) {
    const double p = survival[static_cast<std::size_t>(n)];
    const double gap = std::abs(n * p - 1.0);
    const double bound = 1.0 / (n + 1.0);
    // equality holds exactly; allow binary64 rounding of the composed survival
    worst = std::max(worst, gap * (n + 1.0));
    if (gap > bound * (1.0 + 1e-9) || std::abs(p - 1.0 / (n + 1.0)) > 1e-12 / (n + 1.0)) ok = false;
  }
  return {ok, "max (n+1)|n P - 1| = " + g(worst)};
}

// 3. DFT vs convolution and vs tree enumeration
Outcome oracle_equivalence() {
  double worst = 0.0;
  std::string where;
  for (const auto& name : builtin::names()) {
    const Environment env = builtin::by_name(name, 12);
    for (int n = 1; n <= 12; ++n) {
      LawOptions dft, conv;
      dft.method = LawMethod::Dft;
      conv.method = LawMethod::Convolution;
      dft.truncation = conv.truncation = 4096;
      const TruncatedPmf a = law_of_zn(env, n, dft);
      const TruncatedPmf b = law_of_zn(env, n, conv);
      const double tv = tv_distance(a, b);
      if (tv > worst) {
        worst = tv;
        where = name + " n=" + std::to_string(n);
      }
    }
  }
  double worst_tree = 0.0;
  for (const char* name : {"symmetric-a0.5", "symmetric-a1", "binary", "delta1"}) {
    const Environment env = builtin::by_name(name, 4);
    for (int n = 1; n <= 4; ++n) {
      std::vector<oracle::Pmf> laws;
      for (int gen = 1; gen <= n; ++gen) laws.push_back(env.law(gen).pmf_prefix(3));
      std::vector<double> ref(64, 0.0);
      for (const auto& [k, p] : oracle::enumerate_tree(laws)) ref[static_cast<std::size_t>(k)] = p;
      for (auto m : {LawMethod::Dft, LawMethod::Convolution}) {
        LawOptions o;
        o.method = m;
        o.truncation = 64;
        worst_tree = std::max(worst_tree, tv_against(law_of_zn(env, n, o), ref));
      }
    }
  }
  return {worst < 1e-10 && worst_tree < 1e-12,
          "max TV dft/convolution = " + g(worst) + " (" + where + "), max TV vs tree = " + g(worst_tree)};
}

// 4. prefix moments against the ledger. The laws are computed with a tail
// tolerance of 1e-13 so the neglected mass cannot reach the 1e-8 threshold;
// the mean additionally carries its tracked tail moment.
Outcome moment_identities() {
  double worst = 0.0;
  bool ok = true;
  LawOptions opts;
  opts.tolerance = 1e-13;
  for (const auto& name : builtin::names()) {
    const Environment env = builtin::by_name(name, 20);
    const MomentTrack t = moment_sequences(env, 20);
    for (int n = 1; n <= 20; ++n) {
      const auto i = static_cast<std::size_t>(n);
      const TruncatedPmf p = law_of_zn(env, n, opts);
      const double mu = t.mu[i];
      const double m2 = t.rho[i] * mu * mu;
      const double e1 = std::abs(p.prefix_mean() - mu) / mu;
      const double e2 = m2 > 0.0 ? std::abs(p.prefix_second_factorial() - m2) / m2 : std::abs(p.prefix_second_factorial());
      worst = std::max({worst, e1, e2});
      if (e1 > 1e-8 + p.tail_moment / mu || e2 > 1e-8) ok = false;
    }
  }
  return {ok, "max relative error = " + g(worst) + " (tail tolerance 1e-13)"};
}

// 5. empirical size-biased law
Outcome size_bias_identity() {
  std::string detail;
  bool ok = true;
  std::uint64_t seed = 501;
  for (const char* name : {"lf-critical", "poisson-increasing"}) {
    const SpineLawReport r = estimate_spine_law(builtin::by_name(name, 6), 6, kM, seeded(seed++));
    ok = ok && r.tv_size_biased < 0.005;
    detail += std::string(detail.empty() ? "" : ", ") + name + " TV = " + g(r.tv_size_biased);
  }
  return {ok, detail};
}

// 6. Kolmogorov gap of R_n - U against the equilibrium law of Y_n
Outcome equilibrium_identity() {
  const EquilibriumReport lf = estimate_equilibrium_identity(lf_constant(6), 6, kM, seeded(601));
  const EquilibriumReport d1 = estimate_equilibrium_identity(builtin::delta_one(6), 6, kM, seeded(602));
  return {lf.ks_gap < 0.005 && d1.ks_gap < 0.005,
          "lf-critical ks = " + g(lf.ks_gap) + ", delta1 ks = " + g(d1.ks_gap)};
}

// 7. Z-dot_n given L_n = 0 against Y_n
Outcome conditioning_identity() {
  std::string detail;
  bool ok = true;
  std::uint64_t seed = 701;
  for (const char* name : {"lf-critical", "symmetric-a0.5"}) {
    const SpineLawReport r = estimate_spine_law(builtin::by_name(name, 6), 6, kM, seeded(seed++));
    ok = ok && r.tv_conditional < 0.01;
    detail += std::string(detail.empty() ? "" : ", ") + name + " TV = " + g(r.tv_conditional) + " (" +
              std::to_string(r.l0_samples) + " samples with L=0)";
  }
  return {ok, detail};
}

// 8. step inequalities
Outcome step_suite() {
  std::string detail;
  bool ok = true;
  std::uint64_t seed = 801;
  for (const char* name : {"lf-critical", "symmetric-a0.5"}) {
    const StepReport r = check_step_inequalities(builtin::by_name(name, 8), 8, kM, seeded(seed++));
    double worst = -INFINITY;
    for (const auto& row : r.rows) {
      const auto z = [](double lhs, double se, double rhs) { return se > 0.0 ? (lhs - rhs) / se : (lhs > rhs ? INFINITY : -INFINITY); };
      worst = std::max({worst, z(row.step1_lhs, row.step1_se, row.step1_rhs), z(row.step2_lhs, row.step2_se, row.step2_rhs),
                        z(row.step3_lhs, row.step3_se, row.step3_rhs)});
    }
    ok = ok && !r.any_violation();
    detail += std::string(detail.empty() ? "" : ", ") + name + (r.any_violation() ? " violation" : " clean") +
              " (max (lhs-rhs)/se = " + g(worst) + ")";
  }
  return {ok, detail};
}

// 9. bounded diagnostic products for the worked examples
Outcome rate_order_reproduction() {
  std::string detail;
  bool ok = true;
  for (const char* id : {"symmetric", "poisson-increasing", "poisson-sqrt-decay"}) {
    const cli::ExampleTable t = cli::reproduce_example(id);
    const bool exact_everywhere =
        std::all_of(t.rows.begin(), t.rows.end(), [](const cli::ExampleRow& r) { return r.dw.has_value(); });
    const double spread = exact_everywhere ? t.diagnostic_spread() : t.shape_spread();
    ok = ok && spread < 20.0;
    detail += std::string(detail.empty() ? "" : "; ") + id + " " +
              (exact_everywhere ? t.diagnostic : "thm4_shape column (exact dw infeasible at some n)") +
              " max/min = " + g(spread);
    if (!exact_everywhere) detail += " [exact dw max/min over feasible n = " + g(t.diagnostic_spread()) + "]";
  }
  const cli::ExampleTable lf = cli::reproduce_example("lf-alternating");
  detail += "; lf-alternating " + lf.diagnostic + " max = " + g(lf.diagnostic_max());
  return {ok, detail};
}

// 10. dw n / log n for the constant critical law
Outcome constant_environment_rate() {
  const int N = 4096;
  const Environment env = lf_constant(N);
  double lo = INFINITY, hi = 0.0, lo_n = INFINITY, hi_n = 0.0;
  for (int n = 16; n <= N; ++n) {
    const ConditionalLaw c = conditional_law(env, n);
    const double dw = dw_scaled_pmf_vs_exp(c.y, c.b).value;
    const double v = dw * n / std::log(static_cast<double>(n));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    lo_n = std::min(lo_n, dw * n);
    hi_n = std::max(hi_n, dw * n);
  }
  return {hi / lo < 20.0, "dw*n/log n max/min = " + g(hi / lo) + "; dw*n in [" + g(lo_n) + ", " + g(hi_n) + "]"};
}

// 11. property suites of the unit binary
Outcome invariant_suites() {
  const std::string cmd = std::string("\"") + GWVE_UNIT_TEST_BINARY + "\" --gtest_filter='*Property*' --gtest_brief=1 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {false, "could not launch " GWVE_UNIT_TEST_BINARY};
  std::string output;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) output += buf;
  const int status = pclose(pipe);
  std::string summary;
  std::istringstream lines(output);
  for (std::string line; std::getline(lines, line);) {
    if (line.find("[  PASSED  ]") != std::string::npos || line.find("[  FAILED  ]") != std::string::npos) {
      summary += (summary.empty() ? "" : " | ") + line;
    }
  }
  return {status == 0, summary.empty() ? "no gtest summary" : summary};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"linear-fractional explicit bound", lf_explicit_bound},
      {"Kolmogorov survival estimate", kolmogorov_estimate},
      {"oracle equivalence", oracle_equivalence},
      {"moment identities", moment_identities},
      {"size-bias identity", size_bias_identity},
      {"equilibrium identity", equilibrium_identity},
      {"conditioning identity", conditioning_identity},
      {"step inequality suite", step_suite},
      {"rate-order reproduction", rate_order_reproduction},
      {"constant-environment rate", constant_environment_rate},
      {"invariant suites", invariant_suites},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << " ("
              << g(secs) << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
