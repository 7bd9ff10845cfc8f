#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "gwve/environment.hpp"
#include "gwve/exact.hpp"

namespace gwve {

/// Reproducible random stream: (seed, stream_id) fully determines the draws.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  double uniform() { return unit_(engine_); }  // [0, 1)
  std::mt19937_64& engine() noexcept { return engine_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

/// Sampler for one offspring law with its lookup tables precomputed.
class OffspringSampler {
 public:
  explicit OffspringSampler(const OffspringLaw& law);

  std::int64_t sample(RngStream& rng) const;
  /// (total, marked_index): total from the size-biased law, index uniform on 1..total.
  std::pair<std::int64_t, std::int64_t> sample_size_biased(RngStream& rng) const;

 private:
  OffspringLaw law_;
  std::vector<double> cdf_;         // explicit pmf
  std::vector<double> biased_cdf_;  // explicit pmf, size-biased
};

std::int64_t sample_offspring(const OffspringLaw& law, RngStream& rng);
std::pair<std::int64_t, std::int64_t> sample_size_biased_offspring(const OffspringLaw& law,
                                                                   RngStream& rng);

inline constexpr std::int64_t kDefaultPopulationCap = 1'000'000'000;

/// Z_0..Z_n. Throws CapError once a generation exceeds cap.
std::vector<std::int64_t> sample_gw_path(const Environment& env, int n, RngStream& rng,
                                         std::int64_t cap = kDefaultPopulationCap);

/// Generation-n statistics of the size-biased tree. Vectors are indexed by
/// j - 1 for j = 1..n.
struct SpineSample {
  int n = 0;
  std::int64_t zdot = 1;
  std::int64_t l = 0;
  std::int64_t r = 1;
  std::vector<std::int64_t> lj;
  std::vector<std::int64_t> rj;
  std::vector<std::int64_t> sj;

  bool operator==(const SpineSample&) const = default;
};

/// Reusable sampler for an environment truncated at generation n.
class SpineTreeSampler {
 public:
  SpineTreeSampler(const Environment& env, int n, std::int64_t cap = kDefaultPopulationCap);

  void sample(RngStream& rng, SpineSample& out) const;
  /// Generation-n descendants of `count` individuals alive at generation j.
  std::int64_t evolve(std::int64_t count, int j, RngStream& rng) const;
  /// One split at generation j: (left descendants, right descendants, siblings).
  struct Split {
    std::int64_t left;
    std::int64_t right;
    std::int64_t siblings;
  };
  Split split(int j, RngStream& rng) const;

  int generations() const noexcept { return n_; }

 private:
  int n_;
  std::int64_t cap_;
  std::vector<OffspringSampler> samplers_;  // index g - 1 for generation g
};

SpineSample sample_spine_tree(const Environment& env, int n, RngStream& rng,
                              std::int64_t cap = kDefaultPopulationCap);

struct SimOptions {
  std::uint64_t seed = 1;
  // Fixed worker count; worker w draws from stream w, results merge in w order,
  // so output does not depend on the hardware.
  int workers = 8;
  std::int64_t cap = kDefaultPopulationCap;
  int rejection_budget = 10'000;
};

struct SpineLawReport {
  int n = 0;
  std::int64_t samples = 0;
  std::vector<std::int64_t> zdot_counts;     // index k
  std::vector<std::int64_t> zdot_l0_counts;  // samples with L_n = 0
  std::int64_t l0_samples = 0;
  double zdot_mean = 0.0;
  double zdot_stderr = 0.0;
  double expected_mean = 0.0;  // 1 + mu_n rho_{0,n}
  double tv_size_biased = 0.0;
  double tv_conditional = 0.0;
};

/// Empirical laws of Z-dot_n and of Z-dot_n given L_n = 0 against the exact
/// size-biased and conditional laws.
SpineLawReport estimate_spine_law(const Environment& env, int n, std::int64_t samples,
                                  const SimOptions& options = {});

struct EquilibriumReport {
  int n = 0;
  std::int64_t samples = 0;
  double ks_gap = 0.0;
};

/// Kolmogorov distance between the empirical law of R_n - U and the
/// equilibrium law of Y_n.
EquilibriumReport estimate_equilibrium_identity(const Environment& env, int n, std::int64_t samples,
                                                const SimOptions& options = {});

struct MeanYYeReport {
  int n = 0;
  std::int64_t samples = 0;
  double estimate = 0.0;
  double standard_error = 0.0;
  double b = 1.0;
  std::int64_t rejection_failures = 0;
  bool partial = false;
};

/// (2/b_n)(1/2 + sum_j E[(R~_{n,j} + R_{n,j}) 1{L_{n,j} != 0}]), with R~ drawn
/// by rejection from fresh splits until L_{n,j} = 0.
MeanYYeReport estimate_meanyye_rhs(const Environment& env, int n, std::int64_t samples,
                                   const SimOptions& options = {});

struct StepRow {
  int j = 0;
  // Step I: E[R~ 1{A^c}] <= mu_n nu_j / mu_{j-1} P[A^c]
  double step1_lhs = 0.0, step1_se = 0.0, step1_rhs = 0.0;
  // Step II: E[R 1{A^c}] <= (mu_n/mu_j)(f''' + f'')/f' P[Z^{Q_j}_{n-j} > 0]
  double step2_lhs = 0.0, step2_se = 0.0, step2_rhs = 0.0;
  // Step III: P[A^c] <= f''/f' P[Z^{Q_j}_{n-j} > 0]
  double step3_lhs = 0.0, step3_se = 0.0, step3_rhs = 0.0;
  double p_ac_exact = 0.0;
  // Step IV, exact: survival <= 2 / (C_min mu_j (rho_n - rho_j)) where C_min
  // is the smallest phi_l(f_{l,n}(0)) / phi_l(1) over l in (j, n].
  double survival = 1.0;
  double step4_rhs = 0.0;
  bool violation = false;
};

struct StepReport {
  int n = 0;
  std::int64_t samples = 0;
  std::vector<StepRow> rows;
  std::int64_t rejection_failures = 0;
  bool any_violation() const;
};

/// Monte Carlo left sides against exact right sides; a violation is a left
/// side above its right side by more than three standard errors.
StepReport check_step_inequalities(const Environment& env, int n, std::int64_t samples,
                                   const SimOptions& options = {});

}  // namespace gwve
