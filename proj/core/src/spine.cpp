#include "gwve/spine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "gwve/bounds.hpp"
#include "gwve/errors.hpp"
#include "gwve/wasserstein.hpp"

namespace gwve {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

std::int64_t draw_from_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  // Guards against u landing above a last entry that rounded below one.
  return std::min<std::int64_t>(it - cdf.begin(), static_cast<std::int64_t>(cdf.size()) - 1);
}

std::int64_t geometric_failures(double p, RngStream& rng) {
  std::geometric_distribution<std::int64_t> d(p);
  return d(rng.engine());
}

// Runs per_sample over `samples` draws split across a fixed number of workers.
// Worker w owns stream w and its own accumulator; merge folds them in w order.
template <typename Acc, typename Make, typename PerSample>
Acc run_workers(std::int64_t samples, const SimOptions& options, Make&& make, PerSample&& per_sample) {
  require(samples >= 1, "sample count must be positive");
  require(options.workers >= 1, "worker count must be positive");
  const auto workers = static_cast<std::int64_t>(options.workers);
  std::vector<Acc> accs;
  accs.reserve(static_cast<std::size_t>(workers));
  for (std::int64_t w = 0; w < workers; ++w) accs.push_back(make());
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<std::thread> threads;
  for (std::int64_t w = 0; w < workers; ++w) {
    const std::int64_t count = samples / workers + (w < samples % workers ? 1 : 0);
    threads.emplace_back([&, w, count] {
      try {
        RngStream rng(options.seed, static_cast<std::uint64_t>(w));
        for (std::int64_t i = 0; i < count; ++i) per_sample(accs[static_cast<std::size_t>(w)], rng);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Acc total = std::move(accs[0]);
  for (std::size_t w = 1; w < accs.size(); ++w) total.merge(accs[w]);
  return total;
}

void add_count(std::vector<std::int64_t>& hist, std::int64_t k) {
  const auto idx = static_cast<std::size_t>(k);
  if (hist.size() <= idx) hist.resize(idx + 1, 0);
  ++hist[idx];
}

void merge_hist(std::vector<std::int64_t>& into, const std::vector<std::int64_t>& from) {
  if (into.size() < from.size()) into.resize(from.size(), 0);
  for (std::size_t k = 0; k < from.size(); ++k) into[k] += from[k];
}

TruncatedPmf empirical_pmf(const std::vector<std::int64_t>& counts, std::int64_t total) {
  TruncatedPmf p;
  p.provenance = Provenance::Empirical;
  p.probs.assign(std::max<std::size_t>(counts.size(), 1), 0.0);
  if (total == 0) return p;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    p.probs[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  }
  return p;
}

struct MeanVar {
  double sum = 0.0;
  double sq = 0.0;
  void add(double x) {
    sum += x;
    sq += x * x;
  }
  void merge(const MeanVar& o) {
    sum += o.sum;
    sq += o.sq;
  }
  double mean(double m) const { return sum / m; }
  double stderr_of_mean(double m) const {
    const double mu = sum / m;
    const double var = std::max(0.0, (sq / m - mu * mu) * m / std::max(1.0, m - 1.0));
    return std::sqrt(var / m);
  }
};

// Per-split sums shared by the mean-YYe estimator and the step checks.
struct SplitAcc {
  std::vector<MeanVar> tilde;   // R~_{n,j} 1{A^c}
  std::vector<MeanVar> right;   // R_{n,j} 1{A^c}
  std::vector<MeanVar> ac;      // 1{A^c}
  MeanVar total;                // sum_j of the first two
  std::int64_t failures = 0;
  SpineSample scratch;

  explicit SplitAcc(int n)
      : tilde(static_cast<std::size_t>(n)), right(static_cast<std::size_t>(n)), ac(static_cast<std::size_t>(n)) {}

  void merge(const SplitAcc& o) {
    for (std::size_t j = 0; j < tilde.size(); ++j) {
      tilde[j].merge(o.tilde[j]);
      right[j].merge(o.right[j]);
      ac[j].merge(o.ac[j]);
    }
    total.merge(o.total);
    failures += o.failures;
  }
};

SplitAcc run_splits(const Environment& env, int n, std::int64_t samples, const SimOptions& options) {
  const SpineTreeSampler sampler(env, n, options.cap);
  return run_workers<SplitAcc>(
      samples, options, [n] { return SplitAcc(n); },
      [&](SplitAcc& acc, RngStream& rng) {
        sampler.sample(rng, acc.scratch);
        double x = 0.0;
        for (int j = 1; j <= n; ++j) {
          const auto idx = static_cast<std::size_t>(j - 1);
          const bool hit = acc.scratch.lj[idx] != 0;
          double tilde = 0.0;
          double right = 0.0;
          if (hit) {
            right = static_cast<double>(acc.scratch.rj[idx]);
            bool accepted = false;
            for (int attempt = 0; attempt < options.rejection_budget; ++attempt) {
              const auto s = sampler.split(j, rng);
              if (s.left == 0) {
                tilde = static_cast<double>(s.right);
                accepted = true;
                break;
              }
            }
            if (!accepted) ++acc.failures;
          }
          acc.tilde[idx].add(tilde);
          acc.right[idx].add(right);
          acc.ac[idx].add(hit ? 1.0 : 0.0);
          x += tilde + right;
        }
        acc.total.add(x);
      });
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  engine_.seed(seq);
}

OffspringSampler::OffspringSampler(const OffspringLaw& law) : law_(law) {
  if (law.kind() != OffspringLaw::Kind::ExplicitPmf) return;
  const auto& q = law.probs();
  const double mean = law.mean();
  if (!(mean > 0.0)) throw ZeroMeanError("size-biased sampling needs a positive mean");
  double c = 0.0;
  double cb = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    c += q[k];
    cb += static_cast<double>(k) * q[k] / mean;
    cdf_.push_back(c);
    biased_cdf_.push_back(cb);
  }
}

std::int64_t OffspringSampler::sample(RngStream& rng) const {
  switch (law_.kind()) {
    case OffspringLaw::Kind::ExplicitPmf:
      return draw_from_cdf(cdf_, rng.uniform() * cdf_.back());
    case OffspringLaw::Kind::Poisson: {
      std::poisson_distribution<std::int64_t> d(law_.lambda());
      return d(rng.engine());
    }
    case OffspringLaw::Kind::LinearFractional:
      if (rng.uniform() >= law_.a()) return 0;
      return 1 + geometric_failures(law_.p(), rng);
    case OffspringLaw::Kind::Symmetric: {
      const double u = rng.uniform();
      const double d = law_.delta();
      if (u < 0.5 * d) return 0;
      if (u < d) return 2;
      return 1;
    }
  }
  return 0;
}

std::pair<std::int64_t, std::int64_t> OffspringSampler::sample_size_biased(RngStream& rng) const {
  std::int64_t total = 0;
  switch (law_.kind()) {
    case OffspringLaw::Kind::ExplicitPmf:
      total = draw_from_cdf(biased_cdf_, rng.uniform() * biased_cdf_.back());
      break;
    case OffspringLaw::Kind::Poisson: {
      std::poisson_distribution<std::int64_t> d(law_.lambda());
      total = 1 + d(rng.engine());
      break;
    }
    case OffspringLaw::Kind::LinearFractional:
      // k p^2 (1-p)^{k-1}: one plus a negative binomial with two successes.
      total = 1 + geometric_failures(law_.p(), rng) + geometric_failures(law_.p(), rng);
      break;
    case OffspringLaw::Kind::Symmetric:
      total = rng.uniform() < law_.delta() ? 2 : 1;
      break;
  }
  std::uniform_int_distribution<std::int64_t> pick(1, total);
  return {total, pick(rng.engine())};
}

std::int64_t sample_offspring(const OffspringLaw& law, RngStream& rng) {
  return OffspringSampler(law).sample(rng);
}

std::pair<std::int64_t, std::int64_t> sample_size_biased_offspring(const OffspringLaw& law,
                                                                   RngStream& rng) {
  if (!(law.mean() > 0.0)) throw ZeroMeanError("size-biased sampling needs a positive mean");
  return OffspringSampler(law).sample_size_biased(rng);
}

std::vector<std::int64_t> sample_gw_path(const Environment& env, int n, RngStream& rng,
                                         std::int64_t cap) {
  require(n >= 0, "n must be nonnegative");
  std::vector<std::int64_t> z{1};
  for (int g = 1; g <= n; ++g) {
    const OffspringSampler sampler(env.law(g));
    std::int64_t next = 0;
    for (std::int64_t i = 0; i < z.back(); ++i) {
      next += sampler.sample(rng);
      if (next > cap) {
        throw CapError("population exceeded cap " + std::to_string(cap) + " at generation " +
                       std::to_string(g));
      }
    }
    z.push_back(next);
  }
  return z;
}

SpineTreeSampler::SpineTreeSampler(const Environment& env, int n, std::int64_t cap) : n_(n), cap_(cap) {
  require(n >= 0, "n must be nonnegative");
  require(cap >= 1, "population cap must be positive");
  samplers_.reserve(static_cast<std::size_t>(n));
  for (int g = 1; g <= n; ++g) samplers_.emplace_back(env.law(g));
}

std::int64_t SpineTreeSampler::evolve(std::int64_t count, int j, RngStream& rng) const {
  for (int g = j + 1; g <= n_ && count > 0; ++g) {
    const OffspringSampler& sampler = samplers_[static_cast<std::size_t>(g - 1)];
    std::int64_t next = 0;
    for (std::int64_t i = 0; i < count; ++i) {
      next += sampler.sample(rng);
      if (next > cap_) {
        throw CapError("population exceeded cap " + std::to_string(cap_) + " at generation " +
                       std::to_string(g));
      }
    }
    count = next;
  }
  return count;
}

SpineTreeSampler::Split SpineTreeSampler::split(int j, RngStream& rng) const {
  const auto [total, mark] = samplers_[static_cast<std::size_t>(j - 1)].sample_size_biased(rng);
  Split s;
  s.siblings = total - 1;
  s.left = evolve(mark - 1, j, rng);
  s.right = evolve(total - mark, j, rng);
  return s;
}

void SpineTreeSampler::sample(RngStream& rng, SpineSample& out) const {
  const auto n = static_cast<std::size_t>(n_);
  out.n = n_;
  out.lj.assign(n, 0);
  out.rj.assign(n, 0);
  out.sj.assign(n, 0);
  out.l = 0;
  out.r = 1;
  for (int j = 1; j <= n_; ++j) {
    const Split s = split(j, rng);
    const auto idx = static_cast<std::size_t>(j - 1);
    out.lj[idx] = s.left;
    out.rj[idx] = s.right;
    out.sj[idx] = s.siblings;
    out.l += s.left;
    out.r += s.right;
  }
  out.zdot = out.l + out.r;
  if (out.zdot > cap_) throw CapError("size-biased population exceeded cap " + std::to_string(cap_));
}

SpineSample sample_spine_tree(const Environment& env, int n, RngStream& rng, std::int64_t cap) {
  SpineSample out;
  SpineTreeSampler(env, n, cap).sample(rng, out);
  return out;
}

SpineLawReport estimate_spine_law(const Environment& env, int n, std::int64_t samples,
                                  const SimOptions& options) {
  struct Acc {
    std::vector<std::int64_t> all;
    std::vector<std::int64_t> l0;
    std::int64_t l0_count = 0;
    MeanVar zdot;
    SpineSample scratch;
    void merge(const Acc& o) {
      merge_hist(all, o.all);
      merge_hist(l0, o.l0);
      l0_count += o.l0_count;
      zdot.merge(o.zdot);
    }
  };
  const SpineTreeSampler sampler(env, n, options.cap);
  Acc acc = run_workers<Acc>(
      samples, options, [] { return Acc{}; },
      [&](Acc& a, RngStream& rng) {
        sampler.sample(rng, a.scratch);
        add_count(a.all, a.scratch.zdot);
        a.zdot.add(static_cast<double>(a.scratch.zdot));
        if (a.scratch.l == 0) {
          add_count(a.l0, a.scratch.zdot);
          ++a.l0_count;
        }
      });

  SpineLawReport report;
  report.n = n;
  report.samples = samples;
  const auto m = static_cast<double>(samples);
  report.zdot_mean = acc.zdot.mean(m);
  report.zdot_stderr = acc.zdot.stderr_of_mean(m);
  report.l0_samples = acc.l0_count;
  report.zdot_counts = std::move(acc.all);
  report.zdot_l0_counts = std::move(acc.l0);
  if (n == 0) {
    report.expected_mean = 1.0;
  } else {
    const MomentTrack track = moment_sequences(env, n);
    report.expected_mean = 1.0 + track.mu_rho(n);
  }
  const TruncatedPmf exact_z = law_of_zn(env, n);
  report.tv_size_biased = tv_distance(empirical_pmf(report.zdot_counts, samples), size_biased_law(exact_z));
  const ConditionalLaw y = conditional_law(env, n);
  report.tv_conditional = tv_distance(empirical_pmf(report.zdot_l0_counts, report.l0_samples), y.y);
  return report;
}

EquilibriumReport estimate_equilibrium_identity(const Environment& env, int n, std::int64_t samples,
                                                const SimOptions& options) {
  struct Acc {
    std::vector<double> values;
    SpineSample scratch;
    void merge(const Acc& o) { values.insert(values.end(), o.values.begin(), o.values.end()); }
  };
  const SpineTreeSampler sampler(env, n, options.cap);
  Acc acc = run_workers<Acc>(
      samples, options, [] { return Acc{}; },
      [&](Acc& a, RngStream& rng) {
        sampler.sample(rng, a.scratch);
        a.values.push_back(static_cast<double>(a.scratch.r) - rng.uniform());
      });
  const ConditionalLaw y = conditional_law(env, n);
  const EquilibriumCdf cdf(y.y);
  std::sort(acc.values.begin(), acc.values.end());
  const auto m = static_cast<double>(acc.values.size());
  double gap = 0.0;
  for (std::size_t i = 0; i < acc.values.size(); ++i) {
    const double f = cdf(acc.values[i]);
    gap = std::max({gap, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return {n, samples, gap};
}

MeanYYeReport estimate_meanyye_rhs(const Environment& env, int n, std::int64_t samples,
                                   const SimOptions& options) {
  const SplitAcc acc = run_splits(env, n, samples, options);
  MeanYYeReport report;
  report.n = n;
  report.samples = samples;
  const ConditionalLaw y = conditional_law(env, n);
  report.b = y.b;
  const auto m = static_cast<double>(samples);
  report.estimate = (2.0 / y.b) * (0.5 + acc.total.mean(m));
  report.standard_error = (2.0 / y.b) * acc.total.stderr_of_mean(m);
  report.rejection_failures = acc.failures;
  report.partial = acc.failures > 0;
  return report;
}

bool StepReport::any_violation() const {
  return std::any_of(rows.begin(), rows.end(), [](const StepRow& r) { return r.violation; });
}

StepReport check_step_inequalities(const Environment& env, int n, std::int64_t samples,
                                   const SimOptions& options) {
  require(n >= 1, "step checks need n >= 1");
  const SplitAcc acc = run_splits(env, n, samples, options);
  const MomentTrack track = moment_sequences(env, n);
  const std::vector<OffspringLaw> laws = env.laws(n);
  // surv[j] = P[Z^{Q_j}_{n-j} > 0] = 1 - f_{j,n}(0)
  std::vector<double> surv(static_cast<std::size_t>(n) + 1, 1.0);
  for (int l = n; l >= 1; --l) surv[l - 1] = laws[l - 1].complement(surv[l]);
  const double mu_n = std::exp(track.log_mu[n]);
  const auto m = static_cast<double>(samples);

  StepReport report;
  report.n = n;
  report.samples = samples;
  report.rejection_failures = acc.failures;
  for (int j = 1; j <= n; ++j) {
    const auto idx = static_cast<std::size_t>(j - 1);
    const OffspringLaw& law = laws[idx];
    const double f1 = track.f1[j];
    const double f2 = track.f2[j];
    const double f3 = track.f3[j];
    const double u = surv[j];
    StepRow row;
    row.j = j;
    // P[A_{n,j}] = (1 - f_j(x)) / (f_j'(1)(1 - x)) with x = f_{j,n}(0).
    row.p_ac_exact = linearization_gap(law, u) / (f1 * u);
    row.step1_lhs = acc.tilde[idx].mean(m);
    row.step1_se = acc.tilde[idx].stderr_of_mean(m);
    row.step1_rhs = mu_n * track.drho[j] * row.p_ac_exact;
    row.step2_lhs = acc.right[idx].mean(m);
    row.step2_se = acc.right[idx].stderr_of_mean(m);
    row.step2_rhs = mu_n * track.inv_mu(j) * (f3 + f2) / f1 * u;
    row.step3_lhs = acc.ac[idx].mean(m);
    row.step3_se = acc.ac[idx].stderr_of_mean(m);
    row.step3_rhs = f2 / f1 * u;
    row.survival = u;
    if (j == n) {
      row.step4_rhs = 1.0;
    } else {
      double c_min = std::numeric_limits<double>::infinity();
      for (int l = j + 1; l <= n; ++l) {
        const OffspringLaw& q = laws[static_cast<std::size_t>(l - 1)];
        const double at_one = track.f2[l] / (2.0 * track.f1[l] * track.f1[l]);
        if (at_one == 0.0) continue;
        c_min = std::min(c_min, shape_function_at_complement(q, surv[l]) / at_one);
      }
      double gap = 0.0;
      for (int l = j + 1; l <= n; ++l) gap += track.drho[l];
      const double denom = c_min * std::exp(track.log_mu[j]) * gap;
      row.step4_rhs = std::isfinite(c_min) && denom > 0.0 ? 2.0 / denom
                                                          : std::numeric_limits<double>::infinity();
    }
    row.violation = row.step1_lhs > row.step1_rhs + 3.0 * row.step1_se ||
                    row.step2_lhs > row.step2_rhs + 3.0 * row.step2_se ||
                    row.step3_lhs > row.step3_rhs + 3.0 * row.step3_se ||
                    row.survival > row.step4_rhs * (1.0 + 1e-12);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace gwve
