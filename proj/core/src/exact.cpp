#include "gwve/exact.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

#include "gwve/errors.hpp"
#include "json.hpp"

namespace gwve {

namespace {

constexpr double kClipFloor = -1e-12;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSurvivalFloor = 1e-300;

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

void check_range(const Environment& env, int m, int n) {
  require(0 <= m && m <= n, "composition needs 0 <= m <= n, got m = " + std::to_string(m) +
                                ", n = " + std::to_string(n));
  require(n <= env.horizon(), "generation " + std::to_string(n) + " beyond environment horizon " +
                                  std::to_string(env.horizon()));
}

std::size_t next_pow2(double x) {
  const double capped = std::min(x, 0x1p62);
  return std::bit_ceil(static_cast<std::size_t>(std::max(2.0, std::ceil(capped))));
}

double excess(const OffspringLaw& law, double u) {
  switch (law.kind()) {
    case OffspringLaw::Kind::ExplicitPmf: {
      // u sum_i P[X > i] (1 - (1-u)^i)
      const auto& q = law.probs();
      double tail = 0.0;
      double acc = 0.0;
      const double log_s = std::log1p(-u);
      for (std::size_t i = q.size(); i-- > 1;) {
        tail += q[i];
        if (i > 1) acc += tail * -std::expm1(static_cast<double>(i - 1) * log_s);
      }
      return u * acc;
    }
    case OffspringLaw::Kind::Poisson: {
      const double x = law.lambda() * u;
      if (x > 0.5) return x + std::expm1(-x);
      // x - (1 - e^{-x}) = x^2/2 - x^3/6 + ...
      double term = x * x / 2.0;
      double sum = 0.0;
      for (int k = 2; term != 0.0 && k < 60; ++k) {
        sum += term;
        term *= -x / static_cast<double>(k + 1);
        if (std::abs(term) < 1e-18 * sum) break;
      }
      return sum;
    }
    case OffspringLaw::Kind::LinearFractional: {
      const double q = 1.0 - law.p();
      return law.a() * u * q * u / (law.p() * (law.p() + q * u));
    }
    case OffspringLaw::Kind::Symmetric:
      return 0.5 * law.delta() * u * u;
  }
  return 0.0;
}

// Truncated power-series product a * b mod s^K.
std::vector<double> series_mul(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t K = a.size();
  std::vector<double> out(K, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    if (a[i] == 0.0) continue;
    const double ai = a[i];
    for (std::size_t j = 0; i + j < K; ++j) out[i + j] += ai * b[j];
  }
  return out;
}

// f(c(s)) mod s^K. Every coefficient is a sum of nonnegative terms, so the
// prefix is exact up to rounding.
std::vector<double> series_compose(const OffspringLaw& law, const std::vector<double>& c) {
  const std::size_t K = c.size();
  switch (law.kind()) {
    case OffspringLaw::Kind::ExplicitPmf:
    case OffspringLaw::Kind::Symmetric: {
      const std::vector<double> q = law.kind() == OffspringLaw::Kind::Symmetric
                                        ? std::vector<double>{0.5 * law.delta(), 1.0 - law.delta(),
                                                              0.5 * law.delta()}
                                        : law.probs();
      std::vector<double> acc(K, 0.0);
      acc[0] = q.back();
      for (std::size_t d = q.size() - 1; d-- > 0;) {
        acc = series_mul(acc, c);
        acc[0] += q[d];
      }
      return acc;
    }
    case OffspringLaw::Kind::Poisson: {
      // exp(lambda (c - 1)) = exp(-lambda (1 - c0)) exp(A), A = lambda (c - c0).
      const double lambda = law.lambda();
      std::vector<double> e(K, 0.0);
      e[0] = 1.0;
      for (std::size_t k = 1; k < K; ++k) {
        double acc = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
          if (c[j] != 0.0) acc += static_cast<double>(j) * lambda * c[j] * e[k - j];
        }
        e[k] = acc / static_cast<double>(k);
      }
      const double scale = std::exp(-lambda * (1.0 - c[0]));
      for (auto& v : e) v *= scale;
      return e;
    }
    case OffspringLaw::Kind::LinearFractional: {
      // (1 - a) + a p c / (1 - q c)
      const double a = law.a();
      const double p = law.p();
      const double q = 1.0 - p;
      const double inv = 1.0 / (1.0 - q * c[0]);
      std::vector<double> r(K, 0.0);
      r[0] = inv;
      for (std::size_t k = 1; k < K; ++k) {
        double acc = 0.0;
        for (std::size_t j = 1; j <= k; ++j) {
          if (c[j] != 0.0) acc += c[j] * r[k - j];
        }
        r[k] = q * inv * acc;
      }
      std::vector<double> out = series_mul(c, r);
      for (auto& v : out) v *= a * p;
      out[0] += 1.0 - a;
      return out;
    }
  }
  return {};
}

// FFTW's planner is not reentrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
};

fftw_plan_s* plan_c2r(std::size_t K, fftw_complex* in, double* out) {
  std::lock_guard lock(planner_mutex());
  return fftw_plan_dft_c2r_1d(static_cast<int>(K), in, out, FFTW_ESTIMATE);
}
struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Conditional law of Z_n given survival via root-of-unity evaluation of the
// complement composition, without tolerance checks.
TruncatedPmf conditional_dft(const std::vector<OffspringLaw>& laws, double survival, double b,
                             std::size_t K) {
  require(K >= 2 && std::has_single_bit(K), "DFT truncation must be a power of two >= 2, got " +
                                                std::to_string(K));
  const std::size_t half = K / 2 + 1;
  std::vector<cplx> u(half);
  for (std::size_t j = 0; j < half; ++j) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(K);
    const double s = std::sin(0.5 * theta);
    u[j] = {2.0 * s * s, std::sin(theta)};  // 1 - e^{-i theta}
  }
  for (auto it = laws.rbegin(); it != laws.rend(); ++it) it->apply_complement(u);

  std::unique_ptr<fftw_complex, FftwFree> in(fftw_alloc_complex(half));
  std::unique_ptr<double, FftwFree> out(fftw_alloc_real(K));
  // c_j / survival = 1 - E[w_j^Y]; its negation is E[w_j^Y] minus the k = 0 term.
  for (std::size_t j = 0; j < half; ++j) {
    in.get()[j][0] = -u[j].real() / survival;
    in.get()[j][1] = -u[j].imag() / survival;
  }
  {
    std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan(plan_c2r(K, in.get(), out.get()));
    fftw_execute(plan.get());
  }

  TruncatedPmf y;
  y.provenance = Provenance::Dft;
  y.probs.assign(K, 0.0);
  const double inv_k = 1.0 / static_cast<double>(K);
  double weighted = 0.0;
  double weighted_abs = 0.0;
  for (std::size_t k = 1; k < K; ++k) {
    double v = out.get()[k] * inv_k;
    if (v < 0.0) {
      if (v < kClipFloor) {
        throw NumericalError("DFT round-off " + std::to_string(v) + " at k = " + std::to_string(k) +
                             " is below the clipping floor -1e-12");
      }
      y.max_clip = std::max(y.max_clip, -v);
      v = 0.0;
    }
    y.probs[k] = v;
    weighted += static_cast<double>(k) * v;
    weighted_abs += static_cast<double>(k) * std::abs(v);
  }
  // Aliasing moves mass from j >= K down to j mod K, so the mean deficit
  // D = b - sum k y_k equals K sum floor(j/K) P[Y = j] >= K P[Y >= K], and it
  // is also the cost of moving the aliased mass back.
  const double rounding = 16.0 * kEps * std::log2(static_cast<double>(K)) * (b + weighted_abs);
  const double deficit = std::max(0.0, b - weighted) + rounding;
  y.tail_mass = deficit / static_cast<double>(K);
  y.tail_moment = 2.0 * deficit;
  y.transport = deficit;
  return y;
}

// Y_n ~ geometric(p_hat) on {1, 2, ...} with p_hat = 2/(2 + mu rho).
TruncatedPmf conditional_closed_form(double p_hat, std::size_t K) {
  TruncatedPmf y;
  y.provenance = Provenance::ClosedForm;
  y.probs.assign(K, 0.0);
  const double log_q = std::log1p(-p_hat);
  for (std::size_t k = 1; k < K; ++k) y.probs[k] = p_hat * std::exp(static_cast<double>(k - 1) * log_q);
  const double tail = std::exp(static_cast<double>(K - 1) * log_q);
  y.tail_mass = tail;
  y.tail_moment = tail * (static_cast<double>(K) - 1.0 + 1.0 / p_hat);
  y.transport = tail * (1.0 - p_hat) / p_hat;
  return y;
}

LawMethod resolve(const Environment& env, int n, LawMethod method) {
  if (method != LawMethod::Auto) return method;
  return env.with_horizon(std::max(n, 1)).all_linear_fractional() ? LawMethod::ClosedForm
                                                                   : LawMethod::Dft;
}

void require_lf(const Environment& env, int n) {
  for (int k = 1; k <= n; ++k) {
    if (env.law(k).kind() != OffspringLaw::Kind::LinearFractional) {
      throw FamilyMismatch("closed-form law needs linear fractional generations; generation " +
                           std::to_string(k) + " is " + env.law(k).describe());
    }
  }
}

std::size_t auto_truncation(double b, double tolerance) {
  return next_pow2(std::max(64.0, b * (std::log(1.0 / tolerance) + 2.0)));
}

[[noreturn]] void truncation_failure(double tail, std::size_t K, double tolerance) {
  std::ostringstream msg;
  msg << "tail mass bound " << tail << " exceeds tolerance " << tolerance << " at truncation K = " << K;
  throw TruncationError(tail, K, msg.str());
}

struct ScaledLaw {
  TruncatedPmf y;
  double survival;
  double b;
};

// Shared by conditional_law and law_of_zn; check selects which tail is
// compared against the tolerance.
template <typename Check>
ScaledLaw conditional_impl(const Environment& env, int n, const LawOptions& options, Check&& check) {
  require(n >= 0, "n must be nonnegative");
  if (n > 0) check_range(env, 0, n);
  if (n == 0) {
    const std::size_t K = options.truncation.value_or(2);
    require(K >= 2, "truncation must be at least 2");
    TruncatedPmf y = TruncatedPmf::point_mass(1);
    y.probs.resize(K, 0.0);
    y.provenance = Provenance::ClosedForm;
    return {y, 1.0, 1.0};
  }
  const double survival = survival_prob(env, 0, n);
  if (!(survival > kSurvivalFloor)) {
    throw DomainError("survival probability " + std::to_string(survival) + " at n = " +
                      std::to_string(n) + " is below 1e-300; the conditional law is not computable");
  }
  const MomentTrack track = moment_sequences(env, n);
  const double b = std::exp(track.log_mu[n] - std::log(survival));
  const LawMethod method = resolve(env, n, options.method);

  if (method == LawMethod::ClosedForm) {
    require_lf(env, n);
    const double p_hat = 2.0 / (2.0 + track.mu_rho(n));
    std::size_t K = options.truncation.value_or(0);
    if (K == 0) {
      const double need = 1.0 + std::log(options.tolerance) / std::log1p(-p_hat);
      K = next_pow2(std::max(64.0, need + 1.0));
    }
    require(K >= 2, "truncation must be at least 2");
    ScaledLaw out{conditional_closed_form(p_hat, K), survival, b};
    check(out);
    return out;
  }
  if (method == LawMethod::Dft) {
    const std::vector<OffspringLaw> laws = env.laws(n);
    if (options.truncation) {
      ScaledLaw out{conditional_dft(laws, survival, b, *options.truncation), survival, b};
      check(out);
      return out;
    }
    for (std::size_t K = auto_truncation(b, options.tolerance);; K *= 2) {
      ScaledLaw out{conditional_dft(laws, survival, b, K), survival, b};
      try {
        check(out);
        return out;
      } catch (const TruncationError&) {
        if (2 * K > options.max_truncation) throw;
      }
    }
  }
  throw ValidationError("convolution path computes the law of Z_n; condition it explicitly");
}

TruncatedPmf scale_to_zn(const ScaledLaw& law) {
  TruncatedPmf z = law.y;
  const double s = law.survival;
  for (auto& v : z.probs) v *= s;
  z.probs[0] = 1.0 - s;
  z.tail_mass *= s;
  z.tail_moment *= s;
  z.transport *= s;
  return z;
}

TruncatedPmf convolution_law(const Environment& env, int n, std::size_t K) {
  require(K >= 2, "truncation must be at least 2");
  std::vector<double> c(K, 0.0);
  c[1] = 1.0;
  for (int l = n; l >= 1; --l) c = series_compose(env.law(l), c);
  TruncatedPmf z;
  z.provenance = Provenance::Convolution;
  z.probs = std::move(c);
  const double mu = n == 0 ? 1.0 : std::exp(moment_sequences(env, n).log_mu[n]);
  z.tail_mass = std::max(0.0, 1.0 - z.mass());
  z.tail_moment = std::max(0.0, mu - z.prefix_mean()) + 4.0 * kEps * mu;
  z.transport = z.tail_moment;
  return z;
}

}  // namespace

double linearization_gap(const OffspringLaw& law, double u) {
  require(u >= 0.0 && u <= 1.0, "linearization gap argument must lie in [0, 1]");
  return excess(law, u);
}

std::string to_string(Provenance provenance) {
  switch (provenance) {
    case Provenance::Dft:
      return "dft";
    case Provenance::Convolution:
      return "convolution";
    case Provenance::ClosedForm:
      return "closed-form";
    case Provenance::Empirical:
      return "empirical";
    case Provenance::Transform:
      return "transform";
  }
  return "transform";
}

double TruncatedPmf::mass() const {
  // Summed from the small end of the tail upward for accuracy.
  double total = 0.0;
  for (std::size_t k = probs.size(); k-- > 0;) total += probs[k];
  return total;
}

double TruncatedPmf::prefix_mean() const {
  double total = 0.0;
  for (std::size_t k = probs.size(); k-- > 1;) total += static_cast<double>(k) * probs[k];
  return total;
}

double TruncatedPmf::prefix_second_factorial() const {
  double total = 0.0;
  for (std::size_t k = probs.size(); k-- > 2;) {
    const double kk = static_cast<double>(k);
    total += kk * (kk - 1.0) * probs[k];
  }
  return total;
}

double TruncatedPmf::residual() const { return std::max(0.0, 1.0 - mass()); }

double TruncatedPmf::stored_mean() const {
  return prefix_mean() + static_cast<double>(probs.size()) * residual();
}

TruncatedPmf TruncatedPmf::point_mass(std::size_t k) {
  TruncatedPmf p;
  p.probs.assign(k + 1, 0.0);
  p.probs[k] = 1.0;
  p.provenance = Provenance::ClosedForm;
  return p;
}

TruncatedPmf TruncatedPmf::from_probs(std::vector<double> probs, Provenance provenance) {
  require(!probs.empty(), "pmf needs at least one entry");
  for (double v : probs) require(std::isfinite(v) && v >= 0.0, "pmf entries must be nonnegative");
  TruncatedPmf p;
  p.probs = std::move(probs);
  p.provenance = provenance;
  const double total = p.mass();
  require(total <= 1.0 + 1e-9, "pmf mass exceeds one");
  p.tail_mass = std::max(0.0, 1.0 - total);
  p.tail_moment = p.tail_mass > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  p.transport = p.tail_moment;
  return p;
}

void TruncatedPmf::write_csv(std::ostream& out) const {
  const auto old = out.precision(17);
  out << "k,prob\n";
  for (std::size_t k = 0; k < probs.size(); ++k) out << k << ',' << probs[k] << '\n';
  out.precision(old);
}

void TruncatedPmf::write_json(std::ostream& out) const {
  nlohmann::json j;
  j["probs"] = probs;
  j["tail_mass"] = tail_mass;
  j["provenance"] = to_string(provenance);
  j["truncation"] = probs.size();
  j["max_clip"] = max_clip;
  out << j.dump() << '\n';
}

cplx compose_pgf(const Environment& env, int m, int n, cplx s) {
  check_range(env, m, n);
  for (int l = n; l > m; --l) s = env.law(l).pgf(s);
  return s;
}

double compose_pgf(const Environment& env, int m, int n, double s) {
  check_range(env, m, n);
  for (int l = n; l > m; --l) s = env.law(l).pgf(s);
  return s;
}

cplx compose_complement(const Environment& env, int m, int n, cplx u) {
  check_range(env, m, n);
  for (int l = n; l > m; --l) u = env.law(l).complement(u);
  return u;
}

double compose_complement(const Environment& env, int m, int n, double u) {
  check_range(env, m, n);
  for (int l = n; l > m; --l) u = env.law(l).complement(u);
  return u;
}

double survival_prob(const Environment& env, int j, int n) {
  if (j == n) {
    check_range(env, j, n);
    return 1.0;
  }
  return compose_complement(env, j, n, 1.0);
}

ConditionalLaw conditional_law(const Environment& env, int n, const LawOptions& options) {
  auto check = [&](const ScaledLaw& law) {
    if (law.y.tail_mass > options.tolerance) {
      truncation_failure(law.y.tail_mass, law.y.truncation(), options.tolerance);
    }
  };
  ScaledLaw law = conditional_impl(env, n, options, check);
  return {std::move(law.y), law.b, law.survival};
}

TruncatedPmf law_of_zn(const Environment& env, int n, const LawOptions& options) {
  require(n >= 0, "n must be nonnegative");
  if (options.method == LawMethod::Convolution) {
    if (n > 0) check_range(env, 0, n);
    TruncatedPmf z = convolution_law(env, n, options.truncation.value_or(4096));
    if (z.tail_mass > options.tolerance) {
      truncation_failure(z.tail_mass, z.truncation(), options.tolerance);
    }
    return z;
  }
  auto check = [&](const ScaledLaw& law) {
    const double tail = law.y.tail_mass * law.survival;
    if (tail > options.tolerance) truncation_failure(tail, law.y.truncation(), options.tolerance);
  };
  if (n == 0) {
    TruncatedPmf z = conditional_impl(env, 0, options, check).y;
    return z;
  }
  return scale_to_zn(conditional_impl(env, n, options, check));
}

std::vector<double> survival_curve(const Environment& env, int horizon) {
  require(horizon >= 0, "horizon must be nonnegative");
  if (horizon > 0) check_range(env, 0, horizon);
  const std::vector<OffspringLaw> laws = env.laws(horizon);
  std::vector<double> out(static_cast<std::size_t>(horizon) + 1, 1.0);
  for (int n = 1; n <= horizon; ++n) {
    double u = 1.0;
    for (int l = n; l > 0; --l) u = laws[static_cast<std::size_t>(l - 1)].complement(u);
    out[static_cast<std::size_t>(n)] = u;
  }
  return out;
}

void fill_b(MomentTrack& track, const Environment& env) {
  const std::vector<double> survival = survival_curve(env, track.horizon);
  track.b.assign(static_cast<std::size_t>(track.horizon) + 1, 1.0);
  for (int n = 1; n <= track.horizon; ++n) {
    track.b[n] = std::exp(track.log_mu[n] - std::log(survival[static_cast<std::size_t>(n)]));
  }
}

TruncatedPmf size_biased_law(const TruncatedPmf& pmf) {
  const double m = pmf.prefix_mean();
  if (!(m > 0.0)) throw ZeroMeanError("size-biased law needs a positive mean");
  TruncatedPmf out;
  out.provenance = Provenance::Transform;
  out.probs.assign(pmf.probs.size(), 0.0);
  for (std::size_t k = 1; k < pmf.probs.size(); ++k) {
    out.probs[k] = static_cast<double>(k) * pmf.probs[k] / m;
  }
  out.tail_mass = pmf.tail_moment / m;
  out.tail_moment = out.tail_mass > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  out.transport = out.tail_moment;
  return out;
}

EquilibriumCdf::EquilibriumCdf(const TruncatedPmf& pmf) {
  const std::size_t K = pmf.probs.size();
  survival_.assign(K, 0.0);
  double s = pmf.residual();
  for (std::size_t k = K; k-- > 0;) {
    survival_[k] = s;
    s += pmf.probs[k];
  }
  integral_.assign(K + 1, 0.0);
  for (std::size_t k = 0; k < K; ++k) integral_[k + 1] = integral_[k] + survival_[k];
  mean_ = integral_[K];
  if (!(mean_ > 0.0)) throw ZeroMeanError("equilibrium law needs a positive mean");
}

double EquilibriumCdf::operator()(double x) const {
  if (!(x > 0.0)) return 0.0;
  const double K = static_cast<double>(survival_.size());
  if (x >= K) return 1.0;
  const auto k = static_cast<std::size_t>(x);
  const double frac = x - static_cast<double>(k);
  return std::min(1.0, (integral_[k] + frac * survival_[k]) / mean_);
}

double equilibrium_cdf(const TruncatedPmf& pmf, double x) { return EquilibriumCdf(pmf)(x); }

double shape_function_at_complement(const OffspringLaw& law, double u) {
  require(u >= 0.0 && u <= 1.0, "shape function argument must lie in [0, 1]");
  const FactorialMoments m = law.moments();
  if (u < kShapeThreshold) return m.f2 / (2.0 * m.f1 * m.f1);
  const double g = law.complement(u);
  if (!(g > 0.0)) throw DegenerateLawError("f(s) = 1 for s < 1; the shape function is undefined");
  // 1/g - 1/(f' u) = (f' u - g) / (g f' u)
  return excess(law, u) / (g * m.f1 * u);
}

double shape_function(const OffspringLaw& law, double s) {
  require(s >= 0.0 && s <= 1.0, "shape function argument must lie in [0, 1]");
  return shape_function_at_complement(law, 1.0 - s);
}

double composed_shape(const Environment& env, int k, int n, double s) {
  require(0 <= k && k < n, "composed shape needs 0 <= k < n");
  require(s >= 0.0 && s <= 1.0, "composed shape argument must lie in [0, 1]");
  check_range(env, k, n);
  const MomentTrack track = moment_sequences(env, n);
  double u = 1.0 - s;
  double total = 0.0;
  for (int l = n; l > k; --l) {
    const OffspringLaw law = env.law(l);
    const double ratio = std::exp(track.log_mu[k] - track.log_mu[l - 1]);
    total += shape_function_at_complement(law, u) * ratio;
    u = law.complement(u);
  }
  return total;
}

double composed_shape_direct(const Environment& env, int k, int n, double s) {
  require(0 <= k && k < n, "composed shape needs 0 <= k < n");
  require(s >= 0.0 && s < 1.0, "direct composed shape needs s in [0, 1)");
  const MomentTrack track = moment_sequences(env, n);
  const double u = compose_complement(env, k, n, 1.0 - s);
  return 1.0 / u - std::exp(track.log_mu[k] - track.log_mu[n]) / (1.0 - s);
}

}  // namespace gwve
