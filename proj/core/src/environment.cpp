#include "gwve/environment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "gwve/bounds.hpp"
#include "gwve/errors.hpp"

namespace gwve {

namespace {

constexpr double kMassTolerance = 1e-12;

std::string fmt(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

// e^z - 1 for complex z without cancellation near z = 0.
// With h = y/2: cos y = 1 - 2 sin^2 h and sin y = 2 sin h cos h, so one
// sincos and one expm1 cover both parts.
cplx expm1(cplx z) {
  const double em1 = std::expm1(z.real());
  const double hs = std::sin(0.5 * z.imag());
  const double hc = std::cos(0.5 * z.imag());
  const double versine = 2.0 * hs * hs;
  return {em1 * (1.0 - versine) - versine, (em1 + 1.0) * 2.0 * hs * hc};
}

}  // namespace

OffspringLaw OffspringLaw::explicit_pmf(std::vector<double> probs) {
  require(!probs.empty(), "explicit pmf must have at least one entry");
  for (std::size_t k = 0; k < probs.size(); ++k) {
    require(std::isfinite(probs[k]) && probs[k] >= 0.0,
            "explicit pmf entry " + std::to_string(k) + " must be a nonnegative finite number");
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  require(std::abs(total - 1.0) <= kMassTolerance,
          "explicit pmf mass " + fmt(total) + " differs from 1 by more than 1e-12");
  while (probs.size() > 1 && probs.back() == 0.0) probs.pop_back();

  OffspringLaw law;
  law.kind_ = Kind::ExplicitPmf;
  law.probs_ = std::move(probs);
  const auto& q = law.probs_;
  law.tails_.assign(q.size(), 0.0);
  for (std::size_t i = q.size() - 1; i-- > 0;) law.tails_[i] = law.tails_[i + 1] + q[i + 1];
  require(law.mean() > 0.0, "offspring mean must be strictly positive");
  return law;
}

OffspringLaw OffspringLaw::poisson(double lambda) {
  require(std::isfinite(lambda) && lambda > 0.0, "poisson lambda must be positive, got " + fmt(lambda));
  OffspringLaw law;
  law.kind_ = Kind::Poisson;
  law.x_ = lambda;
  return law;
}

OffspringLaw OffspringLaw::linear_fractional(double a, double p) {
  require(std::isfinite(a) && a > 0.0 && a <= 1.0,
          "linear fractional a must lie in (0,1], got " + fmt(a));
  require(std::isfinite(p) && p > 0.0 && p < 1.0,
          "linear fractional p must lie in (0,1), got " + fmt(p));
  OffspringLaw law;
  law.kind_ = Kind::LinearFractional;
  law.x_ = a;
  law.y_ = p;
  return law;
}

OffspringLaw OffspringLaw::symmetric(double delta) {
  require(std::isfinite(delta) && delta > 0.0 && delta <= 1.0,
          "symmetric delta must lie in (0,1], got " + fmt(delta));
  OffspringLaw law;
  law.kind_ = Kind::Symmetric;
  law.x_ = delta;
  return law;
}

std::string OffspringLaw::describe() const {
  switch (kind_) {
    case Kind::ExplicitPmf: {
      std::string s = "pmf[";
      for (std::size_t k = 0; k < probs_.size(); ++k) s += (k ? "," : "") + fmt(probs_[k]);
      return s + "]";
    }
    case Kind::Poisson:
      return "poisson(" + fmt(x_) + ")";
    case Kind::LinearFractional:
      return "linear_fractional(a=" + fmt(x_) + ",p=" + fmt(y_) + ")";
    case Kind::Symmetric:
      return "symmetric(delta=" + fmt(x_) + ")";
  }
  return {};
}

FactorialMoments OffspringLaw::moments() const {
  switch (kind_) {
    case Kind::ExplicitPmf: {
      FactorialMoments m;
      for (std::size_t k = 0; k < probs_.size(); ++k) {
        const double kk = static_cast<double>(k);
        m.f1 += kk * probs_[k];
        m.f2 += kk * (kk - 1.0) * probs_[k];
        m.f3 += kk * (kk - 1.0) * (kk - 2.0) * probs_[k];
      }
      return m;
    }
    case Kind::Poisson:
      return {x_, x_ * x_, x_ * x_ * x_};
    case Kind::LinearFractional: {
      const double a = x_;
      const double p = y_;
      const double q = 1.0 - p;
      return {a / p, 2.0 * a * q / (p * p), 6.0 * a * q * q / (p * p * p)};
    }
    case Kind::Symmetric:
      return {1.0, x_, 0.0};
  }
  return {};
}

double OffspringLaw::mean() const { return moments().f1; }

cplx OffspringLaw::pgf(cplx s) const {
  switch (kind_) {
    case Kind::ExplicitPmf: {
      cplx acc = probs_.back();
      for (std::size_t k = probs_.size() - 1; k-- > 0;) acc = acc * s + probs_[k];
      return acc;
    }
    case Kind::Poisson:
      return std::exp(x_ * (s - 1.0));
    case Kind::LinearFractional:
      return 1.0 - x_ * (1.0 - s) / (1.0 - (1.0 - y_) * s);
    case Kind::Symmetric:
      return 0.5 * x_ + (1.0 - x_) * s + 0.5 * x_ * s * s;
  }
  return {};
}

double OffspringLaw::pgf(double s) const { return pgf(cplx(s, 0.0)).real(); }

cplx OffspringLaw::complement(cplx u) const {
  switch (kind_) {
    case Kind::ExplicitPmf: {
      const cplx s = 1.0 - u;
      cplx acc = tails_.back();
      for (std::size_t i = tails_.size() - 1; i-- > 0;) acc = acc * s + tails_[i];
      return u * acc;
    }
    case Kind::Poisson:
      return -expm1(-x_ * u);
    case Kind::LinearFractional:
      return x_ * u / (y_ + (1.0 - y_) * u);
    case Kind::Symmetric:
      return u * (1.0 - 0.5 * x_ * u);
  }
  return {};
}

double OffspringLaw::complement(double u) const {
  switch (kind_) {
    case Kind::Poisson:
      return -std::expm1(-x_ * u);
    default:
      return complement(cplx(u, 0.0)).real();
  }
}

void OffspringLaw::apply_complement(std::span<cplx> u) const {
  switch (kind_) {
    case Kind::ExplicitPmf:
      for (auto& v : u) v = complement(v);
      return;
    case Kind::Poisson:
      for (auto& v : u) v = -expm1(-x_ * v);
      return;
    case Kind::LinearFractional:
      for (auto& v : u) v = x_ * v / (y_ + (1.0 - y_) * v);
      return;
    case Kind::Symmetric:
      for (auto& v : u) v = v * (1.0 - 0.5 * x_ * v);
      return;
  }
}

double OffspringLaw::pmf(std::int64_t k) const {
  if (k < 0) return 0.0;
  switch (kind_) {
    case Kind::ExplicitPmf:
      return static_cast<std::size_t>(k) < probs_.size() ? probs_[static_cast<std::size_t>(k)] : 0.0;
    case Kind::Poisson: {
      const double kk = static_cast<double>(k);
      return std::exp(-x_ + kk * std::log(x_) - std::lgamma(kk + 1.0));
    }
    case Kind::LinearFractional:
      if (k == 0) return 1.0 - x_;
      return x_ * y_ * std::pow(1.0 - y_, static_cast<double>(k - 1));
    case Kind::Symmetric:
      if (k == 0 || k == 2) return 0.5 * x_;
      return k == 1 ? 1.0 - x_ : 0.0;
  }
  return 0.0;
}

std::vector<double> OffspringLaw::pmf_prefix(std::size_t count) const {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) out[k] = pmf(static_cast<std::int64_t>(k));
  return out;
}

bool OffspringLaw::operator==(const OffspringLaw& other) const {
  return kind_ == other.kind_ && x_ == other.x_ && y_ == other.y_ && probs_ == other.probs_;
}

// ---------------------------------------------------------------------------

ParamSeq::ParamSeq(double value) : rest_(SeqExpr::constant(value)) {}

ParamSeq::ParamSeq(SeqExpr expr) : rest_(std::move(expr)) {}

ParamSeq::ParamSeq(std::vector<double> initial, std::optional<SeqExpr> rest)
    : initial_(std::move(initial)), rest_(std::move(rest)) {
  require(!initial_.empty() || rest_.has_value(), "parameter sequence is empty");
}

double ParamSeq::at(std::int64_t n) const {
  if (n < 1) throw ValidationError("parameter sequences are indexed from n = 1");
  if (static_cast<std::size_t>(n) <= initial_.size()) return initial_[static_cast<std::size_t>(n - 1)];
  if (!rest_) {
    throw ValidationError("parameter sequence has no value for n = " + std::to_string(n));
  }
  return rest_->eval(n);
}

std::string ParamSeq::to_string() const {
  if (initial_.empty()) return rest_->to_string();
  std::string s = "{initial:[";
  for (std::size_t i = 0; i < initial_.size(); ++i) s += (i ? "," : "") + fmt(initial_[i]);
  s += "]";
  if (rest_) s += ",rest:" + rest_->to_string();
  return s + "}";
}

std::string to_string(Family family) {
  switch (family) {
    case Family::Poisson:
      return "poisson";
    case Family::LinearFractional:
      return "linear_fractional";
    case Family::Symmetric:
      return "symmetric";
    case Family::ConstantPmf:
      return "constant_pmf";
    case Family::List:
      return "list";
    case Family::Custom:
      return "custom";
  }
  return "custom";
}

// ---------------------------------------------------------------------------

Environment::Environment(std::string name, Family family, Generator generator, int horizon)
    : name_(std::move(name)), family_(family), generator_(std::move(generator)), horizon_(horizon) {
  require(horizon_ >= 1, "environment horizon must be at least 1");
  require(static_cast<bool>(generator_), "environment generator is empty");
}

Environment Environment::constant(OffspringLaw law, int horizon, std::string name) {
  return Environment(std::move(name), Family::ConstantPmf, [law](int) { return law; }, horizon);
}

Environment Environment::poisson(ParamSeq lambda, int horizon, std::string name) {
  return Environment(std::move(name), Family::Poisson,
                     [lambda](int n) { return OffspringLaw::poisson(lambda.at(n)); }, horizon);
}

Environment Environment::linear_fractional(ParamSeq a, ParamSeq p, int horizon, std::string name) {
  return Environment(std::move(name), Family::LinearFractional,
                     [a, p](int n) { return OffspringLaw::linear_fractional(a.at(n), p.at(n)); },
                     horizon);
}

Environment Environment::symmetric(ParamSeq delta, int horizon, std::string name) {
  return Environment(std::move(name), Family::Symmetric,
                     [delta](int n) { return OffspringLaw::symmetric(delta.at(n)); }, horizon);
}

Environment Environment::list(std::vector<OffspringLaw> laws, Extension extension, int horizon,
                              std::string name) {
  require(!laws.empty(), "list environment needs at least one law");
  if (extension == Extension::Error) {
    require(static_cast<std::size_t>(horizon) <= laws.size(),
            "list environment with extension 'error' has " + std::to_string(laws.size()) +
                " laws but horizon " + std::to_string(horizon));
  }
  auto generator = [laws = std::move(laws), extension](int n) {
    const auto idx = static_cast<std::size_t>(n - 1);
    if (idx < laws.size()) return laws[idx];
    switch (extension) {
      case Extension::Cycle:
        return laws[idx % laws.size()];
      case Extension::HoldLast:
        return laws.back();
      case Extension::Error:
        break;
    }
    throw ValidationError("list environment has no law for generation " + std::to_string(n));
  };
  return Environment(std::move(name), Family::List, std::move(generator), horizon);
}

OffspringLaw Environment::law(int n) const {
  if (n < 1 || n > horizon_) {
    throw ValidationError("generation " + std::to_string(n) + " outside environment '" + name_ +
                          "' horizon [1, " + std::to_string(horizon_) + "]");
  }
  try {
    return generator_(n);
  } catch (const EvalError& e) {
    throw EvalError(e.kind(), "environment '" + name_ + "', generation " + std::to_string(n) +
                                  ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError("environment '" + name_ + "', generation " + std::to_string(n) + ": " +
                          e.what());
  }
}

std::vector<OffspringLaw> Environment::laws(int n) const {
  std::vector<OffspringLaw> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int k = 1; k <= n; ++k) out.push_back(law(k));
  return out;
}

bool Environment::all_linear_fractional() const {
  if (family_ == Family::LinearFractional) return true;
  if (family_ == Family::Poisson || family_ == Family::Symmetric) return false;
  for (int n = 1; n <= horizon_; ++n) {
    if (law(n).kind() != OffspringLaw::Kind::LinearFractional) return false;
  }
  return true;
}

Environment Environment::with_horizon(int horizon) const {
  Environment copy = *this;
  require(horizon >= 1, "environment horizon must be at least 1");
  if (family_ == Family::List) {
    // Validate eagerly so an 'error' extension fails here, not mid-computation.
    for (int n = horizon_ + 1; n <= horizon; ++n) (void)generator_(n);
  }
  copy.horizon_ = horizon;
  return copy;
}

// ---------------------------------------------------------------------------

namespace builtin {

Environment symmetric(double a, int horizon) {
  return Environment::symmetric(ParamSeq::parse("1/n^" + fmt(a)), horizon, "symmetric-a" + fmt(a));
}

Environment poisson_increasing(int horizon) {
  return Environment::poisson(ParamSeq({1.0}, SeqExpr::parse("n/(n-1)")), horizon,
                              "poisson-increasing");
}

Environment poisson_sqrt_decay(int horizon) {
  return Environment::poisson(ParamSeq::parse("exp(-sqrt(n))/exp(-sqrt(n-1))"), horizon,
                              "poisson-sqrt-decay");
}

Environment linear_fractional_constant(double a, double p, int horizon) {
  return Environment::linear_fractional(a, p, horizon, "lf-a" + fmt(a) + "-p" + fmt(p));
}

Environment linear_fractional_alternating(int horizon) {
  return Environment::linear_fractional(ParamSeq::parse("1/2+(-1)^n/(2*(n+1)^2)"), 0.5, horizon,
                                        "lf-alternating");
}

Environment binary_pmf(int horizon) {
  return Environment::constant(OffspringLaw::explicit_pmf({0.25, 0.5, 0.25}), horizon, "binary");
}

Environment delta_one(int horizon) {
  return Environment::constant(OffspringLaw::explicit_pmf({0.0, 1.0}), horizon, "delta1");
}

std::vector<std::string> names() {
  return {"symmetric-a0.5", "symmetric-a1",  "poisson-increasing", "poisson-sqrt-decay",
          "lf-critical",    "lf-alternating", "binary",            "delta1"};
}

Environment by_name(const std::string& name, int horizon) {
  if (name == "symmetric-a0.5") return symmetric(0.5, horizon);
  if (name == "symmetric-a1") return symmetric(1.0, horizon);
  if (name == "poisson-increasing") return poisson_increasing(horizon);
  if (name == "poisson-sqrt-decay") return poisson_sqrt_decay(horizon);
  if (name == "lf-critical") return linear_fractional_constant(0.5, 0.5, horizon);
  if (name == "lf-alternating") return linear_fractional_alternating(horizon);
  if (name == "binary") return binary_pmf(horizon);
  if (name == "delta1") return delta_one(horizon);
  throw ValidationError("unknown built-in environment '" + name + "'");
}

}  // namespace builtin

// ---------------------------------------------------------------------------

bool StarStarReport::all_hold() const {
  return std::all_of(holds.begin(), holds.end(), [](bool b) { return b; });
}

StarStarReport check_starstar(const Environment& env, int horizon, double c) {
  require(horizon >= 1, "check_starstar needs horizon >= 1");
  require(c > 0.0, "check_starstar needs c > 0");
  StarStarReport report;
  report.c = c;
  for (int n = 1; n <= horizon; ++n) {
    const FactorialMoments m = env.law(n).moments();
    const double scale = m.f2 * (1.0 + m.f1);
    double minimal = 0.0;
    if (scale > 0.0) {
      minimal = m.f3 / scale;
    } else if (m.f3 > 0.0) {
      minimal = std::numeric_limits<double>::infinity();
    }
    report.minimal_c.push_back(minimal);
    report.holds.push_back(m.f3 <= c * scale);
    report.sup_minimal_c = std::max(report.sup_minimal_c, minimal);
  }
  return report;
}

std::string CriticalityReport::label() const {
  std::ostringstream s;
  s << "finite-horizon evidence (n <= " << horizon << "): ";
  if (critical_evidence()) {
    s << "rho_{0,n} and mu_n*rho_{0,n} still growing; consistent with criticality";
  } else {
    s << "not critical over horizon";
    if (!rho_increasing_unbounded) s << " (rho_{0,n} not growing)";
    if (!mu_rho_increasing_unbounded) s << " (mu_n*rho_{0,n} not growing)";
  }
  return s.str();
}

CriticalityReport classify(const Environment& env, int horizon, double trend_epsilon,
                           std::optional<double> starstar_c) {
  require(horizon >= 3, "classify needs horizon >= 3");
  const MomentTrack track = moment_sequences(env, horizon);
  CriticalityReport report;
  report.horizon = horizon;
  report.trend_epsilon = trend_epsilon;
  for (int n = 1; n <= horizon; ++n) {
    report.mu.push_back(track.mu[n]);
    report.rho.push_back(track.rho[n]);
    report.mu_rho.push_back(track.mu_rho(n));
  }
  if (starstar_c) {
    report.starstar = check_starstar(env, horizon, *starstar_c);
  } else {
    const double sup = check_starstar(env, horizon, 1.0).sup_minimal_c;
    const double witness = std::isfinite(sup) && sup > 0.0 ? sup : 1.0;
    report.starstar = check_starstar(env, horizon, witness);
  }
  report.f1_min = *std::min_element(track.f1.begin() + 1, track.f1.end());
  report.f1_max = *std::max_element(track.f1.begin() + 1, track.f1.end());
  report.f2_min = *std::min_element(track.f2.begin() + 1, track.f2.end());

  const int half = (horizon + 1) / 2;
  auto grows = [&](double late, double early) { return late > early * (1.0 + trend_epsilon); };
  report.rho_increasing_unbounded = grows(track.rho[horizon], track.rho[half]);
  report.mu_rho_increasing_unbounded = grows(track.mu_rho(horizon), track.mu_rho(half));
  return report;
}

}  // namespace gwve
