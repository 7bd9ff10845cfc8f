#include "gwve/io.hpp"

#include <fstream>
#include <sstream>

#include "gwve/errors.hpp"
#include "json.hpp"

namespace gwve {

namespace {

using nlohmann::json;

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) schema(path + "." + key, "missing required field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) schema(path, "expected a number");
  return v.get<double>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) schema(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

SeqExpr expression(const json& v, const std::string& path) {
  try {
    return SeqExpr::parse(v.get<std::string>());
  } catch (const ValidationError& e) {
    schema(path, e.what());
  }
}

ParamSeq param(const json& v, const std::string& path) {
  if (v.is_number()) return ParamSeq(v.get<double>());
  if (v.is_string()) return ParamSeq(expression(v, path));
  if (v.is_object()) {
    std::vector<double> initial;
    std::optional<SeqExpr> rest;
    if (v.contains("initial")) initial = numbers(v["initial"], path + ".initial");
    if (v.contains("rest")) {
      if (!v["rest"].is_string()) schema(path + ".rest", "expected an expression string");
      rest = expression(v["rest"], path + ".rest");
    }
    for (const auto& [key, _] : v.items()) {
      if (key != "initial" && key != "rest") schema(path + "." + key, "unknown field");
    }
    if (initial.empty() && !rest) schema(path, "needs 'initial' or 'rest'");
    return ParamSeq(std::move(initial), std::move(rest));
  }
  schema(path, "expected a number, an expression string or {initial, rest}");
}

OffspringLaw law_from_json(const json& v, const std::string& path) {
  const json& kind = field(v, "kind", path);
  if (!kind.is_string()) schema(path + ".kind", "expected a string");
  const std::string k = kind.get<std::string>();
  try {
    if (k == "pmf") return OffspringLaw::explicit_pmf(numbers(field(v, "probs", path), path + ".probs"));
    if (k == "poisson") return OffspringLaw::poisson(number(field(v, "lambda", path), path + ".lambda"));
    if (k == "linear_fractional") {
      return OffspringLaw::linear_fractional(number(field(v, "a", path), path + ".a"),
                                             number(field(v, "p", path), path + ".p"));
    }
    if (k == "symmetric") return OffspringLaw::symmetric(number(field(v, "delta", path), path + ".delta"));
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind("$", 0) == 0) throw;
    schema(path, what);
  }
  schema(path + ".kind", "unknown law kind '" + k + "'");
}

Extension extension_from(const json& v, const std::string& path) {
  if (!v.is_string()) schema(path, "expected a string");
  const std::string s = v.get<std::string>();
  if (s == "error") return Extension::Error;
  if (s == "cycle") return Extension::Cycle;
  if (s == "hold_last") return Extension::HoldLast;
  schema(path, "unknown extension '" + s + "' (expected error, cycle or hold_last)");
}

json report_common(std::uint64_t seed, std::int64_t samples, int n) {
  json j;
  j["seed"] = seed;
  j["M"] = samples;
  j["n"] = n;
  return j;
}

}  // namespace

Environment parse_environment(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("$: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) schema("$", "expected an object");
  const json& fam = field(doc, "family", "$");
  if (!fam.is_string()) schema("$.family", "expected a string");
  const json& hz = field(doc, "horizon", "$");
  if (!hz.is_number_integer() || hz.get<std::int64_t>() < 1) {
    schema("$.horizon", "expected a positive integer");
  }
  const int horizon = hz.get<int>();
  const json& params = field(doc, "params", "$");
  if (!params.is_object()) schema("$.params", "expected an object");
  std::string name = fam.get<std::string>();
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) schema("$.name", "expected a string");
    name = doc["name"].get<std::string>();
  }
  const std::string family = fam.get<std::string>();
  Environment env = [&]() -> Environment {
    if (family == "poisson") {
      return Environment::poisson(param(field(params, "lambda", "$.params"), "$.params.lambda"), horizon, name);
    }
    if (family == "linear_fractional") {
      return Environment::linear_fractional(param(field(params, "a", "$.params"), "$.params.a"),
                                            param(field(params, "p", "$.params"), "$.params.p"), horizon,
                                            name);
    }
    if (family == "symmetric") {
      return Environment::symmetric(param(field(params, "delta", "$.params"), "$.params.delta"), horizon,
                                    name);
    }
    if (family == "constant_pmf") {
      try {
        return Environment::constant(
            OffspringLaw::explicit_pmf(numbers(field(params, "probs", "$.params"), "$.params.probs")),
            horizon, name);
      } catch (const ValidationError& e) {
        const std::string what = e.what();
        if (what.rfind("$", 0) == 0) throw;
        schema("$.params.probs", what);
      }
    }
    if (family == "list") {
      const json& laws = field(params, "laws", "$.params");
      if (!laws.is_array() || laws.empty()) schema("$.params.laws", "expected a nonempty array");
      std::vector<OffspringLaw> out;
      for (std::size_t i = 0; i < laws.size(); ++i) {
        out.push_back(law_from_json(laws[i], "$.params.laws[" + std::to_string(i) + "]"));
      }
      const Extension ext = params.contains("extension")
                                ? extension_from(params["extension"], "$.params.extension")
                                : Extension::Error;
      try {
        return Environment::list(std::move(out), ext, horizon, name);
      } catch (const ValidationError& e) {
        schema("$.params.laws", e.what());
      }
    }
    schema("$.family", "unknown family '" + family +
                           "' (expected poisson, linear_fractional, symmetric, constant_pmf or list)");
  }();
  // Every generation in the horizon must evaluate to a valid law.
  for (int n = 1; n <= horizon; ++n) (void)env.law(n);
  return env;
}

Environment load_environment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open environment file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_environment(buf.str());
}

void write_json(std::ostream& out, const CriticalityReport& r) {
  json j;
  j["horizon"] = r.horizon;
  j["mu"] = r.mu;
  j["rho"] = r.rho;
  j["mu_rho"] = r.mu_rho;
  std::vector<bool> holds = r.starstar.holds;
  j["starstar"] = {{"c", r.starstar.c},
                   {"holds", holds},
                   {"minimal_c", r.starstar.minimal_c},
                   {"sup_minimal_c", r.starstar.sup_minimal_c},
                   {"all_hold", r.starstar.all_hold()}};
  j["trend_flags"] = {{"rho_increasing_unbounded", r.rho_increasing_unbounded},
                      {"mu_rho_increasing_unbounded", r.mu_rho_increasing_unbounded},
                      {"epsilon", r.trend_epsilon}};
  j["f1_min"] = r.f1_min;
  j["f1_max"] = r.f1_max;
  j["f2_min"] = r.f2_min;
  j["label"] = r.label();
  j["note"] = "only the third-moment condition is checked; the regularity condition "
              "quantified over every epsilon has no finite certificate";
  out << j.dump(2) << '\n';
}

void write_json(std::ostream& out, const SpineLawReport& r, std::uint64_t seed) {
  json j = report_common(seed, r.samples, r.n);
  j["estimator"] = "spine-law";
  j["estimate"] = r.zdot_mean;
  j["stderr"] = r.zdot_stderr;
  j["expected_mean"] = r.expected_mean;
  j["tv_size_biased"] = r.tv_size_biased;
  j["tv_conditional"] = r.tv_conditional;
  j["l0_samples"] = r.l0_samples;
  out << j.dump(2) << '\n';
}

void write_json(std::ostream& out, const EquilibriumReport& r, std::uint64_t seed) {
  json j = report_common(seed, r.samples, r.n);
  j["estimator"] = "equilibrium";
  j["estimate"] = r.ks_gap;
  j["ks_gap"] = r.ks_gap;
  out << j.dump(2) << '\n';
}

void write_json(std::ostream& out, const MeanYYeReport& r, std::uint64_t seed) {
  json j = report_common(seed, r.samples, r.n);
  j["estimator"] = "meanyye";
  j["estimate"] = r.estimate;
  j["stderr"] = r.standard_error;
  j["b_n"] = r.b;
  j["rejection_failures"] = r.rejection_failures;
  j["partial"] = r.partial;
  out << j.dump(2) << '\n';
}

void write_json(std::ostream& out, const StepReport& r, std::uint64_t seed) {
  json j = report_common(seed, r.samples, r.n);
  j["estimator"] = "steps";
  j["rejection_failures"] = r.rejection_failures;
  j["any_violation"] = r.any_violation();
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"j", row.j},
                    {"step1", {{"estimate", row.step1_lhs}, {"stderr", row.step1_se}, {"rhs", row.step1_rhs}}},
                    {"step2", {{"estimate", row.step2_lhs}, {"stderr", row.step2_se}, {"rhs", row.step2_rhs}}},
                    {"step3", {{"estimate", row.step3_lhs}, {"stderr", row.step3_se}, {"rhs", row.step3_rhs}}},
                    {"p_ac_exact", row.p_ac_exact},
                    {"step4", {{"survival", row.survival}, {"rhs", row.step4_rhs}}},
                    {"violation", row.violation}});
  }
  j["rows"] = rows;
  out << j.dump(2) << '\n';
}

void write_histogram_csv(std::ostream& out, const std::vector<std::int64_t>& counts) {
  out << "k,count\n";
  for (std::size_t k = 0; k < counts.size(); ++k) out << k << ',' << counts[k] << '\n';
}

}  // namespace gwve
