#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "gwve/bounds.hpp"
#include "gwve/environment.hpp"
#include "gwve/errors.hpp"
#include "gwve/exact.hpp"
#include "gwve/io.hpp"
#include "gwve/spine.hpp"
#include "gwve/wasserstein.hpp"
#include "json.hpp"

namespace gwve::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunConfig {
  std::string command;
  std::string env_path;
  std::string builtin;
  std::optional<int> n;
  std::optional<int> n_max;
  std::optional<std::size_t> trunc;
  std::int64_t samples = 100'000;
  std::uint64_t seed = 1;
  int workers = 8;
  std::string out;
  std::string format = "csv";
  std::optional<double> tol;
  std::string method = "auto";
  std::string estimator = "spine-law";
  std::vector<int> n_list;
  std::vector<std::string> examples;
  double eps = 0.05;
  std::optional<double> starstar_c;
};

Environment load(const RunConfig& cfg, int needed) {
  if (!cfg.env_path.empty() && !cfg.builtin.empty()) {
    throw ValidationError("--env and --builtin are mutually exclusive");
  }
  if (!cfg.env_path.empty()) return load_environment(cfg.env_path);
  if (!cfg.builtin.empty()) return builtin::by_name(cfg.builtin, std::max(needed, 1));
  throw ValidationError("one of --env or --builtin is required");
}

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

json num(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

// Writes to --out when given, else to the command's stdout.
void emit(const RunConfig& cfg, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (cfg.out.empty()) {
    body(out);
    return;
  }
  const fs::path path(cfg.out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + cfg.out + "'");
  body(f);
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot write '" + path.string() + "'");
  body(f);
}

fs::path out_dir(const RunConfig& cfg) {
  if (cfg.out.empty()) throw ValidationError("--out DIR is required for this command");
  fs::create_directories(cfg.out);
  return cfg.out;
}

LawOptions law_options(const RunConfig& cfg) {
  LawOptions opts;
  if (cfg.trunc) opts.truncation = *cfg.trunc;
  if (cfg.tol) opts.tolerance = *cfg.tol;
  if (cfg.method == "dft") opts.method = LawMethod::Dft;
  else if (cfg.method == "convolution") opts.method = LawMethod::Convolution;
  else if (cfg.method == "closed-form") opts.method = LawMethod::ClosedForm;
  return opts;
}

int cmd_classify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Environment env = load(cfg, cfg.n_max.value_or(100));
  const int horizon = cfg.n_max.value_or(env.horizon());
  const CriticalityReport r = classify(env, horizon, cfg.eps, cfg.starstar_c);
  if (!r.critical_evidence()) err << "warning: not critical over horizon " << horizon << '\n';
  emit(cfg, out, [&](std::ostream& o) {
    if (cfg.format == "json") {
      write_json(o, r);
      return;
    }
    o << "n,mu,rho,mu_rho,starstar_holds,minimal_c\n";
    for (int n = 1; n <= horizon; ++n) {
      const auto i = static_cast<std::size_t>(n - 1);
      o << n << ',' << fmt(r.mu[i]) << ',' << fmt(r.rho[i]) << ',' << fmt(r.mu_rho[i]) << ','
        << (r.starstar.holds[i] ? 1 : 0) << ',' << fmt(r.starstar.minimal_c[i]) << '\n';
    }
  });
  return kOk;
}

int cmd_exact(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (!cfg.n) throw ValidationError("--n is required");
  if (cfg.trunc && (*cfg.trunc & (*cfg.trunc - 1)) != 0) {
    throw ValidationError("--trunc must be a power of two");
  }
  const int n = *cfg.n;
  const Environment env = load(cfg, n);
  const LawOptions opts = law_options(cfg);
  const TruncatedPmf z = law_of_zn(env, n, opts);
  const ConditionalLaw c = conditional_law(env, n, opts);

  json summary;
  summary["n"] = n;
  summary["environment"] = env.name();
  summary["survival"] = num(c.survival);
  summary["b_n"] = num(c.b);
  summary["truncation"] = z.truncation();
  summary["provenance"] = to_string(z.provenance);
  summary["tail_mass"] = num(z.tail_mass);
  summary["conditional_tail_mass"] = num(c.y.tail_mass);
  summary["max_clip"] = num(std::max(z.max_clip, c.y.max_clip));

  if (cfg.out.empty()) {
    out << summary.dump(2) << '\n';
    return kOk;
  }
  const fs::path dir = out_dir(cfg);
  const bool as_json = cfg.format == "json";
  const std::string ext = as_json ? ".json" : ".csv";
  write_file(dir / ("zn" + ext), [&](std::ostream& o) { as_json ? z.write_json(o) : z.write_csv(o); });
  write_file(dir / ("yn" + ext), [&](std::ostream& o) { as_json ? c.y.write_json(o) : c.y.write_csv(o); });
  write_file(dir / "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  return kOk;
}

int cmd_bounds(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const int horizon = cfg.n_max.value_or(cfg.n.value_or(0));
  if (horizon < 2) throw ValidationError("r_n defined for n >= 2 (got --n-max " + std::to_string(horizon) + ")");
  const Environment env = load(cfg, horizon);
  const RateBoundReport report = rate_bound_report(env, horizon);
  emit(cfg, out, [&](std::ostream& o) {
    if (cfg.format != "json") {
      report.write_csv(o);
      return;
    }
    json rows = json::array();
    for (const auto& r : report.rows) {
      json j = {{"n", r.n},
                {"r_n", num(r.r_n)},
                {"s_n", num(r.s_n)},
                {"s_negative_log", r.s_negative_log},
                {"thm4_shape", num(r.thm4_shape)},
                {"thm5_shape", num(r.thm5_shape)},
                {"thm5_warning", r.thm5_warning},
                {"cor_shape", num(r.cor_shape)},
                {"cor_warning", r.cor_warning}};
      if (r.lf_bound) j["lf_exact_bound"] = num(*r.lf_bound);
      rows.push_back(j);
    }
    o << rows.dump(2) << '\n';
  });
  return kOk;
}

struct DistanceRow {
  int n = 0;
  double dw = kNaN;
  double truncation_bound = kNaN;
  double thm4_shape = kNaN;
  std::string status = "ok";
};

DistanceRow distance_row(const Environment& env, const MomentTrack& track, int n, const LawOptions& opts) {
  DistanceRow row;
  row.n = n;
  if (n >= 2) row.thm4_shape = theorem4_shape(track, rn(track, n), n);
  try {
    const ConditionalLaw c = conditional_law(env, n, opts);
    const DistanceResult d = dw_scaled_pmf_vs_exp(c.y, c.b);
    row.dw = d.value;
    row.truncation_bound = d.truncation_bound;
  } catch (const TruncationError& e) {
    row.status = "truncation(suggest K=" + std::to_string(e.suggested_truncation()) + ")";
  } catch (const TailTooHeavy&) {
    row.status = "tail-too-heavy";
  } catch (const DomainError&) {
    row.status = "survival-underflow";
  }
  return row;
}

int cmd_wasserstein(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<int> ns = cfg.n_list;
  if (ns.empty()) {
    if (cfg.n_max) {
      for (int n = 1; n <= *cfg.n_max; ++n) ns.push_back(n);
    } else if (cfg.n) {
      ns.push_back(*cfg.n);
    } else {
      throw ValidationError("one of --n, --n-max or --n-list is required");
    }
  }
  for (int n : ns) {
    if (n < 1) throw ValidationError("--n-list entries must be positive");
  }
  const int top = *std::max_element(ns.begin(), ns.end());
  const Environment env = load(cfg, top);
  const MomentTrack track = moment_sequences(env, top);
  const LawOptions opts = law_options(cfg);
  std::vector<DistanceRow> rows;
  for (int n : ns) {
    rows.push_back(distance_row(env, track, n, opts));
    if (rows.back().status != "ok") err << "n=" << n << ": " << rows.back().status << '\n';
  }
  emit(cfg, out, [&](std::ostream& o) {
    if (cfg.format == "json") {
      json arr = json::array();
      for (const auto& r : rows) {
        arr.push_back({{"n", r.n},
                       {"dw", num(r.dw)},
                       {"truncation_bound", num(r.truncation_bound)},
                       {"thm4_shape", num(r.thm4_shape)},
                       {"ratio", num(r.dw / r.thm4_shape)},
                       {"status", r.status}});
      }
      o << arr.dump(2) << '\n';
      return;
    }
    o << "n,dw,truncation_bound,thm4_shape,ratio,status\n";
    for (const auto& r : rows) {
      o << r.n << ',' << fmt(r.dw) << ',' << fmt(r.truncation_bound) << ',' << fmt(r.thm4_shape) << ','
        << fmt(r.dw / r.thm4_shape) << ',' << r.status << '\n';
    }
  });
  return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (!cfg.n) throw ValidationError("--n is required");
  const int n = *cfg.n;
  const Environment env = load(cfg, n);
  SimOptions opts;
  opts.seed = cfg.seed;
  opts.workers = cfg.workers;
  std::ostringstream report;
  std::vector<std::pair<std::string, std::vector<std::int64_t>>> histograms;
  if (cfg.estimator == "spine-law") {
    const SpineLawReport r = estimate_spine_law(env, n, cfg.samples, opts);
    write_json(report, r, cfg.seed);
    histograms.emplace_back("zdot_hist.csv", r.zdot_counts);
    histograms.emplace_back("zdot_l0_hist.csv", r.zdot_l0_counts);
  } else if (cfg.estimator == "equilibrium") {
    write_json(report, estimate_equilibrium_identity(env, n, cfg.samples, opts), cfg.seed);
  } else if (cfg.estimator == "meanyye") {
    write_json(report, estimate_meanyye_rhs(env, n, cfg.samples, opts), cfg.seed);
  } else {
    write_json(report, check_step_inequalities(env, n, cfg.samples, opts), cfg.seed);
  }
  if (cfg.out.empty()) {
    out << report.str();
    return kOk;
  }
  const fs::path dir = out_dir(cfg);
  write_file(dir / (cfg.estimator + ".json"), [&](std::ostream& o) { o << report.str(); });
  for (const auto& [name, counts] : histograms) {
    write_file(dir / name, [&](std::ostream& o) { write_histogram_csv(o, counts); });
  }
  return kOk;
}

int cmd_reproduce(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const fs::path dir = out_dir(cfg);
  std::vector<std::string> ids = cfg.examples;
  if (ids.empty()) ids = {"symmetric", "poisson-increasing", "poisson-sqrt-decay", "lf-alternating"};
  json summary = json::array();
  for (const auto& id : ids) {
    const ExampleTable t = reproduce_example(id, cfg.n_max.value_or(1 << 30));
    const std::string file = id + ".csv";
    write_file(dir / file, [&](std::ostream& o) { t.write_csv(o); });
    for (const auto& r : t.rows) {
      if (r.status != "ok") err << "example " << id << " n=" << r.n << ": " << r.status << '\n';
    }
    summary.push_back({{"example", id},
                       {"environment", t.environment},
                       {"file", file},
                       {"diagnostic", t.diagnostic},
                       {"diagnostic_max", num(t.diagnostic_max())},
                       {"diagnostic_spread", num(t.diagnostic_spread())},
                       {"shape_spread", num(t.shape_spread())}});
  }
  write_file(dir / "summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  out << summary.dump(2) << '\n';
  return kOk;
}

std::vector<int> grid(std::initializer_list<int> values, int n_max) {
  std::vector<int> out;
  for (int v : values) {
    if (v <= n_max) out.push_back(v);
  }
  return out;
}

}  // namespace

double ExampleTable::diagnostic_spread() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    if (!r.dw) continue;
    lo = std::min(lo, r.diagnostic);
    hi = std::max(hi, r.diagnostic);
  }
  return hi > 0.0 ? hi / lo : kNaN;
}

double ExampleTable::shape_spread() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.shape_diagnostic)) continue;
    lo = std::min(lo, r.shape_diagnostic);
    hi = std::max(hi, r.shape_diagnostic);
  }
  return hi > 0.0 ? hi / lo : kNaN;
}

double ExampleTable::diagnostic_max() const {
  double hi = kNaN;
  for (const auto& r : rows) {
    if (r.dw && !(r.diagnostic <= hi)) hi = r.diagnostic;
  }
  return hi;
}

void ExampleTable::write_csv(std::ostream& out) const {
  out << "n,mu,rho,mu_rho,r_n,s_n,thm4_shape,thm5_shape,thm5_warning,cor_shape,dw,truncation_bound,"
         "status,"
      << diagnostic << ",thm4_shape_diagnostic\n";
  for (const auto& r : rows) {
    out << r.n << ',' << fmt(r.mu) << ',' << fmt(r.rho) << ',' << fmt(r.mu_rho) << ',' << fmt(r.r_n) << ','
        << fmt(r.s_n) << ',' << fmt(r.thm4_shape) << ',' << fmt(r.thm5_shape) << ',' << (r.thm5_warning ? 1 : 0)
        << ',' << fmt(r.cor_shape) << ',' << fmt(r.dw.value_or(kNaN)) << ',' << fmt(r.truncation_bound) << ','
        << r.status << ',' << fmt(r.dw ? r.diagnostic : kNaN) << ',' << fmt(r.shape_diagnostic) << '\n';
  }
}

ExampleTable reproduce_example(const std::string& id, int n_max) {
  ExampleTable t;
  t.id = id;
  std::vector<int> ns;
  std::function<double(int, const MomentTrack&)> normalizer;
  if (id == "symmetric") {
    t.environment = "symmetric-a0.5";
    t.diagnostic = "dw*n^a";
    ns = grid({25, 50, 100, 200, 400}, n_max);
    normalizer = [](int n, const MomentTrack&) { return std::sqrt(static_cast<double>(n)); };
  } else if (id == "poisson-increasing") {
    t.environment = "poisson-increasing";
    t.diagnostic = "dw*log(n)";
    ns = grid({16, 32, 64, 128, 256, 512, 1024, 2048, 4096}, n_max);
    normalizer = [](int n, const MomentTrack&) { return std::log(static_cast<double>(n)); };
  } else if (id == "poisson-sqrt-decay") {
    t.environment = "poisson-sqrt-decay";
    t.diagnostic = "dw*sqrt(n)/log(sqrt(n))";
    ns = grid({16, 32, 64, 128, 256, 512, 1024}, n_max);
    normalizer = [](int n, const MomentTrack&) {
      const double r = std::sqrt(static_cast<double>(n));
      return r / std::log(r);
    };
  } else if (id == "lf-alternating") {
    t.environment = "lf-alternating";
    t.diagnostic = "dw*(2+mu*rho)/4";
    for (int n = 1; n <= std::min(256, n_max); ++n) ns.push_back(n);
    normalizer = [](int n, const MomentTrack& tr) { return (2.0 + tr.mu_rho(n)) / 4.0; };
  } else {
    throw ValidationError("unknown example '" + id + "' (expected symmetric, poisson-increasing, poisson-sqrt-decay or lf-alternating)");
  }
  if (ns.empty()) return t;

  const int top = ns.back();
  const Environment env = builtin::by_name(t.environment, top);
  const MomentTrack track = moment_sequences(env, top);
  const std::vector<double> s = sn_batch(track, top);
  for (int n : ns) {
    ExampleRow row;
    row.n = n;
    row.mu = std::exp(track.log_mu[static_cast<std::size_t>(n)]);
    row.rho = track.rho[static_cast<std::size_t>(n)];
    row.mu_rho = track.mu_rho(n);
    row.s_n = s[static_cast<std::size_t>(n)];
    row.r_n = kNaN;
    row.thm4_shape = kNaN;
    if (n >= 2) {
      row.r_n = rn(track, n);
      row.thm4_shape = theorem4_shape(track, row.r_n, n);
    }
    const ShapeValue t5 = theorem5_shape(track, row.s_n, n);
    row.thm5_shape = t5.value;
    row.thm5_warning = t5.warning;
    row.cor_shape = corollary_shape(track, row.s_n, n).value;
    const DistanceRow d = distance_row(env, track, n, LawOptions{});
    if (d.status == "ok") {
      row.dw = d.dw;
      row.truncation_bound = d.truncation_bound;
    } else {
      row.truncation_bound = kNaN;
    }
    row.status = d.status;
    const double norm = normalizer(n, track);
    row.diagnostic = row.dw.value_or(kNaN) * norm;
    row.shape_diagnostic = row.thm4_shape * norm;
    t.rows.push_back(row);
  }
  return t;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact laws, rate bounds and spine simulation for branching processes in varying environments",
               "gwve"};
  app.require_subcommand(1);
  RunConfig cfg;

  const auto env_flags = [&](CLI::App* sub) {
    sub->add_option("--env", cfg.env_path, "Environment JSON file")->check(CLI::ExistingFile);
    sub->add_option("--builtin", cfg.builtin, "Built-in environment name")
        ->check(CLI::IsMember(builtin::names()));
  };
  const auto out_flags = [&](CLI::App* sub, bool with_format) {
    sub->add_option("--out", cfg.out, "Output path");
    if (with_format) sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  auto* classify_cmd = app.add_subcommand("classify", "Moment ledger and criticality evidence");
  env_flags(classify_cmd);
  out_flags(classify_cmd, true);
  classify_cmd->add_option("--n-max", cfg.n_max, "Horizon")->check(CLI::Range(3, 1 << 24));
  classify_cmd->add_option("--eps", cfg.eps, "Trend heuristic epsilon")->check(CLI::PositiveNumber);
  classify_cmd->add_option("--starstar-c", cfg.starstar_c, "Constant for the third-moment check")
      ->check(CLI::PositiveNumber);

  auto* exact_cmd = app.add_subcommand("exact", "Exact law of Z_n and of Z_n given survival");
  env_flags(exact_cmd);
  out_flags(exact_cmd, true);
  exact_cmd->add_option("--n", cfg.n, "Generation")->check(CLI::NonNegativeNumber);
  exact_cmd->add_option("--trunc", cfg.trunc, "Truncation K")->check(CLI::PositiveNumber);
  exact_cmd->add_option("--tol", cfg.tol, "Tail mass tolerance")->check(CLI::PositiveNumber);
  exact_cmd->add_option("--method", cfg.method, "auto, dft, convolution or closed-form")
      ->check(CLI::IsMember({"auto", "dft", "convolution", "closed-form"}));

  auto* bounds_cmd = app.add_subcommand("bounds", "r_n, s_n and rate-bound shapes for n = 2..N");
  env_flags(bounds_cmd);
  out_flags(bounds_cmd, true);
  bounds_cmd->add_option("--n-max", cfg.n_max, "Largest n");

  auto* ws_cmd = app.add_subcommand("wasserstein", "Exact d_W(Y_n/b_n, Exp(1)) against n");
  env_flags(ws_cmd);
  out_flags(ws_cmd, true);
  ws_cmd->add_option("--n", cfg.n, "Single generation")->check(CLI::PositiveNumber);
  ws_cmd->add_option("--n-max", cfg.n_max, "Rows n = 1..N")->check(CLI::PositiveNumber);
  ws_cmd->add_option("--n-list", cfg.n_list, "Explicit generations")->delimiter(',');
  ws_cmd->add_option("--trunc", cfg.trunc, "Truncation K")->check(CLI::PositiveNumber);
  ws_cmd->add_option("--tol", cfg.tol, "Tail mass tolerance")->check(CLI::PositiveNumber);

  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimators on the size-biased tree");
  env_flags(sim_cmd);
  out_flags(sim_cmd, false);
  sim_cmd->add_option("--estimator", cfg.estimator, "spine-law, equilibrium, meanyye or steps")
      ->check(CLI::IsMember({"spine-law", "equilibrium", "meanyye", "steps"}));
  sim_cmd->add_option("--n", cfg.n, "Generation")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--samples", cfg.samples, "Sample count M")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", cfg.seed, "Master seed");
  sim_cmd->add_option("--workers", cfg.workers, "Worker streams")->check(CLI::Range(1, 1024));

  auto* rep_cmd = app.add_subcommand("reproduce", "Tables for the four worked examples");
  rep_cmd->add_option("--out", cfg.out, "Output directory")->required();
  rep_cmd->add_option("--n-max", cfg.n_max, "Drop grid points above this n")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--example", cfg.examples, "Subset of example ids")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }

  try {
    if (classify_cmd->parsed()) return cmd_classify(cfg, out, err);
    if (exact_cmd->parsed()) return cmd_exact(cfg, out, err);
    if (bounds_cmd->parsed()) return cmd_bounds(cfg, out, err);
    if (ws_cmd->parsed()) return cmd_wasserstein(cfg, out, err);
    if (sim_cmd->parsed()) return cmd_simulate(cfg, out, err);
    return cmd_reproduce(cfg, out, err);
  } catch (const TruncationError& e) {
    err << "error: " << e.what() << "; suggested --trunc " << e.suggested_truncation() << '\n';
    return kNumerical;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const SimulationError& e) {
    err << "error: " << e.what() << '\n';
    return kSimulation;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace gwve::cli
