#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace gwve::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kValidation = 2, kNumerical = 3, kSimulation = 4 };

/// Parses argv and runs one subcommand. Data goes to `out` (or files under
/// --out), diagnostics to `err`. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// One row of a reproduced example table.
struct ExampleRow {
  int n = 0;
  double mu = 0.0;
  double rho = 0.0;
  double mu_rho = 0.0;
  double r_n = 0.0;
  double s_n = 0.0;
  double thm4_shape = 0.0;
  double thm5_shape = 0.0;
  bool thm5_warning = false;
  double cor_shape = 0.0;
  std::optional<double> dw;
  double truncation_bound = 0.0;
  std::string status = "ok";
  double diagnostic = 0.0;        // dw times the example's rate normalizer
  double shape_diagnostic = 0.0;  // thm4_shape times the same normalizer
};

struct ExampleTable {
  std::string id;
  std::string environment;  // built-in name
  std::string diagnostic;   // column meaning, e.g. "dw*n^a"
  std::vector<ExampleRow> rows;

  /// max/min of the diagnostic column over rows with an exact dw.
  double diagnostic_spread() const;
  double shape_spread() const;
  double diagnostic_max() const;
  void write_csv(std::ostream& out) const;
};

/// Example ids and grids:
///   symmetric           a = 1/2, n = 25..400 doubling, column dw*n^a
///   poisson-increasing  mu_n = n, n = 16..4096 powers of two, column dw*log(n)
///   poisson-sqrt-decay  mu_n = exp(-sqrt(n)), n = 16..1024, column dw*sqrt(n)/log(sqrt(n))
///   lf-alternating      n = 1..256, column dw*(2+mu*rho)/4
/// Grid points above n_max are dropped.
ExampleTable reproduce_example(const std::string& id, int n_max = 1 << 30);

}  // namespace gwve::cli
