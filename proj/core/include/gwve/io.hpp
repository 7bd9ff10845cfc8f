#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>

#include "gwve/environment.hpp"
#include "gwve/spine.hpp"
#include "gwve/wasserstein.hpp"

namespace gwve {

// Environment files are JSON objects:
//
//   {"family": "poisson",           "params": {"lambda": P},           "horizon": N}
//   {"family": "linear_fractional", "params": {"a": P, "p": P},        "horizon": N}
//   {"family": "symmetric",         "params": {"delta": P},            "horizon": N}
//   {"family": "constant_pmf",      "params": {"probs": [q0, q1, ...]}, "horizon": N}
//   {"family": "list", "params": {"laws": [LAW, ...], "extension": "error"}, "horizon": N}
//
// with an optional top-level "name". A parameter P is a number, a sequence
// expression string in n such as "n/(n-1)", or {"initial": [x1, ...], "rest": "expr"}
// giving the first values explicitly. A LAW is one of
//   {"kind": "pmf", "probs": [...]}, {"kind": "poisson", "lambda": x},
//   {"kind": "linear_fractional", "a": x, "p": x}, {"kind": "symmetric", "delta": x}.
// "extension" is "error" (default), "cycle" or "hold_last".
//
// Schema violations raise ValidationError with a JSON path such as
// "$.params.lambda".
Environment parse_environment(std::string_view json_text);
Environment load_environment(const std::filesystem::path& path);

void write_json(std::ostream& out, const CriticalityReport& report);
void write_json(std::ostream& out, const SpineLawReport& report, std::uint64_t seed);
void write_json(std::ostream& out, const EquilibriumReport& report, std::uint64_t seed);
void write_json(std::ostream& out, const MeanYYeReport& report, std::uint64_t seed);
void write_json(std::ostream& out, const StepReport& report, std::uint64_t seed);

/// Two-column histogram dump: k,count.
void write_histogram_csv(std::ostream& out, const std::vector<std::int64_t>& counts);

}  // namespace gwve
