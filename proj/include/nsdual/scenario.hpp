#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "nsdual/report.hpp"

namespace nsdual {

/// JSON syntax or schema violation in a scenario file.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kSchemaVersion = 1;

struct Scenario {
  std::string name;
  std::string task;  // duality | shortfall | indifference | ladder | audit
  MarketTree tree;
  std::optional<Utility> utility;
  std::optional<LossFunction> loss;
  Claim claim;
  double x = 0.0;
  std::vector<double> levels;  // truncation levels for the ladder task
  std::uint64_t seed = 1;
  Tolerances tol;
};

Scenario scenario_from_json(const Json& j);
Scenario load_scenario(const std::string& path);

struct RunOptions {
  std::string out_dir;  // empty: $NSDUAL_OUT, else "out"
  std::string task_override;
  std::map<std::string, double> tol_overrides;
  std::optional<std::uint64_t> seed_override;
};

/// Runs one scenario and writes report.json plus the plot CSV files
/// (ladder.csv, dual_curve.csv, atoms_scatter.csv) into <out>/<name>/.
/// On failure an error.json with a machine-readable reason is written
/// instead.  Exit codes: 0 success, 1 a verification threshold failed,
/// 2 parse/schema error, 3 market validation or arbitrage, 4 solver failure.
int run_scenario_file(const std::string& path, const RunOptions& opts);

/// Every *.json directly inside dir, run in parallel; writes summary.json to
/// the output root and returns the max exit code.
int run_scenario_batch(const std::string& dir, const RunOptions& opts);

}  // namespace nsdual
