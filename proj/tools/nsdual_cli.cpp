#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nsdual/scenario.hpp"

namespace {

// "name=value" with a fully consumed numeric value.
bool parse_tol(const std::string& s, std::string* name, double* value) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) return false;
  *name = s.substr(0, eq);
  const std::string rhs = s.substr(eq + 1);
  char* end = nullptr;
  *value = std::strtod(rhs.c_str(), &end);
  return end == rhs.c_str() + rhs.size();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario-driven utility-duality solver"};
  app.get_formatter()->column_width(28);

  std::string scenario_path;
  std::string batch_dir;
  nsdual::RunOptions opts;
  std::uint64_t seed = 0;
  std::vector<std::string> tol_args;

  auto* sc = app.add_option("--scenario", scenario_path, "Run a single scenario JSON file");
  auto* ba = app.add_option("--batch", batch_dir, "Run every *.json in a directory");
  sc->excludes(ba);
  app.add_option("--out", opts.out_dir, "Output root (default: $NSDUAL_OUT or ./out)");
  app.add_option("--task", opts.task_override,
                 "Override the scenario task (duality|shortfall|indifference|ladder|audit)");
  auto* sd = app.add_option("--seed", seed, "Override the scenario RNG seed");
  app.add_option("--tol", tol_args, "Tolerance override, repeatable (e.g. --tol solve=1e-8)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (scenario_path.empty() == batch_dir.empty()) {
    std::fprintf(stderr, "error: exactly one of --scenario or --batch is required\n");
    return 2;
  }
  if (*sd) opts.seed_override = seed;
  for (const auto& t : tol_args) {
    std::string name;
    double value = 0.0;
    if (!parse_tol(t, &name, &value)) {
      std::fprintf(stderr, "error: --tol expects name=value, got '%s'\n", t.c_str());
      return 2;
    }
    opts.tol_overrides[name] = value;
  }

  return scenario_path.empty() ? nsdual::run_scenario_batch(batch_dir, opts)
                               : nsdual::run_scenario_file(scenario_path, opts);
}
