#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "efp/algorithms.hpp"
#include "efp/oracle.hpp"

namespace efp {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitPrecondition = 3;
inline constexpr int kExitSolver = 4;
inline constexpr int kExitBudget = 5;

/// One self-describing experiment: the instance (inline or generated), the
/// algorithm selection, tolerances, and oracle settings. All randomness comes
/// from the explicit seed.
struct Scenario {
  int version = 1;
  std::uint64_t seed = 1;
  double tol = 1e-7;
  double price_eps = 0.0;  // 0 = engine default
  std::string algorithm = "bicriteria";
  double ascend_k = 2.718281828459045;
  std::string ascend_rule = "shared-peak";
  double oracle_step = 1e-3;
  long long oracle_budget = 10'000'000;
  std::string sweep_parameter;
  std::vector<double> sweep_values;
  MarketInstance instance;
  std::string canonical;  // canonical serialized form, hashed into reports
};

/// seed_override (the CLI --seed flag) replaces the scenario seed and any
/// generator-level seed before instances are materialized.
Scenario parse_scenario(const std::string& json_text,
                        std::optional<std::uint64_t> seed_override = {});
Scenario load_scenario(const std::filesystem::path& file,
                       std::optional<std::uint64_t> seed_override = {});

std::string scenario_hash(const Scenario& sc);

struct RunOptions {
  std::filesystem::path out_dir = ".";
  bool write_trace = false;
  std::string stem = "report";  // output files: <stem>.json, <stem>.meta.json
};

/// Executes the scenario's algorithm, re-verifies the solution, and writes
/// <stem>.json (+ sidecar with timings, + optional event log). Returns a
/// process exit code; failures also leave <stem>.error.json behind.
int cmd_run(const Scenario& sc, const RunOptions& opt);

/// Algorithm + grid oracle + welfare optimum on one instance; emits measured
/// ratios with resolution slack and pass/fail against the guarantee bounds.
int cmd_compare(const Scenario& sc, const RunOptions& opt);

/// One CSV row per swept parameter value (stop parameter k or ladder rung).
int cmd_sweep(const Scenario& sc, const RunOptions& opt);

/// Instance lint: structural checks plus hazard/convexity certification.
int cmd_validate(const Scenario& sc, const RunOptions& opt);

}  // namespace efp
