#pragma once

// Command implementations behind the `sbl` executable. Kept in the library so
// tests can drive them without spawning processes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbl/trainer.hpp"

namespace sbl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitInvariant = 3;

inline constexpr int kCsvSchemaVersion = 1;

struct RunSpec {
  std::string env_path;
  std::string output_path;
  std::string snapshot_path;  // optional model snapshot (run only)
  TrainerConfig trainer;
  bool posterior_rule_set = false;  // otherwise derived from the policy
  std::optional<double> alpha;      // overrides the environment file when set
  std::optional<double> epsilon;
  std::size_t trials = 10;
  std::size_t jobs = 1;
  std::string alphas = "0.65:0.99:0.05";
};

/// Parses "a,b,c" or "start:stop:step" (stop included, and always appended
/// when the last step falls short of it). Throws std::invalid_argument.
std::vector<double> parse_alpha_list(const std::string& text);

int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_compare(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_validate_env(const std::string& env_path, std::ostream& out, std::ostream& err);

// CSV emitters; each writes its header line first.
void write_trace_csv(std::ostream& os, std::size_t trial, const TrainingTrace& trace,
                     const SPomdpModel& model);
void write_comparison_csv(std::ostream& os, const Comparison& cmp);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace sbl::cli
