#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "convexpde/cli/config.hpp"

namespace cpde::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 1, kInvariantViolation = 2 };

struct RunResult {
  int exit_code = kSuccess;
  /// "ok", "skipped", "invariant_violation" or "input_error"
  std::string status;
  std::vector<std::string> failed_invariants;
  std::vector<std::string> artifacts;  // file names inside output_dir
  std::string manifest_path;           // empty when no manifest was written
};

/// Runs the configured pipeline, writes its CSV artifacts and
/// manifest.json into cfg.output_dir and maps the outcome to an exit code.
/// Progress and diagnostics go to `log`.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace cpde::cli
