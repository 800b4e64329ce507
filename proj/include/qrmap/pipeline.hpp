#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include "qrmap/config.hpp"

/// Config-driven commands behind the qrmap tool. Every command writes
/// plot-ready CSV / ASCII-grid files into RunConfig::out_dir plus a
/// manifest; outputs depend only on the config, inputs and seed.
namespace qrmap::pipeline {

enum ExitCode : int {
  kSuccess = 0,
  kUnexpected = 1,
  kConfigError = 2,
  kDataError = 3,
  kNumericalFailure = 4,
};

struct CommandResult {
  int exit_code = kSuccess;
  std::vector<std::filesystem::path> written;
  std::vector<std::string> warnings;
};

/// Preprocessing, simple model and final model fits across the tau grid.
CommandResult run_fit(const RunConfig& cfg);
/// Leave-one-out cross-validation report.
CommandResult run_cv(const RunConfig& cfg);
/// Bootstrap coefficient summaries for the final and simple models.
CommandResult run_bootstrap(const RunConfig& cfg);
/// Per-tau prediction maps and bootstrap IQR maps.
CommandResult run_predict(const RunConfig& cfg);
/// Reference map vs each benchmark, harmonised to the coarsest resolution.
CommandResult run_compare(const RunConfig& cfg);

/// Maps an exception to the documented exit code.
int exit_code_for(const std::exception& e);

/// File-name label for a tau level, e.g. 0.05 -> "0.05".
std::string tau_label(double tau);

}  // namespace qrmap::pipeline
