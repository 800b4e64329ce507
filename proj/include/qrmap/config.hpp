#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qrmap/dataset.hpp"

namespace qrmap {

/// Everything a pipeline run needs. Defaults: 19 tau levels, |r| > 0.7
/// collinearity cut, rare classes of <= 5 rows, B = 10000 replicates.
struct RunConfig {
  std::filesystem::path input_csv;
  std::optional<std::string> x_column;
  std::optional<std::string> y_column;
  CovariateSchema schema;
  std::vector<double> taus;
  double collinearity_threshold = 0.7;
  std::size_t rare_threshold = 5;
  std::size_t bootstrap_b = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path out_dir = "qrmap_out";
  /// Source-covariate rasters keyed by covariate name.
  std::map<std::string, std::filesystem::path> covariate_rasters;
  /// Benchmark rasters keyed by benchmark name.
  std::map<std::string, std::filesystem::path> benchmark_rasters;
  /// Map compared against the benchmarks; defaults to the median prediction.
  std::optional<std::filesystem::path> reference_map;
  bool iqr_maps = true;
  std::size_t density_bins = 50;
  std::size_t qq_points = 0;
  /// FNV-1a 64 of the config file bytes (0 when built in code).
  std::uint64_t config_hash = 0;
};

/// Parses the key = value format described in docs/config.md. Relative
/// paths resolve against `base_dir`. Throws ConfigError with line numbers.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// "0.05,0.5,0.95" or "default".
std::vector<double> parse_tau_list(const std::string& text);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace qrmap
