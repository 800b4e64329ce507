#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qrmap {

enum class CovariateKind { continuous, categorical };
enum class Transform { none, log };

std::string to_string(CovariateKind kind);
std::string to_string(Transform transform);

struct CovariateSpec {
  std::string name;
  CovariateKind kind = CovariateKind::continuous;
  Transform transform = Transform::none;
};

/// Names the response and the typed covariates. The response is taken as
/// supplied; e.g. a carbon stock is expected to be precomputed from
/// concentration times bulk density before it reaches this table.
struct CovariateSchema {
  std::string response;
  Transform response_transform = Transform::none;
  std::vector<CovariateSpec> covariates;

  /// Throws ConfigError on duplicate/empty names or no covariates.
  void validate() const;
  /// Index into `covariates`, or npos.
  std::size_t index_of(const std::string& name) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

using CovariateValue = std::variant<double, std::string>;

struct Observation {
  double response = 0.0;
  /// One entry per schema covariate: double for continuous, string label
  /// for categorical.
  std::vector<CovariateValue> values;
  std::optional<double> x;
  std::optional<double> y;
};

class Dataset {
 public:
  /// Throws DataError when a row does not conform to the schema, a response
  /// is non-finite, or a log-transformed response is not strictly positive.
  Dataset(CovariateSchema schema, std::vector<Observation> rows);

  const CovariateSchema& schema() const noexcept { return schema_; }
  const std::vector<Observation>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }

  std::vector<double> response() const;
  /// Raw values of a continuous covariate.
  std::vector<double> numeric(const std::string& name) const;
  /// Labels of a categorical covariate.
  std::vector<std::string> labels(const std::string& name) const;

  /// Rows whose keep flag is set.
  Dataset filter(const std::vector<bool>& keep) const;

 private:
  CovariateSchema schema_;
  std::vector<Observation> rows_;
};

struct CsvReadOptions {
  std::optional<std::string> x_column;
  std::optional<std::string> y_column;
};

struct LoadedDataset {
  Dataset data;
  /// Rows dropped because a modeled field was empty.
  std::size_t dropped_missing = 0;
};

/// Reads a comma-separated table with a header row. Empty fields in any
/// modeled column drop the row (counted); unparsable numbers are errors
/// reported with the line number and column name.
LoadedDataset read_dataset_csv(std::istream& in, const CovariateSchema& schema,
                               const CsvReadOptions& opts = {},
                               const std::string& source = "<stream>");
LoadedDataset read_dataset_csv(const std::filesystem::path& path, const CovariateSchema& schema,
                               const CsvReadOptions& opts = {});

/// Writes the dataset in the layout read_dataset_csv accepts. Coordinates,
/// when any row has them, go to trailing columns "x" and "y".
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace qrmap
