#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrmap/dataset.hpp"
#include "qrmap/design_matrix.hpp"

namespace qrmap {

struct CorrelationMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd r;
};

/// Pearson correlations between the continuous covariates, computed on the
/// transformed scale the model uses. Needs >= 2 continuous covariates, each
/// with nonzero variance (DataError otherwise, naming the covariate).
CorrelationMatrix pearson_matrix(const Dataset& data);

struct DroppedCovariate {
  std::string name;
  std::string partner;
  double r = 0.0;
};

struct CollinearityResult {
  std::vector<std::string> kept;
  std::vector<DroppedCovariate> dropped;
};

/// While some surviving pair has |r| > threshold, drops the covariate with
/// the largest mean |r| to the other survivors among those in such a pair.
/// Equal means keep the covariate listed first.
CollinearityResult collinearity_filter(const CorrelationMatrix& corr, double threshold = 0.7);

struct BaselineClass {
  std::string covariate;
  std::string label;
  std::size_t count = 0;
};

struct PrunedClass {
  std::string covariate;
  std::string label;
  std::size_t count = 0;
  std::size_t rows_removed = 0;
};

struct EncodingReport {
  std::vector<DroppedCovariate> dropped_collinear;
  std::vector<BaselineClass> baseline_classes;
  std::vector<PrunedClass> pruned_rare_classes;
  std::vector<ColumnInfo> final_columns;
  std::size_t rows_in = 0;
  std::size_t rows_out = 0;
};

struct CategoricalEncoding {
  std::string covariate;
  std::string baseline;
  /// Non-baseline classes in lexicographic order; one dummy column each.
  std::vector<std::string> levels;
};

struct Encoding {
  std::vector<CategoricalEncoding> covariates;
  /// Rows of the input surviving rare-class pruning.
  std::vector<bool> keep;
  EncodingReport report;
};

/// One 0/1 column per retained class, modal class as baseline (ties:
/// lexicographically smallest label). Classes with count <= rare_threshold
/// are pruned and their rows removed; pruning repeats until stable. A
/// covariate left with a single class is a DataError.
Encoding encode_categoricals(const Dataset& data, std::size_t rare_threshold = 5);

/// Dummy column name for a class.
std::string dummy_name(const std::string& covariate, const std::string& label);

struct FeaturePlan {
  /// Continuous covariates entering the model, schema order.
  std::vector<std::string> continuous;
  Encoding encoding;
};

struct ModelData {
  DesignMatrix X;
  Eigen::VectorXd y;
  /// Index into the input dataset of each design row.
  std::vector<std::size_t> source_rows;
};

/// Prepends the intercept, applies declared log transforms, appends the
/// dummies and verifies full rank (DesignError names dependent columns).
/// Nonpositive values under a log transform are a DataError listing rows.
ModelData build_design(const Dataset& data, const FeaturePlan& plan);

/// Collinearity filter followed by categorical encoding. The report carries
/// both outcomes and the final column list.
FeaturePlan plan_features(const Dataset& data, double collinearity_threshold = 0.7,
                          std::size_t rare_threshold = 5);

/// Intercept plus, per categorical covariate, an indicator of its modal
/// class. All rows are used.
ModelData build_simple_model(const Dataset& data);

/// Name of the modal-class indicator column.
std::string modal_indicator_name(const std::string& covariate, const std::string& label);

}  // namespace qrmap
