#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qrmap/dataset.hpp"
#include "qrmap/design_matrix.hpp"
#include "qrmap/features.hpp"
#include "qrmap/quantile_regression.hpp"
#include "qrmap/raster.hpp"

namespace qrmap {

/// Design-column rasters keyed by column name.
using ColumnRasters = std::map<std::string, Raster>;

/// Expands source-covariate rasters (keyed by covariate name) into one
/// raster per non-intercept design column. Continuous layers receive the
/// declared transform (nonpositive cells under log become nodata).
/// Categorical layers hold class labels as numbers; a cell whose label is
/// neither the baseline nor a retained class becomes nodata in every dummy
/// of that covariate.
ColumnRasters design_rasters(const std::vector<ColumnInfo>& columns, const Encoding& encoding,
                             const CovariateSchema& schema,
                             const std::map<std::string, Raster>& sources);

/// Cell-wise beta . x. Cells with nodata in any input are nodata. Under a
/// log response the linear predictor is exponentiated once per cell.
/// `geometry` is required only when there are no covariate columns.
Raster predict_grid(const Eigen::VectorXd& beta, const std::vector<ColumnInfo>& columns,
                    const ColumnRasters& rasters, Transform response_transform = Transform::none,
                    std::optional<GridGeometry> geometry = std::nullopt);

Raster predict_grid(const QuantileFit& fit, const std::vector<ColumnInfo>& columns,
                    const ColumnRasters& rasters, Transform response_transform = Transform::none,
                    std::optional<GridGeometry> geometry = std::nullopt);

/// Per-cell 75th minus 25th type-7 percentile across replicate maps (>= 4).
/// A cell is nodata if it is nodata in any replicate.
Raster iqr_map(std::span<const Raster> replicates);

/// Same statistic computed directly from coefficient draws (B x (p+1), NaN
/// rows skipped) without materialising the replicate maps.
Raster bootstrap_iqr_map(const Eigen::MatrixXd& draws, const std::vector<ColumnInfo>& columns,
                         const ColumnRasters& rasters, Transform response_transform = Transform::none,
                         std::optional<GridGeometry> geometry = std::nullopt);

/// Block mean over k x k fine cells, ignoring nodata; all-nodata blocks are
/// nodata. Trailing partial blocks average the cells they contain. The
/// north-west corner is kept fixed.
Raster downscale(const Raster& fine, std::size_t k);

/// Downscale to an integer multiple of the current cellsize.
Raster downscale_to_cellsize(const Raster& fine, double target_cellsize);

struct ResidualStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct DensityBins {
  std::size_t bins = 0;
  /// Shared value range for both axes.
  double lo = 0.0;
  double hi = 0.0;
  /// counts[i * bins + j]: a in bin i, b in bin j.
  std::vector<std::size_t> counts;
};

struct ComparisonReport {
  /// (sorted a, sorted b) over jointly valid cells.
  std::vector<std::pair<double, double>> qq_pairs;
  ResidualStats residual_stats;  // of a - b
  DensityBins density_bins;
  /// Slope of a regressed on b through the origin: sum(ab) / sum(bb).
  double fit_through_origin_slope = 0.0;
};

struct CompareOptions {
  std::size_t density_bins = 50;
  /// 0 keeps every jointly valid cell; otherwise that many type-7 quantiles.
  std::size_t qq_points = 0;
};

ComparisonReport compare_maps(const Raster& a, const Raster& b, const CompareOptions& opts = {});

}  // namespace qrmap
