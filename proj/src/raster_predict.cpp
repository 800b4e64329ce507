#include "qrmap/raster_predict.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qrmap/errors.hpp"
#include "qrmap/percentiles.hpp"
#include "qrmap/text_io.hpp"

namespace qrmap {

namespace {

void require_same_geometry(const Raster& ref, const Raster& other, const std::string& what) {
  if (!ref.geometry().matches(other.geometry())) {
    throw DataError("geometry mismatch for " + what + ": " + other.geometry().describe() +
                    " vs " + ref.geometry().describe());
  }
}

struct LinearLayers {
  GridGeometry geometry;
  double nodata = kDefaultNodata;
  std::vector<const Raster*> layers;  // one per non-intercept column
};

LinearLayers gather_layers(const std::vector<ColumnInfo>& columns, const ColumnRasters& rasters,
                           std::optional<GridGeometry> geometry) {
  LinearLayers out;
  for (std::size_t j = 1; j < columns.size(); ++j) {
    const auto it = rasters.find(columns[j].name);
    if (it == rasters.end()) throw DataError("no covariate raster for design column '" + columns[j].name + "'");
    if (!out.layers.empty()) require_same_geometry(*out.layers.front(), it->second, "column '" + columns[j].name + "'");
    out.layers.push_back(&it->second);
  }
  if (!out.layers.empty()) {
    out.geometry = out.layers.front()->geometry();
    out.nodata = out.layers.front()->nodata();
    if (geometry && !geometry->matches(out.geometry)) {
      throw DataError("requested geometry " + geometry->describe() + " differs from covariate rasters " +
                      out.geometry.describe());
    }
  } else if (geometry) {
    out.geometry = *geometry;
  } else {
    throw DataError("an intercept-only prediction needs an explicit grid geometry");
  }
  return out;
}

// Linear predictor of one cell; false if any input is nodata.
inline bool linear_predictor(const LinearLayers& L, const double* beta, std::size_t cell, double& out) {
  double acc = beta[0];
  for (std::size_t j = 0; j < L.layers.size(); ++j) {
    const Raster& r = *L.layers[j];
    const double v = r.values()[cell];
    if (v == r.nodata()) return false;
    acc += beta[j + 1] * v;
  }
  out = acc;
  return true;
}

inline double back_transform(double eta, Transform t) { return t == Transform::log ? std::exp(eta) : eta; }

}  // namespace

ColumnRasters design_rasters(const std::vector<ColumnInfo>& columns, const Encoding& encoding,
                             const CovariateSchema& schema, const std::map<std::string, Raster>& sources) {
  ColumnRasters out;
  const Raster* reference = nullptr;
  auto source_for = [&](const std::string& covariate) -> const Raster& {
    const auto it = sources.find(covariate);
    if (it == sources.end()) throw DataError("no raster supplied for covariate '" + covariate + "'");
    if (reference) require_same_geometry(*reference, it->second, "covariate '" + covariate + "'");
    reference = &it->second;
    return it->second;
  };

  for (std::size_t j = 1; j < columns.size(); ++j) {
    const auto& col = columns[j];
    if (col.kind != ColumnKind::continuous) continue;
    const Raster& src = source_for(col.source_covariate);
    const auto idx = schema.index_of(col.source_covariate);
    const bool log = idx != CovariateSchema::npos && schema.covariates[idx].transform == Transform::log;
    std::vector<double> values = src.values();
    if (log) {
      for (double& v : values) {
        if (v == src.nodata()) continue;
        v = v > 0.0 ? std::log(v) : src.nodata();
      }
    }
    out.emplace(col.name, Raster(src.geometry(), src.nodata(), std::move(values)));
  }

  for (const auto& ce : encoding.covariates) {
    std::vector<std::size_t> dummy_cols;
    for (std::size_t j = 1; j < columns.size(); ++j) {
      if (columns[j].kind == ColumnKind::dummy && columns[j].source_covariate == ce.covariate) dummy_cols.push_back(j);
    }
    if (dummy_cols.empty()) continue;
    const Raster& src = source_for(ce.covariate);
    // Numeric class codes: baseline -> -1, retained level -> its index.
    std::vector<std::pair<double, int>> codes;
    auto add_code = [&](const std::string& label, int id) {
      double v = 0.0;
      if (!parse_double(label, v)) {
        throw DataError("categorical raster for '" + ce.covariate + "' needs numeric class codes; label '" +
                        label + "' is not numeric");
      }
      codes.emplace_back(v, id);
    };
    add_code(ce.baseline, -1);
    for (std::size_t l = 0; l < ce.levels.size(); ++l) add_code(ce.levels[l], static_cast<int>(l));

    std::vector<std::vector<double>> layers(ce.levels.size(), std::vector<double>(src.size(), 0.0));
    for (std::size_t cell = 0; cell < src.size(); ++cell) {
      const double v = src.values()[cell];
      const auto it = std::find_if(codes.begin(), codes.end(), [&](const auto& c) { return c.first == v; });
      if (v == src.nodata() || it == codes.end()) {
        for (auto& layer : layers) layer[cell] = src.nodata();
      } else if (it->second >= 0) {
        layers[static_cast<std::size_t>(it->second)][cell] = 1.0;
      }
    }
    for (std::size_t l = 0; l < ce.levels.size(); ++l) {
      out.emplace(dummy_name(ce.covariate, ce.levels[l]), Raster(src.geometry(), src.nodata(), std::move(layers[l])));
    }
  }
  return out;
}

Raster predict_grid(const Eigen::VectorXd& beta, const std::vector<ColumnInfo>& columns,
                    const ColumnRasters& rasters, Transform response_transform,
                    std::optional<GridGeometry> geometry) {
  if (static_cast<std::size_t>(beta.size()) != columns.size()) {
    throw DataError("coefficient vector does not match the design columns");
  }
  const auto L = gather_layers(columns, rasters, geometry);
  std::vector<double> values(L.geometry.cells(), L.nodata);
  for (std::size_t cell = 0; cell < values.size(); ++cell) {
    double eta = 0.0;
    if (!linear_predictor(L, beta.data(), cell, eta)) continue;
    const double v = back_transform(eta, response_transform);
    values[cell] = std::isfinite(v) ? v : L.nodata;
  }
  return Raster(L.geometry, L.nodata, std::move(values));
}

Raster predict_grid(const QuantileFit& fit, const std::vector<ColumnInfo>& columns,
                    const ColumnRasters& rasters, Transform response_transform,
                    std::optional<GridGeometry> geometry) {
  return predict_grid(fit.beta, columns, rasters, response_transform, geometry);
}

Raster iqr_map(std::span<const Raster> replicates) {
  if (replicates.size() < 4) throw DataError("an IQR map needs at least 4 replicate maps");
  const Raster& first = replicates.front();
  for (const auto& r : replicates) require_same_geometry(first, r, "replicate map");
  std::vector<double> out(first.size(), first.nodata());
  std::vector<double> cell_values(replicates.size());
  for (std::size_t cell = 0; cell < first.size(); ++cell) {
    bool valid = true;
    for (std::size_t b = 0; b < replicates.size() && valid; ++b) {
      valid = replicates[b].is_valid(cell);
      cell_values[b] = replicates[b].values()[cell];
    }
    if (!valid) continue;
    std::vector<double> sorted = cell_values;
    std::sort(sorted.begin(), sorted.end());
    out[cell] = quantile_type7(sorted, 0.75) - quantile_type7(sorted, 0.25);
  }
  return Raster(first.geometry(), first.nodata(), std::move(out));
}

Raster bootstrap_iqr_map(const Eigen::MatrixXd& draws, const std::vector<ColumnInfo>& columns,
                         const ColumnRasters& rasters, Transform response_transform,
                         std::optional<GridGeometry> geometry) {
  if (static_cast<std::size_t>(draws.cols()) != columns.size()) {
    throw DataError("coefficient draws do not match the design columns");
  }
  std::vector<std::vector<double>> betas;
  for (Eigen::Index b = 0; b < draws.rows(); ++b) {
    if (draws.row(b).hasNaN()) continue;
    const Eigen::VectorXd row = draws.row(b).transpose();
    betas.emplace_back(row.data(), row.data() + row.size());
  }
  if (betas.size() < 4) throw DataError("an IQR map needs at least 4 successful replicates");
  const auto L = gather_layers(columns, rasters, geometry);
  std::vector<double> out(L.geometry.cells(), L.nodata);
  std::vector<double> preds(betas.size());
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    bool valid = true;
    for (std::size_t b = 0; b < betas.size() && valid; ++b) {
      double eta = 0.0;
      valid = linear_predictor(L, betas[b].data(), cell, eta);
      preds[b] = back_transform(eta, response_transform);
      valid = valid && std::isfinite(preds[b]);
    }
    if (!valid) continue;
    std::sort(preds.begin(), preds.end());
    out[cell] = quantile_type7(preds, 0.75) - quantile_type7(preds, 0.25);
  }
  return Raster(L.geometry, L.nodata, std::move(out));
}

Raster downscale(const Raster& fine, std::size_t k) {
  if (k < 1) throw std::invalid_argument("downscale factor must be a positive integer");
  const auto& g = fine.geometry();
  GridGeometry coarse;
  coarse.nrows = (g.nrows + k - 1) / k;
  coarse.ncols = (g.ncols + k - 1) / k;
  coarse.cellsize = g.cellsize * static_cast<double>(k);
  coarse.x_origin = g.x_origin;
  const double top = g.y_origin + static_cast<double>(g.nrows) * g.cellsize;
  coarse.y_origin = top - static_cast<double>(coarse.nrows) * coarse.cellsize;

  std::vector<double> sums(coarse.cells(), 0.0);
  std::vector<std::size_t> counts(coarse.cells(), 0);
  for (std::size_t r = 0; r < g.nrows; ++r) {
    for (std::size_t c = 0; c < g.ncols; ++c) {
      const double v = fine.at(r, c);
      if (v == fine.nodata()) continue;
      const std::size_t idx = (r / k) * coarse.ncols + c / k;
      sums[idx] += v;
      ++counts[idx];
    }
  }
  std::vector<double> values(coarse.cells(), fine.nodata());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (counts[i]) values[i] = sums[i] / static_cast<double>(counts[i]);
  }
  return Raster(coarse, fine.nodata(), std::move(values));
}

Raster downscale_to_cellsize(const Raster& fine, double target_cellsize) {
  const double ratio = target_cellsize / fine.geometry().cellsize;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio)) {
    throw DataError("cellsize " + format_double(target_cellsize) + " is not an integer multiple of " +
                    format_double(fine.geometry().cellsize));
  }
  if (k == 1.0) return fine;
  return downscale(fine, static_cast<std::size_t>(k));
}

ComparisonReport compare_maps(const Raster& a, const Raster& b, const CompareOptions& opts) {
  require_same_geometry(a, b, "map comparison");
  std::vector<double> va, vb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a.is_valid(i) || !b.is_valid(i)) continue;
    va.push_back(a.values()[i]);
    vb.push_back(b.values()[i]);
  }
  if (va.empty()) throw DataError("maps share no jointly valid cells");
  const std::size_t n = va.size();

  ComparisonReport rep;
  double sab = 0.0, sbb = 0.0;
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    sab += va[i] * vb[i];
    sbb += vb[i] * vb[i];
    resid[i] = va[i] - vb[i];
  }
  rep.fit_through_origin_slope = sbb > 0.0 ? sab / sbb : std::numeric_limits<double>::quiet_NaN();

  auto& rs = rep.residual_stats;
  rs.count = n;
  double sum = 0.0;
  for (double r : resid) sum += r;
  rs.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double r : resid) ss += (r - rs.mean) * (r - rs.mean);
  rs.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  std::vector<double> sorted_resid = resid;
  std::sort(sorted_resid.begin(), sorted_resid.end());
  rs.median = quantile_type7(sorted_resid, 0.5);
  rs.min = sorted_resid.front();
  rs.max = sorted_resid.back();

  auto& db = rep.density_bins;
  db.bins = std::max<std::size_t>(opts.density_bins, 1);
  db.lo = std::min(*std::min_element(va.begin(), va.end()), *std::min_element(vb.begin(), vb.end()));
  db.hi = std::max(*std::max_element(va.begin(), va.end()), *std::max_element(vb.begin(), vb.end()));
  if (!(db.hi > db.lo)) db.hi = db.lo + 1.0;
  db.counts.assign(db.bins * db.bins, 0);
  const double width = (db.hi - db.lo) / static_cast<double>(db.bins);
  auto bin_of = [&](double v) {
    const auto k = static_cast<std::size_t>(std::floor((v - db.lo) / width));
    return std::min(k, db.bins - 1);
  };
  for (std::size_t i = 0; i < n; ++i) ++db.counts[bin_of(va[i]) * db.bins + bin_of(vb[i])];

  std::sort(va.begin(), va.end());
  std::sort(vb.begin(), vb.end());
  if (opts.qq_points == 0 || opts.qq_points >= n) {
    rep.qq_pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rep.qq_pairs.emplace_back(va[i], vb[i]);
  } else {
    const std::size_t m = std::max<std::size_t>(opts.qq_points, 2);
    for (std::size_t i = 0; i < m; ++i) {
      const double p = static_cast<double>(i) / static_cast<double>(m - 1);
      rep.qq_pairs.emplace_back(quantile_type7(va, p), quantile_type7(vb, p));
    }
  }
  return rep;
}

}  // namespace qrmap
