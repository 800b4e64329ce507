#include "qrmap/features.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "qrmap/errors.hpp"

namespace qrmap {

namespace {

std::vector<double> transformed_numeric(const Dataset& data, const CovariateSpec& spec) {
  auto values = data.numeric(spec.name);
  if (spec.transform != Transform::log) return values;
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0)) {
      bad.push_back(i);
    } else {
      values[i] = std::log(values[i]);
    }
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "log transform of '" << spec.name << "' needs positive values; offending rows:";
    for (std::size_t i = 0; i < bad.size() && i < 20; ++i) msg << ' ' << bad[i];
    if (bad.size() > 20) msg << " ... (" << bad.size() << " total)";
    throw DataError(msg.str());
  }
  return values;
}

std::string column_label(const CovariateSpec& spec) {
  return spec.transform == Transform::log ? "log(" + spec.name + ")" : spec.name;
}

// Modal label over the selected rows; ties go to the smallest label.
std::pair<std::string, std::size_t> modal_class(const std::map<std::string, std::size_t>& counts) {
  std::pair<std::string, std::size_t> best{"", 0};
  for (const auto& [label, count] : counts) {
    if (count > best.second) best = {label, count};
  }
  return best;
}

}  // namespace

CorrelationMatrix pearson_matrix(const Dataset& data) {
  CorrelationMatrix out;
  std::vector<std::vector<double>> cols;
  for (const auto& spec : data.schema().covariates) {
    if (spec.kind != CovariateKind::continuous) continue;
    out.names.push_back(spec.name);
    cols.push_back(transformed_numeric(data, spec));
  }
  const std::size_t p = cols.size();
  if (p < 2) throw DataError("correlation analysis needs at least two continuous covariates");
  const std::size_t n = data.size();
  if (n < 2) throw DataError("correlation analysis needs at least two rows");

  Eigen::MatrixXd centered(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (double v : cols[j]) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = cols[j][i] - mean;
      centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
      ss += d * d;
    }
    if (!(ss > 0.0)) throw DataError("covariate '" + out.names[j] + "' has zero variance");
    centered.col(static_cast<Eigen::Index>(j)) /= std::sqrt(ss);
  }
  out.r = centered.transpose() * centered;
  for (Eigen::Index i = 0; i < out.r.rows(); ++i) {
    out.r(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::clamp(out.r(i, j), -1.0, 1.0);
      out.r(i, j) = out.r(j, i) = v;
    }
  }
  return out;
}

CollinearityResult collinearity_filter(const CorrelationMatrix& corr, double threshold) {
  const auto p = static_cast<Eigen::Index>(corr.names.size());
  std::vector<bool> alive(static_cast<std::size_t>(p), true);
  CollinearityResult out;
  for (;;) {
    Eigen::Index victim = -1;
    double victim_mean = -1.0;
    Eigen::Index survivors = 0;
    for (Eigen::Index i = 0; i < p; ++i) survivors += alive[i] ? 1 : 0;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!alive[i]) continue;
      bool violates = false;
      double sum = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j == i || !alive[j]) continue;
        sum += std::abs(corr.r(i, j));
        violates = violates || std::abs(corr.r(i, j)) > threshold;
      }
      if (!violates) continue;
      const double mean = sum / static_cast<double>(survivors - 1);
      // Among equal means the later covariate is dropped.
      if (victim < 0 || mean >= victim_mean - 1e-12) {
        victim = i;
        victim_mean = std::max(mean, victim_mean);
      }
    }
    if (victim < 0) break;
    Eigen::Index partner = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j == victim || !alive[j]) continue;
      if (partner < 0 || std::abs(corr.r(victim, j)) > std::abs(corr.r(victim, partner))) partner = j;
    }
    out.dropped.push_back({corr.names[victim], corr.names[partner], corr.r(victim, partner)});
    alive[victim] = false;
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    if (alive[i]) out.kept.push_back(corr.names[i]);
  }
  return out;
}

std::string dummy_name(const std::string& covariate, const std::string& label) {
  return covariate + "=" + label;
}

std::string modal_indicator_name(const std::string& covariate, const std::string& label) {
  return dummy_name(covariate, label);
}

Encoding encode_categoricals(const Dataset& data, std::size_t rare_threshold) {
  Encoding enc;
  enc.keep.assign(data.size(), true);
  enc.report.rows_in = data.size();

  std::vector<std::pair<std::string, std::vector<std::string>>> columns;
  for (const auto& spec : data.schema().covariates) {
    if (spec.kind == CovariateKind::categorical) columns.emplace_back(spec.name, data.labels(spec.name));
  }
  auto counts_of = [&](const std::vector<std::string>& labels) {
    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (enc.keep[i]) ++counts[labels[i]];
    }
    return counts;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [name, labels] : columns) {
      for (const auto& [label, count] : counts_of(labels)) {
        if (count > rare_threshold) continue;
        std::size_t removed = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
          if (enc.keep[i] && labels[i] == label) {
            enc.keep[i] = false;
            ++removed;
          }
        }
        enc.report.pruned_rare_classes.push_back({name, label, count, removed});
        changed = true;
      }
    }
  }

  for (const auto& [name, labels] : columns) {
    const auto counts = counts_of(labels);
    if (counts.size() < 2) {
      throw DataError("categorical covariate '" + name + "' has " +
                      (counts.empty() ? std::string("no classes") : "a single class '" + counts.begin()->first + "'") +
                      " after rare-class pruning; no contrast possible");
    }
    const auto [baseline, count] = modal_class(counts);
    CategoricalEncoding ce{name, baseline, {}};
    for (const auto& [label, c] : counts) {
      if (label != baseline) ce.levels.push_back(label);
    }
    enc.report.baseline_classes.push_back({name, baseline, count});
    enc.covariates.push_back(std::move(ce));
  }
  std::size_t kept = 0;
  for (bool k : enc.keep) kept += k ? 1 : 0;
  enc.report.rows_out = kept;
  return enc;
}

ModelData build_design(const Dataset& full, const FeaturePlan& plan) {
  const Dataset data = plan.encoding.keep.empty() ? full : full.filter(plan.encoding.keep);
  std::vector<std::size_t> source_rows;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (plan.encoding.keep.empty() || plan.encoding.keep[i]) source_rows.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto& schema = data.schema();

  std::vector<ColumnInfo> columns{{"(Intercept)", ColumnKind::intercept, ""}};
  std::vector<std::vector<double>> values;
  std::ostringstream log_errors;
  for (const auto& name : plan.continuous) {
    const auto idx = schema.index_of(name);
    if (idx == CovariateSchema::npos || schema.covariates[idx].kind != CovariateKind::continuous) {
      throw ConfigError("feature plan names unknown continuous covariate '" + name + "'");
    }
    const auto& spec = schema.covariates[idx];
    try {
      values.push_back(transformed_numeric(data, spec));
    } catch (const DataError& e) {
      log_errors << e.what() << "; ";
      values.emplace_back();
    }
    columns.push_back({column_label(spec), ColumnKind::continuous, spec.name});
  }
  for (const auto& ce : plan.encoding.covariates) {
    const auto labels = data.labels(ce.covariate);
    for (const auto& level : ce.levels) {
      std::vector<double> col(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) col[i] = labels[i] == level ? 1.0 : 0.0;
      values.push_back(std::move(col));
      columns.push_back({dummy_name(ce.covariate, level), ColumnKind::dummy, ce.covariate});
    }
  }

  Eigen::VectorXd y(n);
  const auto response = data.response();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = response[static_cast<std::size_t>(i)];
    if (schema.response_transform == Transform::log) {
      if (!(v > 0.0)) {
        log_errors << "log transform of response '" << schema.response
                   << "' needs positive values; offending row " << i << "; ";
      }
      y(i) = std::log(v);
    } else {
      y(i) = v;
    }
  }
  if (const auto msg = log_errors.str(); !msg.empty()) throw DataError(msg.substr(0, msg.size() - 2));

  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(columns.size()));
  X.col(0).setOnes();
  for (std::size_t j = 0; j < values.size(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) X(i, static_cast<Eigen::Index>(j + 1)) = values[j][static_cast<std::size_t>(i)];
  }
  return ModelData{DesignMatrix(std::move(X), std::move(columns)), std::move(y), std::move(source_rows)};
}

FeaturePlan plan_features(const Dataset& data, double collinearity_threshold, std::size_t rare_threshold) {
  FeaturePlan plan;
  std::vector<std::string> continuous;
  bool has_categorical = false;
  for (const auto& spec : data.schema().covariates) {
    if (spec.kind == CovariateKind::continuous) {
      continuous.push_back(spec.name);
    } else {
      has_categorical = true;
    }
  }
  std::vector<DroppedCovariate> dropped;
  if (continuous.size() >= 2) {
    auto filtered = collinearity_filter(pearson_matrix(data), collinearity_threshold);
    plan.continuous = std::move(filtered.kept);
    dropped = std::move(filtered.dropped);
  } else {
    plan.continuous = continuous;
  }
  if (has_categorical) {
    plan.encoding = encode_categoricals(data, rare_threshold);
  } else {
    plan.encoding.keep.assign(data.size(), true);
    plan.encoding.report.rows_in = plan.encoding.report.rows_out = data.size();
  }
  plan.encoding.report.dropped_collinear = std::move(dropped);
  // Column list without materialising the matrix.
  auto& cols = plan.encoding.report.final_columns;
  cols.push_back({"(Intercept)", ColumnKind::intercept, ""});
  for (const auto& name : plan.continuous) {
    const auto& spec = data.schema().covariates[data.schema().index_of(name)];
    cols.push_back({column_label(spec), ColumnKind::continuous, name});
  }
  for (const auto& ce : plan.encoding.covariates) {
    for (const auto& level : ce.levels) cols.push_back({dummy_name(ce.covariate, level), ColumnKind::dummy, ce.covariate});
  }
  return plan;
}

ModelData build_simple_model(const Dataset& data) {
  std::vector<ColumnInfo> columns{{"(Intercept)", ColumnKind::intercept, ""}};
  std::vector<std::vector<double>> values;
  for (const auto& spec : data.schema().covariates) {
    if (spec.kind != CovariateKind::categorical) continue;
    const auto labels = data.labels(spec.name);
    std::map<std::string, std::size_t> counts;
    for (const auto& l : labels) ++counts[l];
    const auto modal = modal_class(counts).first;
    std::vector<double> col(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) col[i] = labels[i] == modal ? 1.0 : 0.0;
    values.push_back(std::move(col));
    columns.push_back({modal_indicator_name(spec.name, modal), ColumnKind::dummy, spec.name});
  }
  if (values.empty()) throw DataError("the simple model needs at least one categorical covariate");
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(columns.size()));
  X.col(0).setOnes();
  for (std::size_t j = 0; j < values.size(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) X(i, static_cast<Eigen::Index>(j + 1)) = values[j][static_cast<std::size_t>(i)];
  }
  Eigen::VectorXd y(n);
  const auto response = data.response();
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = data.schema().response_transform == Transform::log ? std::log(response[static_cast<std::size_t>(i)])
                                                               : response[static_cast<std::size_t>(i)];
  }
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return ModelData{DesignMatrix(std::move(X), std::move(columns)), std::move(y), std::move(rows)};
}

}  // namespace qrmap
