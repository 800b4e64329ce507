#include "qrmap/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "qrmap/errors.hpp"
#include "qrmap/text_io.hpp"

namespace qrmap {

std::string to_string(CovariateKind kind) {
  return kind == CovariateKind::continuous ? "continuous" : "categorical";
}

std::string to_string(Transform transform) { return transform == Transform::log ? "log" : "none"; }

void CovariateSchema::validate() const {
  if (response.empty()) throw ConfigError("schema has no response variable");
  if (covariates.empty()) throw ConfigError("schema declares no covariates");
  std::set<std::string> seen{response};
  for (const auto& c : covariates) {
    if (c.name.empty()) throw ConfigError("schema has a covariate with an empty name");
    if (!seen.insert(c.name).second) throw ConfigError("duplicate variable name '" + c.name + "' in schema");
    if (c.kind == CovariateKind::categorical && c.transform != Transform::none) {
      throw ConfigError("categorical covariate '" + c.name + "' cannot be transformed");
    }
  }
}

std::size_t CovariateSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (covariates[i].name == name) return i;
  }
  return npos;
}

Dataset::Dataset(CovariateSchema schema, std::vector<Observation> rows)
    : schema_(std::move(schema)), rows_(std::move(rows)) {
  schema_.validate();
  std::vector<std::size_t> nonpositive;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    if (row.values.size() != schema_.covariates.size()) {
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(row.values.size()) +
                      " covariate values, schema declares " + std::to_string(schema_.covariates.size()));
    }
    if (!std::isfinite(row.response)) {
      throw DataError("row " + std::to_string(r) + ": response '" + schema_.response + "' is not finite");
    }
    if (schema_.response_transform == Transform::log && !(row.response > 0.0)) nonpositive.push_back(r);
    for (std::size_t c = 0; c < row.values.size(); ++c) {
      const bool is_num = std::holds_alternative<double>(row.values[c]);
      const bool want_num = schema_.covariates[c].kind == CovariateKind::continuous;
      if (is_num != want_num) {
        throw DataError("row " + std::to_string(r) + ": covariate '" + schema_.covariates[c].name +
                        "' does not match its declared kind");
      }
      if (is_num && !std::isfinite(std::get<double>(row.values[c]))) {
        throw DataError("row " + std::to_string(r) + ": covariate '" + schema_.covariates[c].name +
                        "' is not finite");
      }
    }
  }
  if (!nonpositive.empty()) {
    std::ostringstream msg;
    msg << "log transform of response '" << schema_.response << "' needs positive values; offending rows:";
    for (std::size_t i = 0; i < nonpositive.size() && i < 20; ++i) msg << ' ' << nonpositive[i];
    if (nonpositive.size() > 20) msg << " ... (" << nonpositive.size() << " total)";
    throw DataError(msg.str());
  }
}

std::vector<double> Dataset::response() const {
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r.response);
  return out;
}

std::vector<double> Dataset::numeric(const std::string& name) const {
  const auto idx = schema_.index_of(name);
  if (idx == CovariateSchema::npos || schema_.covariates[idx].kind != CovariateKind::continuous) {
    throw DataError("no continuous covariate named '" + name + "'");
  }
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(std::get<double>(r.values[idx]));
  return out;
}

std::vector<std::string> Dataset::labels(const std::string& name) const {
  const auto idx = schema_.index_of(name);
  if (idx == CovariateSchema::npos || schema_.covariates[idx].kind != CovariateKind::categorical) {
    throw DataError("no categorical covariate named '" + name + "'");
  }
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(std::get<std::string>(r.values[idx]));
  return out;
}

Dataset Dataset::filter(const std::vector<bool>& keep) const {
  if (keep.size() != rows_.size()) throw std::invalid_argument("filter mask has the wrong length");
  std::vector<Observation> kept;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (keep[i]) kept.push_back(rows_[i]);
  }
  return Dataset(schema_, std::move(kept));
}

LoadedDataset read_dataset_csv(std::istream& in, const CovariateSchema& schema,
                               const CsvReadOptions& opts, const std::string& source) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty file, expected a header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv_record(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw ConfigError(source + ": schema column '" + name + "' not found in header");
  };
  const std::size_t response_col = column_of(schema.response);
  std::vector<std::size_t> cov_cols;
  for (const auto& c : schema.covariates) cov_cols.push_back(column_of(c.name));
  std::optional<std::size_t> x_col, y_col;
  if (opts.x_column) x_col = column_of(*opts.x_column);
  if (opts.y_column) y_col = column_of(*opts.y_column);

  std::vector<Observation> rows;
  std::size_t dropped = 0;
  std::size_t line_no = 1;
  auto number = [&](const std::string& field, const std::string& name) {
    double v = 0.0;
    if (!parse_double(field, v) || !std::isfinite(v)) {
      throw DataError(source + ":" + std::to_string(line_no) + ": column '" + name +
                      "': cannot parse '" + field + "' as a number");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_record(line);
    if (fields.size() != header.size()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    bool missing = trim(fields[response_col]).empty();
    for (std::size_t c : cov_cols) missing = missing || trim(fields[c]).empty();
    if (missing) {
      ++dropped;
      continue;
    }
    Observation obs;
    obs.response = number(fields[response_col], schema.response);
    for (std::size_t i = 0; i < schema.covariates.size(); ++i) {
      const auto& spec = schema.covariates[i];
      const auto& field = fields[cov_cols[i]];
      if (spec.kind == CovariateKind::continuous) {
        obs.values.emplace_back(number(field, spec.name));
      } else {
        obs.values.emplace_back(std::string(trim(field)));
      }
    }
    if (x_col && !trim(fields[*x_col]).empty()) obs.x = number(fields[*x_col], *opts.x_column);
    if (y_col && !trim(fields[*y_col]).empty()) obs.y = number(fields[*y_col], *opts.y_column);
    rows.push_back(std::move(obs));
  }
  try {
    return LoadedDataset{Dataset(schema, std::move(rows)), dropped};
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

LoadedDataset read_dataset_csv(const std::filesystem::path& path, const CovariateSchema& schema,
                               const CsvReadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_dataset_csv(in, schema, opts, path.string());
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const auto& schema = data.schema();
  bool coords = false;
  for (const auto& row : data.rows()) coords = coords || row.x || row.y;
  out << csv_escape(schema.response);
  for (const auto& c : schema.covariates) out << ',' << csv_escape(c.name);
  out << (coords ? ",x,y\n" : "\n");
  for (const auto& row : data.rows()) {
    out << format_double(row.response);
    for (const auto& v : row.values) {
      out << ',';
      if (const auto* d = std::get_if<double>(&v)) {
        out << format_double(*d);
      } else {
        out << csv_escape(std::get<std::string>(v));
      }
    }
    if (coords) {
      out << ',' << (row.x ? format_double(*row.x) : "") << ',' << (row.y ? format_double(*row.y) : "");
    }
    out << '\n';
  }
}

}  // namespace qrmap
