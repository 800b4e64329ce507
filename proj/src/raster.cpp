#include "qrmap/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "qrmap/errors.hpp"
#include "qrmap/text_io.hpp"

namespace qrmap {

namespace {

bool close(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

bool GridGeometry::matches(const GridGeometry& o, double rel_tol) const {
  return nrows == o.nrows && ncols == o.ncols && close(x_origin, o.x_origin, rel_tol) &&
         close(y_origin, o.y_origin, rel_tol) && close(cellsize, o.cellsize, rel_tol);
}

std::string GridGeometry::describe() const {
  std::ostringstream out;
  out << nrows << "x" << ncols << " cells of " << format_double(cellsize) << " at ("
      << format_double(x_origin) << ", " << format_double(y_origin) << ")";
  return out.str();
}

Raster::Raster(GridGeometry geometry, double nodata, std::vector<double> values)
    : geometry_(geometry), nodata_(nodata), values_(std::move(values)) {
  if (!(geometry_.cellsize > 0.0) || !std::isfinite(geometry_.cellsize)) {
    throw DataError("raster cellsize must be positive");
  }
  if (!std::isfinite(nodata_)) throw DataError("raster nodata sentinel must be finite");
  if (values_.size() != geometry_.cells()) {
    throw DataError("raster has " + std::to_string(values_.size()) + " values for " +
                    std::to_string(geometry_.nrows) + "x" + std::to_string(geometry_.ncols) + " cells");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) && values_[i] != nodata_) {
      throw DataError("raster cell " + std::to_string(i) + " is neither finite nor nodata");
    }
  }
}

Raster Raster::filled(const GridGeometry& geometry, double value, double nodata) {
  return Raster(geometry, nodata, std::vector<double>(geometry.cells(), value));
}

std::size_t Raster::valid_count() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(),
                                                [&](double v) { return v != nodata_; }));
}

double Raster::valid_mean() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (double v : values_) {
    if (v == nodata_) continue;
    sum += v;
    ++count;
  }
  return count ? sum / static_cast<double>(count) : std::nan("");
}

Raster read_ascii_grid(std::istream& in, const std::string& source) {
  std::map<std::string, double> header;
  std::string token;
  std::vector<double> values;
  bool in_body = false;
  while (in >> token) {
    if (!in_body) {
      std::string key = token;
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      if (!key.empty() && (std::isalpha(static_cast<unsigned char>(key[0])) || key[0] == '_')) {
        std::string value;
        if (!(in >> value)) throw DataError(source + ": header key '" + token + "' has no value");
        double v = 0.0;
        if (!parse_double(value, v)) throw DataError(source + ": bad header value '" + value + "' for " + token);
        header[key] = v;
        continue;
      }
      in_body = true;
    }
    double v = 0.0;
    if (!parse_double(token, v)) throw DataError(source + ": cannot parse cell value '" + token + "'");
    values.push_back(v);
  }
  auto need = [&](const char* key) {
    const auto it = header.find(key);
    if (it == header.end()) throw DataError(source + ": missing header key " + key);
    return it->second;
  };
  GridGeometry g;
  const double ncols = need("ncols");
  const double nrows = need("nrows");
  if (ncols < 1 || nrows < 1 || ncols != std::floor(ncols) || nrows != std::floor(nrows)) {
    throw DataError(source + ": ncols/nrows must be positive integers");
  }
  g.ncols = static_cast<std::size_t>(ncols);
  g.nrows = static_cast<std::size_t>(nrows);
  g.cellsize = need("cellsize");
  if (header.count("xllcorner")) {
    g.x_origin = header["xllcorner"];
  } else if (header.count("xllcenter")) {
    g.x_origin = header["xllcenter"] - 0.5 * g.cellsize;
  } else {
    throw DataError(source + ": missing header key xllcorner");
  }
  if (header.count("yllcorner")) {
    g.y_origin = header["yllcorner"];
  } else if (header.count("yllcenter")) {
    g.y_origin = header["yllcenter"] - 0.5 * g.cellsize;
  } else {
    throw DataError(source + ": missing header key yllcorner");
  }
  const double nodata = header.count("nodata_value") ? header["nodata_value"] : kDefaultNodata;
  if (values.size() != g.cells()) {
    throw DataError(source + ": expected " + std::to_string(g.cells()) + " cell values, found " +
                    std::to_string(values.size()));
  }
  try {
    return Raster(g, nodata, std::move(values));
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

Raster read_ascii_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open raster '" + path.string() + "'");
  return read_ascii_grid(in, path.string());
}

void write_ascii_grid(std::ostream& out, const Raster& raster) {
  const auto& g = raster.geometry();
  out << "ncols " << g.ncols << '\n'
      << "nrows " << g.nrows << '\n'
      << "xllcorner " << format_double(g.x_origin) << '\n'
      << "yllcorner " << format_double(g.y_origin) << '\n'
      << "cellsize " << format_double(g.cellsize) << '\n'
      << "NODATA_value " << format_double(raster.nodata()) << '\n';
  for (std::size_t r = 0; r < g.nrows; ++r) {
    for (std::size_t c = 0; c < g.ncols; ++c) {
      if (c) out << ' ';
      out << format_double(raster.at(r, c));
    }
    out << '\n';
  }
}

void write_ascii_grid(const std::filesystem::path& path, const Raster& raster) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write raster '" + path.string() + "'");
  write_ascii_grid(out, raster);
}

}  // namespace qrmap
