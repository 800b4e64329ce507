#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qrmap {

/// North-up affine grid. (x_origin, y_origin) is the lower-left corner of
/// the lower-left cell; row 0 is the northernmost row.
struct GridGeometry {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  double x_origin = 0.0;
  double y_origin = 0.0;
  double cellsize = 1.0;

  std::size_t cells() const noexcept { return nrows * ncols; }
  /// Same dimensions and coordinates equal to a relative tolerance.
  bool matches(const GridGeometry& other, double rel_tol = 1e-9) const;
  std::string describe() const;
};

inline constexpr double kDefaultNodata = -9999.0;

class Raster {
 public:
  /// Throws DataError unless values has nrows*ncols entries, each finite or
  /// exactly equal to the (finite) nodata sentinel.
  Raster(GridGeometry geometry, double nodata, std::vector<double> values);

  static Raster filled(const GridGeometry& geometry, double value, double nodata = kDefaultNodata);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  double nodata() const noexcept { return nodata_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  double at(std::size_t row, std::size_t col) const { return values_[row * geometry_.ncols + col]; }
  bool is_valid(std::size_t index) const { return values_[index] != nodata_; }
  std::size_t valid_count() const;
  /// Mean over valid cells (NaN if none).
  double valid_mean() const;

 private:
  GridGeometry geometry_;
  double nodata_;
  std::vector<double> values_;
};

/// ESRI ASCII grid: header keys ncols, nrows, xllcorner|xllcenter,
/// yllcorner|yllcenter, cellsize, optional NODATA_value (default -9999),
/// then nrows lines of ncols values from north to south.
Raster read_ascii_grid(std::istream& in, const std::string& source = "<stream>");
Raster read_ascii_grid(const std::filesystem::path& path);

void write_ascii_grid(std::ostream& out, const Raster& raster);
void write_ascii_grid(const std::filesystem::path& path, const Raster& raster);

}  // namespace qrmap
