#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "qrmap/oracle.hpp"
#include "qrmap/raster.hpp"

namespace qrmap::test {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Scratch directory holding a synthetic survey table (response "soc",
/// continuous "elev" and "slope", categorical "lc" with numeric codes),
/// matching covariate rasters and a config file.
class Workspace {
 public:
  explicit Workspace(const std::string& tag, std::size_t n = 120, std::uint64_t seed = 7) {
    dir_ = std::filesystem::temp_directory_path() / ("qrmap_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
    write_inputs(n, seed);
  }
  ~Workspace() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  Workspace(const Workspace&) = delete;
  Workspace& operator=(const Workspace&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  /// Base config plus extra lines; returns its path.
  std::filesystem::path config(const std::string& extra = "", const std::string& name = "run.cfg") const {
    const std::string text =
        "# synthetic survey\n"
        "input = points.csv\n"
        "x_column = x\n"
        "y_column = y\n"
        "response = soc\n"
        "response_transform = log\n"
        "covariate = elev continuous\n"
        "covariate = slope continuous log\n"
        "covariate = lc categorical\n"
        "raster.elev = elev.asc\n"
        "raster.slope = slope.asc\n"
        "raster.lc = lc.asc\n"
        "bootstrap_b = 50\n"
        "seed = 3\n"
        "out = out\n" +
        extra;
    spit(dir_ / name, text);
    return dir_ / name;
  }

  static constexpr std::size_t kRows = 8;
  static constexpr std::size_t kCols = 10;

 private:
  void write_inputs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z;
    std::ostringstream csv;
    csv << "x,y,soc,elev,slope,lc\n";
    for (std::size_t i = 0; i < n; ++i) {
      const double elev = 100.0 + 400.0 * u(rng);
      const double slope = 0.5 + 20.0 * u(rng);
      const int lc = i % 7 < 4 ? 1 : (i % 7 < 6 ? 2 : 3);
      const double mu = 1.0 + 0.002 * elev + 0.1 * std::log(slope) + (lc == 2 ? 0.3 : 0.0);
      csv << u(rng) * 1000.0 << ',' << u(rng) * 800.0 << ',' << std::exp(mu + 0.25 * z(rng)) << ',' << elev << ','
          << slope << ',' << lc << '\n';
    }
    spit(dir_ / "points.csv", csv.str());

    const GridGeometry g{kRows, kCols, 0.0, 0.0, 100.0};
    std::vector<double> elev(g.cells()), slope(g.cells()), lc(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) {
      elev[i] = i % 13 == 5 ? kDefaultNodata : 120.0 + 3.0 * static_cast<double>(i);
      slope[i] = 1.0 + static_cast<double>(i % 9);
      lc[i] = 1.0 + static_cast<double>((i / 7) % 3);
    }
    write_ascii_grid(dir_ / "elev.asc", Raster(g, kDefaultNodata, elev));
    write_ascii_grid(dir_ / "slope.asc", Raster(g, kDefaultNodata, slope));
    write_ascii_grid(dir_ / "lc.asc", Raster(g, kDefaultNodata, lc));
  }

  std::filesystem::path dir_;
};

}  // namespace qrmap::test
