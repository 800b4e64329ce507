#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qrmap/config.hpp"
#include "qrmap/errors.hpp"
#include "qrmap/loss.hpp"
#include "qrmap/ols.hpp"
#include "qrmap/oracle.hpp"
#include "qrmap/pipeline.hpp"
#include "qrmap/quantile_regression.hpp"
#include "qrmap/raster.hpp"
#include "qrmap/raster_predict.hpp"
#include "qrmap/validation.hpp"

namespace py = pybind11;
using namespace qrmap;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Python callers pass a plain matrix whose first column is the intercept.
DesignMatrix make_design(const Eigen::MatrixXd& X, std::optional<std::vector<std::string>> names) {
  std::vector<ColumnInfo> cols;
  cols.reserve(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (j == 0) {
      cols.push_back({"(Intercept)", ColumnKind::intercept, ""});
      continue;
    }
    std::string name = "x" + std::to_string(j);
    if (names) {
      if (names->size() != static_cast<std::size_t>(X.cols() - 1))
        throw std::invalid_argument("names must label every column after the intercept");
      name = (*names)[j - 1];
    }
    cols.push_back({name, ColumnKind::continuous, name});
  }
  return DesignMatrix(X, std::move(cols));
}

SolverMethod parse_method(const std::string& m) {
  if (m == "automatic") return SolverMethod::automatic;
  if (m == "interior_point") return SolverMethod::interior_point;
  if (m == "enumeration") return SolverMethod::enumeration;
  throw std::invalid_argument("unknown solver method '" + m + "'");
}

Raster raster_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a,
                         double x_origin, double y_origin, double cellsize, double nodata) {
  if (a.ndim() != 2) throw std::invalid_argument("raster values must be a 2-D array");
  GridGeometry g;
  g.nrows = static_cast<std::size_t>(a.shape(0));
  g.ncols = static_cast<std::size_t>(a.shape(1));
  g.x_origin = x_origin;
  g.y_origin = y_origin;
  g.cellsize = cellsize;
  return Raster(g, nodata, std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> raster_array(const Raster& r) {
  const auto& g = r.geometry();
  py::array_t<double> out({g.nrows, g.ncols});
  std::copy(r.values().begin(), r.values().end(), out.mutable_data());
  return out;
}

py::dict stats_dict(const CoefficientStats& s) {
  py::dict d;
  d["median"] = s.median;
  d["q25"] = s.q25;
  d["q75"] = s.q75;
  d["whisker_lo"] = s.whisker_lo;
  d["whisker_hi"] = s.whisker_hi;
  d["ci_lo"] = s.ci_lo_95 ? py::cast(*s.ci_lo_95) : py::none();
  d["ci_hi"] = s.ci_hi_95 ? py::cast(*s.ci_hi_95) : py::none();
  d["draws"] = s.draws;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of qrmap";
  m.attr("__version__") = QRMAP_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("pinball_loss", &pinball_loss, py::arg("x"), py::arg("tau"));
  m.def("default_tau_grid", &default_tau_grid);

  py::class_<QuantileFit>(m, "QuantileFit")
      .def_readonly("tau", &QuantileFit::tau)
      .def_readonly("beta", &QuantileFit::beta)
      .def_readonly("residuals", &QuantileFit::residuals)
      .def_readonly("objective", &QuantileFit::objective)
      .def_readonly("iterations", &QuantileFit::iterations)
      .def_readonly("basis", &QuantileFit::basis)
      .def_property_readonly("status", [](const QuantileFit& f) { return to_string(f.solver_status); })
      .def("__repr__", [](const QuantileFit& f) {
        return "<QuantileFit tau=" + pipeline::tau_label(f.tau) + " status=" +
               to_string(f.solver_status) + ">";
      });

  m.def(
      "fit_quantile",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau, const std::string& method,
         std::optional<Eigen::VectorXd> warm_start, std::optional<std::vector<std::string>> names) {
        SolverOptions opts;
        opts.method = parse_method(method);
        opts.warm_start = std::move(warm_start);
        const auto design = make_design(X, std::move(names));
        py::gil_scoped_release release;
        return fit_quantile(design, y, tau, opts);
      },
      py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("method") = "automatic",
      py::arg("warm_start") = py::none(), py::arg("names") = py::none(),
      "Quantile regression of y on X; the first column of X must be all ones.");

  m.def(
      "fit_profile",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<double> taus, int workers) {
        const auto design = make_design(X, std::nullopt);
        py::gil_scoped_release release;
        return fit_profile(design, y, taus, {}, workers).fits;
      },
      py::arg("X"), py::arg("y"), py::arg("taus") = std::vector<double>{}, py::arg("workers") = 1);

  py::class_<OlsFit>(m, "OlsFit")
      .def_readonly("beta", &OlsFit::beta)
      .def_readonly("residuals", &OlsFit::residuals)
      .def_readonly("rss", &OlsFit::rss)
      .def_readonly("sigma2_hat", &OlsFit::sigma2_hat)
      .def_readonly("standard_errors", &OlsFit::standard_errors);

  m.def(
      "fit_ols",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
        return fit_ols(make_design(X, std::nullopt), y);
      },
      py::arg("X"), py::arg("y"));

  py::class_<CvEntry>(m, "CvEntry")
      .def_readonly("tau", &CvEntry::tau)
      .def_readonly("r1", &CvEntry::r1)
      .def_readonly("mean_heldout_pinball", &CvEntry::mean_heldout_pinball)
      .def_readonly("n", &CvEntry::n)
      .def_readonly("skipped_folds", &CvEntry::skipped_folds)
      .def_readonly("heldout_pinball_sum", &CvEntry::heldout_pinball_sum)
      .def_readonly("reference_pinball_sum", &CvEntry::reference_pinball_sum);

  m.def(
      "loocv",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<double> taus, int workers) {
        if (taus.empty()) taus = default_tau_grid();
        ValidationOptions opts;
        opts.workers = workers;
        const auto design = make_design(X, std::nullopt);
        py::gil_scoped_release release;
        return loocv(design, y, taus, opts).entries;
      },
      py::arg("X"), py::arg("y"), py::arg("taus") = std::vector<double>{}, py::arg("workers") = 1);

  m.def(
      "in_sample_r1",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau) {
        return in_sample_r1(make_design(X, std::nullopt), y, tau);
      },
      py::arg("X"), py::arg("y"), py::arg("tau"));

  py::class_<BootstrapEnsemble>(m, "BootstrapEnsemble")
      .def_readonly("tau", &BootstrapEnsemble::tau)
      .def_readonly("draws", &BootstrapEnsemble::draws)
      .def_readonly("B", &BootstrapEnsemble::B)
      .def_readonly("master_seed", &BootstrapEnsemble::master_seed)
      .def_readonly("failed_replicates", &BootstrapEnsemble::failed_replicates)
      .def_readonly("nonconverged_replicates", &BootstrapEnsemble::nonconverged_replicates);

  m.def(
      "bootstrap",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau, std::size_t B,
         std::uint64_t seed, int workers) {
        BootstrapOptions opts;
        opts.workers = workers;
        const auto design = make_design(X, std::nullopt);
        py::gil_scoped_release release;
        return bootstrap(design, y, tau, B, seed, opts);
      },
      py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("B"), py::arg("seed") = 1,
      py::arg("workers") = 1);

  m.def(
      "summarize_bootstrap",
      [](const BootstrapEnsemble& ens) {
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < ens.draws.cols(); ++j) names.push_back("b" + std::to_string(j));
        const auto s = summarize_coefficients({ens}, names);
        py::list out;
        for (const auto& c : s.stats[0]) out.append(stats_dict(c));
        return out;
      },
      py::arg("ensemble"),
      "Per-coefficient median, quartiles, whiskers and percentile 95% interval.");

  m.def("resample_indices", &resample_indices, py::arg("n"), py::arg("seed"), py::arg("replicate"),
        py::arg("attempt") = 0);

  m.def(
      "brute_force_qr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau) {
        const auto r = oracle::brute_force_qr(X, y, tau);
        return py::make_tuple(r.beta, r.objective, r.subset);
      },
      py::arg("X"), py::arg("y"), py::arg("tau"),
      "Exhaustive reference fit for tiny problems; returns (beta, objective, subset).");

  py::class_<Raster>(m, "Raster")
      .def(py::init(&raster_from_array), py::arg("values"), py::arg("x_origin") = 0.0,
           py::arg("y_origin") = 0.0, py::arg("cellsize") = 1.0, py::arg("nodata") = kDefaultNodata)
      .def_property_readonly("values", &raster_array)
      .def_property_readonly("nodata", &Raster::nodata)
      .def_property_readonly("shape",
                             [](const Raster& r) {
                               return py::make_tuple(r.geometry().nrows, r.geometry().ncols);
                             })
      .def_property_readonly("x_origin", [](const Raster& r) { return r.geometry().x_origin; })
      .def_property_readonly("y_origin", [](const Raster& r) { return r.geometry().y_origin; })
      .def_property_readonly("cellsize", [](const Raster& r) { return r.geometry().cellsize; })
      .def("valid_count", &Raster::valid_count)
      .def("valid_mean", &Raster::valid_mean);

  m.def("read_ascii_grid", py::overload_cast<const std::filesystem::path&>(&read_ascii_grid),
        py::arg("path"));
  m.def("write_ascii_grid",
        py::overload_cast<const std::filesystem::path&, const Raster&>(&write_ascii_grid),
        py::arg("path"), py::arg("raster"));
  m.def("downscale", &downscale, py::arg("raster"), py::arg("factor"));
  m.def("downscale_to_cellsize", &downscale_to_cellsize, py::arg("raster"), py::arg("cellsize"));
  m.def(
      "iqr_map", [](const std::vector<Raster>& reps) { return iqr_map(reps); }, py::arg("replicates"));

  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& config, std::optional<std::uint64_t> seed,
         std::optional<std::vector<double>> taus, std::optional<std::size_t> bootstrap_b,
         std::optional<int> workers, std::optional<std::filesystem::path> out) {
        auto cfg = load_config(config);
        if (seed) cfg.seed = *seed;
        if (taus) {
          validate_tau_grid(*taus);
          cfg.taus = *taus;
        }
        if (bootstrap_b) cfg.bootstrap_b = *bootstrap_b;
        if (workers) {
          if (*workers < 1) throw ConfigError("workers must be at least 1");
          cfg.workers = *workers;
        }
        if (out) cfg.out_dir = *out;
        pipeline::CommandResult r;
        {
          py::gil_scoped_release release;
          if (command == "fit") r = pipeline::run_fit(cfg);
          else if (command == "cv") r = pipeline::run_cv(cfg);
          else if (command == "bootstrap") r = pipeline::run_bootstrap(cfg);
          else if (command == "predict") r = pipeline::run_predict(cfg);
          else if (command == "compare") r = pipeline::run_compare(cfg);
          else throw ConfigError("unknown command '" + command + "'");
        }
        py::dict d;
        d["exit_code"] = r.exit_code;
        d["written"] = r.written;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("command"), py::arg("config"), py::arg("seed") = py::none(), py::arg("taus") = py::none(),
      py::arg("bootstrap_b") = py::none(), py::arg("workers") = py::none(), py::arg("out") = py::none(),
      "Run one pipeline command from a config file, as the qrmap CLI does.");
}
