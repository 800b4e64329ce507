#include "qrmap/pipeline.hpp"

#include <Eigen/Core>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "qrmap/errors.hpp"
#include "qrmap/features.hpp"
#include "qrmap/quantile_regression.hpp"
#include "qrmap/raster_predict.hpp"
#include "qrmap/text_io.hpp"
#include "qrmap/validation.hpp"

namespace qrmap::pipeline {

namespace fs = std::filesystem;

namespace {

struct Prepared {
  LoadedDataset loaded;
  FeaturePlan plan;
  ModelData model;
  std::optional<ModelData> simple;
};

Prepared prepare(const RunConfig& cfg) {
  CsvReadOptions read_opts{cfg.x_column, cfg.y_column};
  auto loaded = read_dataset_csv(cfg.input_csv, cfg.schema, read_opts);
  if (loaded.data.size() == 0) {
    throw DataError(cfg.input_csv.string() + ": no usable rows after dropping missing values");
  }
  auto plan = plan_features(loaded.data, cfg.collinearity_threshold, cfg.rare_threshold);
  auto model = build_design(loaded.data, plan);
  std::optional<ModelData> simple;
  bool has_categorical = false;
  for (const auto& c : cfg.schema.covariates) has_categorical = has_categorical || c.kind == CovariateKind::categorical;
  if (has_categorical) simple.emplace(build_simple_model(loaded.data));
  return Prepared{std::move(loaded), std::move(plan), std::move(model), std::move(simple)};
}

class Output {
 public:
  Output(const RunConfig& cfg, CommandResult& result) : dir_(cfg.out_dir), result_(result) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw DataError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  std::ofstream open(const fs::path& relative) {
    const fs::path path = dir_ / relative;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    result_.written.push_back(path);
    return out;
  }

  void raster(const fs::path& relative, const Raster& r) {
    auto out = open(relative);
    write_ascii_grid(out, r);
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  CommandResult& result_;
};

void write_manifest(Output& out, const std::string& command, const RunConfig& cfg) {
  auto f = out.open("manifest_" + command + ".txt");
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << cfg.config_hash;
  f << "command=" << command << '\n'
    << "qrmap_version=" << QRMAP_VERSION << '\n'
    << "eigen_version=" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n'
    << "compiler=" << __VERSION__ << '\n'
    << "config_fnv1a64=" << hash.str() << '\n'
    << "seed=" << cfg.seed << '\n'
    << "bootstrap_b=" << cfg.bootstrap_b << '\n'
    << "collinearity_threshold=" << format_double(cfg.collinearity_threshold) << '\n'
    << "rare_threshold=" << cfg.rare_threshold << '\n'
    << "taus=";
  for (std::size_t t = 0; t < cfg.taus.size(); ++t) f << (t ? "," : "") << format_double(cfg.taus[t]);
  f << '\n';
}

std::string kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::intercept: return "intercept";
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::dummy: return "dummy";
  }
  return "";
}

void write_encoding(Output& out, const Prepared& prep) {
  const auto& rep = prep.plan.encoding.report;
  auto f = out.open("encoding_report.csv");
  f << "entry,covariate,detail,value,rows_removed\n";
  f << "rows_dropped_missing,,," << prep.loaded.dropped_missing << ",\n";
  f << "rows_in,,," << rep.rows_in << ",\n";
  f << "rows_out,,," << rep.rows_out << ",\n";
  for (const auto& d : rep.dropped_collinear) {
    f << "dropped_collinear," << csv_escape(d.name) << ',' << csv_escape(d.partner) << ',' << format_double(d.r) << ",\n";
  }
  for (const auto& b : rep.baseline_classes) {
    f << "baseline_class," << csv_escape(b.covariate) << ',' << csv_escape(b.label) << ',' << b.count << ",\n";
  }
  for (const auto& p : rep.pruned_rare_classes) {
    f << "pruned_rare_class," << csv_escape(p.covariate) << ',' << csv_escape(p.label) << ',' << p.count << ','
      << p.rows_removed << '\n';
  }
  auto c = out.open("columns.csv");
  c << "index,name,kind,source_covariate\n";
  const auto& cols = prep.model.X.columns();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    c << j << ',' << csv_escape(cols[j].name) << ',' << kind_name(cols[j].kind) << ','
      << csv_escape(cols[j].source_covariate) << '\n';
  }
}

void write_betas(std::ostream& f, const QuantileProfile& profile) {
  f << "tau,column,beta\n";
  for (const auto& fit : profile.fits) {
    for (std::size_t j = 0; j < profile.columns.size(); ++j) {
      f << format_double(fit.tau) << ',' << csv_escape(profile.columns[j].name) << ','
        << format_double(fit.beta(static_cast<Eigen::Index>(j))) << '\n';
    }
  }
}

void write_summary(std::ostream& f, const CoefficientSummary& s) {
  f << "tau,column,median,q25,q75,whisker_lo,whisker_hi,ci_lo,ci_hi,draws\n";
  for (std::size_t t = 0; t < s.taus.size(); ++t) {
    for (std::size_t j = 0; j < s.columns.size(); ++j) {
      const auto& c = s.stats[t][j];
      f << format_double(s.taus[t]) << ',' << csv_escape(s.columns[j]) << ',' << format_double(c.median) << ','
        << format_double(c.q25) << ',' << format_double(c.q75) << ',' << format_double(c.whisker_lo) << ','
        << format_double(c.whisker_hi) << ',' << (c.ci_lo_95 ? format_double(*c.ci_lo_95) : "") << ','
        << (c.ci_hi_95 ? format_double(*c.ci_hi_95) : "") << ',' << c.draws << '\n';
    }
  }
}

BootstrapOptions bootstrap_options(const RunConfig& cfg) {
  BootstrapOptions opts;
  opts.workers = cfg.workers;
  return opts;
}

std::map<std::string, Raster> load_sources(const RunConfig& cfg, const std::vector<ColumnInfo>& columns) {
  std::map<std::string, Raster> sources;
  for (std::size_t j = 1; j < columns.size(); ++j) {
    const auto& name = columns[j].source_covariate;
    if (sources.count(name)) continue;
    const auto it = cfg.covariate_rasters.find(name);
    if (it == cfg.covariate_rasters.end()) {
      throw ConfigError("no raster configured for covariate '" + name + "' (add raster." + name + " = PATH)");
    }
    sources.emplace(name, read_ascii_grid(it->second));
  }
  return sources;
}

std::optional<GridGeometry> any_geometry(const RunConfig& cfg) {
  if (cfg.covariate_rasters.empty()) return std::nullopt;
  return read_ascii_grid(cfg.covariate_rasters.begin()->second).geometry();
}

}  // namespace

std::string tau_label(double tau) { return format_double(tau); }

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const DataError*>(&e)) return kDataError;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumericalFailure;
  if (dynamic_cast<const std::domain_error*>(&e)) return kConfigError;
  return kUnexpected;
}

CommandResult run_fit(const RunConfig& cfg) {
  CommandResult result;
  const auto prep = prepare(cfg);
  Output out(cfg, result);
  write_encoding(out, prep);

  const auto profile = fit_profile(prep.model.X, prep.model.y, cfg.taus, {}, cfg.workers);
  auto fb = out.open("coefficients_fit.csv");
  write_betas(fb, profile);

  auto fs_ = out.open("fit_summary.csv");
  fs_ << "model,tau,objective,in_sample_r1,solver_status,iterations,n\n";
  auto summarize = [&](const std::string& model, const QuantileProfile& prof, const ModelData& data) {
    const auto ref = fit_profile(DesignMatrix::intercept_only(data.X.rows()), data.y, cfg.taus, {}, cfg.workers);
    for (std::size_t t = 0; t < prof.fits.size(); ++t) {
      const auto& f = prof.fits[t];
      const double r1 = ref.fits[t].objective > 0.0 ? 1.0 - f.objective / ref.fits[t].objective : 0.0;
      fs_ << model << ',' << format_double(f.tau) << ',' << format_double(f.objective) << ',' << format_double(r1)
          << ',' << to_string(f.solver_status) << ',' << f.iterations << ',' << data.X.rows() << '\n';
      if (f.solver_status == SolverStatus::max_iter) {
        result.warnings.push_back(model + " model at tau=" + tau_label(f.tau) + " stopped at the iteration limit");
        result.exit_code = kNumericalFailure;
      }
    }
  };
  summarize("final", profile, prep.model);
  if (prep.simple) {
    const auto simple = fit_profile(prep.simple->X, prep.simple->y, cfg.taus, {}, cfg.workers);
    auto fsb = out.open("coefficients_simple_fit.csv");
    write_betas(fsb, simple);
    summarize("simple", simple, *prep.simple);
  }
  write_manifest(out, "fit", cfg);
  return result;
}

CommandResult run_cv(const RunConfig& cfg) {
  CommandResult result;
  const auto prep = prepare(cfg);
  Output out(cfg, result);
  ValidationOptions opts;
  opts.workers = cfg.workers;
  const auto report = loocv(prep.model.X, prep.model.y, cfg.taus, opts);
  auto f = out.open("cv_report.csv");
  f << "tau,r1,mean_heldout_pinball,n,skipped_folds\n";
  for (const auto& e : report.entries) {
    f << format_double(e.tau) << ',' << format_double(e.r1) << ',' << format_double(e.mean_heldout_pinball) << ','
      << e.n << ',' << e.skipped_folds << '\n';
  }
  write_manifest(out, "cv", cfg);
  return result;
}

CommandResult run_bootstrap(const RunConfig& cfg) {
  CommandResult result;
  if (cfg.bootstrap_b < 1) throw ConfigError("bootstrap_b must be at least 1");
  const auto prep = prepare(cfg);
  Output out(cfg, result);
  auto f = out.open("bootstrap_summary.csv");
  f << "model,tau,B,failed_replicates,nonconverged_replicates\n";
  auto run = [&](const std::string& model, const ModelData& data, const fs::path& file) {
    const auto ensembles = bootstrap_profile(data.X, data.y, cfg.taus, cfg.bootstrap_b, cfg.seed, bootstrap_options(cfg));
    const auto summary = summarize_coefficients(ensembles, data.X.column_names());
    auto cf = out.open(file);
    write_summary(cf, summary);
    for (const auto& e : ensembles) {
      f << model << ',' << format_double(e.tau) << ',' << e.B << ',' << e.failed_replicates << ','
        << e.nonconverged_replicates << '\n';
      if (e.failed_replicates == e.B) {
        throw NumericalError(model + " model: every bootstrap replicate failed at tau=" + tau_label(e.tau));
      }
    }
  };
  run("final", prep.model, "coefficients.csv");
  if (prep.simple) run("simple", *prep.simple, "coefficients_simple.csv");
  write_manifest(out, "bootstrap", cfg);
  return result;
}

CommandResult run_predict(const RunConfig& cfg) {
  CommandResult result;
  const auto prep = prepare(cfg);
  const auto& columns = prep.model.X.columns();
  const auto sources = load_sources(cfg, columns);
  const auto layers = design_rasters(columns, prep.plan.encoding, cfg.schema, sources);
  const auto geometry = layers.empty() ? any_geometry(cfg) : std::nullopt;
  const auto transform = cfg.schema.response_transform;
  Output out(cfg, result);

  const auto profile = fit_profile(prep.model.X, prep.model.y, cfg.taus, {}, cfg.workers);
  std::vector<BootstrapEnsemble> ensembles;
  const bool with_iqr = cfg.iqr_maps && cfg.bootstrap_b >= 4;
  if (with_iqr) {
    ensembles = bootstrap_profile(prep.model.X, prep.model.y, cfg.taus, cfg.bootstrap_b, cfg.seed, bootstrap_options(cfg));
  }
  auto stack = out.open("prediction_stack.csv");
  stack << "tau,prediction,iqr,valid_cells\n";
  for (std::size_t t = 0; t < profile.fits.size(); ++t) {
    const auto label = tau_label(profile.fits[t].tau);
    const auto pred = predict_grid(profile.fits[t], columns, layers, transform, geometry);
    const std::string pred_file = "pred_tau_" + label + ".asc";
    out.raster(pred_file, pred);
    std::string iqr_file;
    if (with_iqr) {
      iqr_file = "iqr_tau_" + label + ".asc";
      out.raster(iqr_file, bootstrap_iqr_map(ensembles[t].draws, columns, layers, transform, geometry));
    }
    stack << label << ',' << pred_file << ',' << iqr_file << ',' << pred.valid_count() << '\n';
  }
  write_manifest(out, "predict", cfg);
  return result;
}

CommandResult run_compare(const RunConfig& cfg) {
  CommandResult result;
  if (cfg.benchmark_rasters.empty()) throw ConfigError("no benchmark rasters configured (benchmark.NAME = PATH)");
  const fs::path ref_path = cfg.reference_map ? *cfg.reference_map : cfg.out_dir / "pred_tau_0.5.asc";
  if (!fs::exists(ref_path)) {
    throw DataError("reference map '" + ref_path.string() + "' not found; run 'predict' with tau 0.5 first");
  }
  const Raster reference = read_ascii_grid(ref_path);
  Output out(cfg, result);
  auto summary = out.open("compare_summary.csv");
  summary << "benchmark,cellsize,cells,residual_mean,residual_median,residual_sd,slope_through_origin\n";
  CompareOptions opts;
  opts.density_bins = cfg.density_bins;
  opts.qq_points = cfg.qq_points;
  for (const auto& [name, path] : cfg.benchmark_rasters) {
    const Raster bench = read_ascii_grid(path);
    const double coarse = std::max(reference.geometry().cellsize, bench.geometry().cellsize);
    const Raster a = downscale_to_cellsize(reference, coarse);
    const Raster b = downscale_to_cellsize(bench, coarse);
    const auto rep = compare_maps(a, b, opts);
    const fs::path dir = fs::path("compare") / name;

    auto qq = out.open(dir / "qq.csv");
    qq << "reference,benchmark\n";
    for (const auto& [x, y] : rep.qq_pairs) qq << format_double(x) << ',' << format_double(y) << '\n';

    const auto& rs = rep.residual_stats;
    auto res = out.open(dir / "residuals_summary.csv");
    res << "count,mean,median,sd,min,max,slope_through_origin\n"
        << rs.count << ',' << format_double(rs.mean) << ',' << format_double(rs.median) << ',' << format_double(rs.sd)
        << ',' << format_double(rs.min) << ',' << format_double(rs.max) << ','
        << format_double(rep.fit_through_origin_slope) << '\n';

    const auto& db = rep.density_bins;
    auto dens = out.open(dir / "density_bins.csv");
    dens << "reference_lo,reference_hi,benchmark_lo,benchmark_hi,count\n";
    const double w = (db.hi - db.lo) / static_cast<double>(db.bins);
    for (std::size_t i = 0; i < db.bins; ++i) {
      for (std::size_t j = 0; j < db.bins; ++j) {
        dens << format_double(db.lo + w * static_cast<double>(i)) << ',' << format_double(db.lo + w * static_cast<double>(i + 1))
             << ',' << format_double(db.lo + w * static_cast<double>(j)) << ','
             << format_double(db.lo + w * static_cast<double>(j + 1)) << ',' << db.counts[i * db.bins + j] << '\n';
      }
    }
    summary << csv_escape(name) << ',' << format_double(coarse) << ',' << rs.count << ',' << format_double(rs.mean) << ','
            << format_double(rs.median) << ',' << format_double(rs.sd) << ',' << format_double(rep.fit_through_origin_slope)
            << '\n';
  }
  write_manifest(out, "compare", cfg);
  return result;
}

}  // namespace qrmap::pipeline
