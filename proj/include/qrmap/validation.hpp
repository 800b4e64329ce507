#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrmap/design_matrix.hpp"
#include "qrmap/quantile_regression.hpp"

namespace qrmap {

struct CvEntry {
  double tau = 0.5;
  /// 1 - (held-out pinball sum of the model) / (held-out pinball sum of the
  /// intercept-only reference). At most 1.
  double r1 = 0.0;
  double mean_heldout_pinball = 0.0;
  /// Folds scored, i.e. observations minus skipped folds.
  std::size_t n = 0;
  std::size_t skipped_folds = 0;
  double heldout_pinball_sum = 0.0;
  double reference_pinball_sum = 0.0;
};

struct CvReport {
  std::vector<CvEntry> entries;
};

struct ValidationOptions {
  int workers = 1;
  SolverOptions solver;
  /// Rank-deficient folds are skipped; more than this fraction is an error.
  double max_skipped_fraction = 0.01;
};

/// Leave-one-out cross-validation scored by the pinball loss, with the
/// intercept-only model under the same folds as reference. Needs n >= p+2.
CvReport loocv(const DesignMatrix& X, const Eigen::VectorXd& y, const std::vector<double>& taus,
               const ValidationOptions& opts = {});

/// In-sample analogue: 1 - objective(X) / objective(intercept only).
double in_sample_r1(const DesignMatrix& X, const Eigen::VectorXd& y, double tau,
                    const SolverOptions& opts = {});

struct BootstrapOptions {
  int workers = 1;
  SolverOptions solver;
  /// Redraws allowed for a rank-deficient resample before it counts as failed.
  int max_redraws = 10;
};

struct BootstrapEnsemble {
  double tau = 0.5;
  /// B x (p+1); rows of failed replicates are NaN.
  Eigen::MatrixXd draws;
  std::size_t B = 0;
  std::uint64_t master_seed = 0;
  std::size_t failed_replicates = 0;
  /// Replicates whose fit stopped at the iteration budget.
  std::size_t nonconverged_replicates = 0;
};

/// Case indices of bootstrap replicate `replicate` (attempt `attempt`),
/// derived from the master seed by counter-based seeding, so any replicate
/// can be regenerated independently of execution order.
std::vector<Eigen::Index> resample_indices(Eigen::Index n, std::uint64_t master_seed,
                                           std::uint64_t replicate, std::uint64_t attempt = 0);

/// Nonparametric case-resampling bootstrap at one tau.
BootstrapEnsemble bootstrap(const DesignMatrix& X, const Eigen::VectorXd& y, double tau,
                            std::size_t B, std::uint64_t master_seed,
                            const BootstrapOptions& opts = {});

/// Same resamples shared by every tau of the grid; element t equals
/// bootstrap(X, y, taus[t], B, master_seed).
std::vector<BootstrapEnsemble> bootstrap_profile(const DesignMatrix& X, const Eigen::VectorXd& y,
                                                 const std::vector<double>& taus, std::size_t B,
                                                 std::uint64_t master_seed,
                                                 const BootstrapOptions& opts = {});

/// Smallest ensemble that gets percentile confidence intervals.
inline constexpr std::size_t kMinDrawsForCi = 40;

struct CoefficientStats {
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  /// Tukey whiskers: most extreme draws within 1.5 IQR of the box.
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  /// Percentile 95% interval at ranks ceil(0.025 B) and ceil(0.975 B).
  std::optional<double> ci_lo_95;
  std::optional<double> ci_hi_95;
  std::size_t draws = 0;
};

struct CoefficientSummary {
  std::vector<std::string> columns;
  std::vector<double> taus;
  /// stats[t][j]: tau index t, column j.
  std::vector<std::vector<CoefficientStats>> stats;
};

CoefficientSummary summarize_coefficients(const std::vector<BootstrapEnsemble>& ensembles,
                                          const std::vector<std::string>& columns);

}  // namespace qrmap
