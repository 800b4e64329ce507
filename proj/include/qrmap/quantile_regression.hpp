#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrmap/design_matrix.hpp"

namespace qrmap {

enum class SolverMethod {
  /// Frisch-Newton interior point, then a crossover to an optimal basic
  /// solution refined with exact simplex pivots.
  automatic,
  /// Interior point only; returns the last interior iterate.
  interior_point,
  /// Exhaustive search over interpolating (p+1)-subsets. n <= 20 only.
  enumeration,
};

enum class SolverStatus {
  /// Verified optimal basic solution, unique optimum.
  vertex,
  /// Interior-point iterate, or an optimal point on a non-unique optimal face.
  interior,
  /// Iteration budget exhausted; the best iterate is returned.
  max_iter,
};

std::string to_string(SolverStatus status);

struct SolverOptions {
  SolverMethod method = SolverMethod::automatic;
  /// Relative duality-gap tolerance of the interior-point stage.
  double gap_tolerance = 1e-8;
  int max_iterations = 200;
  /// Simplex pivot budget; 0 selects 50 + 4n.
  int max_pivots = 0;
  /// Starting coefficients. When set, the interior-point stage is skipped
  /// and the crossover starts from this point (automatic method only).
  std::optional<Eigen::VectorXd> warm_start;
};

struct QuantileFit {
  double tau = 0.5;
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  double objective = 0.0;
  SolverStatus solver_status = SolverStatus::vertex;
  int iterations = 0;
  /// Observations interpolated by the returned basic solution (empty for
  /// interior-point iterates).
  std::vector<Eigen::Index> basis;
};

/// Minimises sum_i L_tau(y_i - X_i beta). Throws std::domain_error for tau
/// outside (0,1) and DataError when y has the wrong length or is not finite.
QuantileFit fit_quantile(const DesignMatrix& X, const Eigen::VectorXd& y,
                         double tau, const SolverOptions& opts = {});

struct QuantileProfile {
  std::vector<QuantileFit> fits;
  std::vector<ColumnInfo> columns;

  const QuantileFit& at_tau(double tau) const;
};

/// Independent fits across a tau grid (default: the 19-level grid).
QuantileProfile fit_profile(const DesignMatrix& X, const Eigen::VectorXd& y,
                            const std::vector<double>& taus = {},
                            const SolverOptions& opts = {}, int workers = 1);

namespace detail {

/// Unchecked solver entry point on a raw matrix assumed full column rank.
QuantileFit solve_quantile(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           double tau, const SolverOptions& opts);

}  // namespace detail

}  // namespace qrmap
