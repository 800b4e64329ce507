#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qrmap/dataset.hpp"

/// Independent reference computations for tests and acceptance runs.
/// Nothing here shares code with the production solver.
namespace qrmap::oracle {

struct BruteForceResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  /// Interpolated observations, in increasing order.
  std::vector<int> subset;
};

/// Exhaustive quantile regression for tiny problems (n <= 20, p <= 3):
/// every (p+1)-subset of observations in general position defines an
/// interpolating hyperplane; the one with the smallest pinball sum is an
/// optimal LP vertex. Ties resolve to the lexicographically first subset.
BruteForceResult brute_force_qr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau);

/// Pinball-loss sum evaluated directly from its definition.
double objective_at(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta, double tau);

enum class Noise { gaussian, laplace };

/// Location-scale model  y = X beta_true + sigma (1 + hetero_gamma x1) e
/// with covariates x_j ~ U(0,1) and e either standard Gaussian or standard
/// Laplace. Optional zero-effect categorical covariates c1, c2, ... have
/// `categorical_levels[k]` classes "L0", "L1", ... with geometrically
/// decaying frequencies (L0 modal).
struct SyntheticSpec {
  std::size_t n = 100;
  /// Intercept first, then one coefficient per continuous covariate.
  std::vector<double> beta_true{0.0, 1.0};
  double hetero_gamma = 0.0;
  Noise noise = Noise::gaussian;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  std::vector<int> categorical_levels;
};

/// Dataset with response "y", continuous "x1".."xp", categorical "c1"...
/// Throws ConfigError when 1 + hetero_gamma * x1 <= 0 for some row.
Dataset generate(const SyntheticSpec& spec);

/// Quantile of the standardized noise distribution.
double noise_quantile(Noise noise, double tau);

/// Closed-form conditional tau-quantile coefficients of the generator
/// (continuous columns only; zero-effect dummies have true coefficient 0).
Eigen::VectorXd true_quantile_coefficients(const SyntheticSpec& spec, double tau);

}  // namespace qrmap::oracle
