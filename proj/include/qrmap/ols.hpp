#pragma once

#include <Eigen/Dense>

#include "qrmap/design_matrix.hpp"

namespace qrmap {

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  double rss = 0.0;
  /// rss / (n - p - 1); zero when the fit is saturated.
  double sigma2_hat = 0.0;
  /// Classical standard errors sqrt(sigma2_hat * diag((X'X)^-1)).
  Eigen::VectorXd standard_errors;
};

/// Least-squares baseline, solved by pivoted Householder QR.
OlsFit fit_ols(const DesignMatrix& X, const Eigen::VectorXd& y);

}  // namespace qrmap
