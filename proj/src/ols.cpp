#include "qrmap/ols.hpp"

#include "qrmap/errors.hpp"

namespace qrmap {

OlsFit fit_ols(const DesignMatrix& X, const Eigen::VectorXd& y) {
  if (y.size() != X.rows()) {
    throw DataError("response length does not match design rows");
  }
  const Eigen::MatrixXd& A = X.values();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < A.cols()) {
    throw DesignError(describe_rank_deficiency(A, X.column_names()));
  }
  OlsFit fit;
  fit.beta = qr.solve(y);
  fit.residuals = y - A * fit.beta;
  fit.rss = fit.residuals.squaredNorm();
  const auto dof = A.rows() - A.cols();
  fit.sigma2_hat = dof > 0 ? fit.rss / static_cast<double>(dof) : 0.0;
  const Eigen::MatrixXd xtx_inv =
      (A.transpose() * A).ldlt().solve(Eigen::MatrixXd::Identity(A.cols(), A.cols()));
  fit.standard_errors = (fit.sigma2_hat * xtx_inv.diagonal()).cwiseSqrt();
  return fit;
}

}  // namespace qrmap
