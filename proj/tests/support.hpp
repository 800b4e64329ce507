#pragma once

#include <Eigen/Dense>
#include <random>

#include "qrmap/design_matrix.hpp"
#include "qrmap/features.hpp"
#include "qrmap/oracle.hpp"

namespace qrmap::test {

/// Intercept plus p columns of N(0,1) draws.
inline DesignMatrix random_design(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, p + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j <= p; ++j) X(i, j) = z(rng);
  }
  std::vector<ColumnInfo> cols{{"(Intercept)", ColumnKind::intercept, ""}};
  for (Eigen::Index j = 1; j <= p; ++j) {
    cols.push_back({"x" + std::to_string(j), ColumnKind::continuous, "x" + std::to_string(j)});
  }
  return DesignMatrix(std::move(X), std::move(cols));
}

/// y = X b + heavy-ish noise, with b drawn from N(0, 2^2).
inline Eigen::VectorXd random_response(const DesignMatrix& X, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::student_t_distribution<double> t(3.0);
  Eigen::VectorXd b(X.cols());
  for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = 2.0 * z(rng);
  Eigen::VectorXd y = X.values() * b;
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += t(rng);
  return y;
}

/// Design and response of a synthetic dataset, keeping every covariate
/// and every class.
inline ModelData model_of(const Dataset& data) {
  return build_design(data, plan_features(data, 1.0, 0));
}

inline ModelData synthetic_model(const oracle::SyntheticSpec& spec) {
  return model_of(oracle::generate(spec));
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace qrmap::test
