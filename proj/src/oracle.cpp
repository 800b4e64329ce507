#include "qrmap/oracle.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "qrmap/errors.hpp"

namespace qrmap::oracle {

namespace {

double loss(double r, double tau) { return r < 0.0 ? -2.0 * (1.0 - tau) * r : 2.0 * tau * r; }

// Gaussian elimination with partial pivoting on a small dense system.
// Returns false when the system is numerically singular.
bool solve_small(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t k = b.size();
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return false;
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) <= 1e-10 * scale) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < k; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < k; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < k; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return true;
}

}  // namespace

double objective_at(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& beta, double tau) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double fitted = 0.0;
    for (Eigen::Index j = 0; j < X.cols(); ++j) fitted += X(i, j) * beta(j);
    total += loss(y(i) - fitted, tau);
  }
  return total;
}

BruteForceResult brute_force_qr(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau) {
  const int n = static_cast<int>(X.rows());
  const int k = static_cast<int>(X.cols());
  if (n > 20 || k > 4) throw std::invalid_argument("brute_force_qr is limited to n <= 20 and p <= 3");
  if (k < 1 || n < k) throw std::invalid_argument("brute_force_qr needs n >= p+1 >= 1");

  BruteForceResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<int> subset(k);
  for (int j = 0; j < k; ++j) subset[j] = j;
  std::vector<double> sol;
  for (;;) {
    std::vector<std::vector<double>> a(k, std::vector<double>(k));
    std::vector<double> b(k);
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) a[r][c] = X(subset[r], c);
      b[r] = y(subset[r]);
    }
    if (solve_small(a, b, sol)) {
      Eigen::VectorXd beta = Eigen::Map<Eigen::VectorXd>(sol.data(), k);
      const double obj = objective_at(X, y, beta, tau);
      if (obj < best.objective) {
        best.objective = obj;
        best.beta = beta;
        best.subset = subset;
      }
    }
    int pos = k - 1;
    while (pos >= 0 && subset[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++subset[pos];
    for (int j = pos + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
  }
  if (best.subset.empty()) throw std::runtime_error("brute_force_qr: every subset is degenerate");
  return best;
}

double noise_quantile(Noise noise, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::domain_error("tau must lie in (0, 1)");
  if (noise == Noise::gaussian) return boost::math::quantile(boost::math::normal_distribution<>(), tau);
  return tau < 0.5 ? std::log(2.0 * tau) : -std::log(2.0 * (1.0 - tau));
}

Eigen::VectorXd true_quantile_coefficients(const SyntheticSpec& spec, double tau) {
  Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(spec.beta_true.data(),
                                                           static_cast<Eigen::Index>(spec.beta_true.size()));
  const double q = spec.sigma * noise_quantile(spec.noise, tau);
  beta(0) += q;
  if (beta.size() > 1) beta(1) += spec.hetero_gamma * q;
  return beta;
}

Dataset generate(const SyntheticSpec& spec) {
  if (spec.beta_true.empty()) throw ConfigError("synthetic spec needs at least an intercept");
  if (!(spec.sigma > 0.0)) throw ConfigError("synthetic noise scale must be positive");
  const std::size_t p = spec.beta_true.size() - 1;
  // x1 ranges over [0, 1), so the scale is positive iff it is at both ends.
  if (p >= 1 && !(1.0 + std::min(0.0, spec.hetero_gamma) > 0.0)) {
    throw ConfigError("scale 1 + hetero_gamma * x1 is nonpositive for part of the covariate range");
  }
  if (p == 0 && spec.hetero_gamma != 0.0) {
    throw ConfigError("hetero_gamma needs at least one continuous covariate");
  }

  CovariateSchema schema;
  schema.response = "y";
  for (std::size_t j = 1; j <= p; ++j) schema.covariates.push_back({"x" + std::to_string(j)});
  for (std::size_t c = 0; c < spec.categorical_levels.size(); ++c) {
    if (spec.categorical_levels[c] < 2) throw ConfigError("categorical covariates need at least 2 levels");
    schema.covariates.push_back({"c" + std::to_string(c + 1), CovariateKind::categorical});
  }

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);

  std::vector<std::vector<double>> level_cdf;
  for (int levels : spec.categorical_levels) {
    std::vector<double> w(static_cast<std::size_t>(levels));
    double total = 0.0;
    for (int l = 0; l < levels; ++l) total += (w[l] = std::pow(0.6, l));
    double acc = 0.0;
    for (auto& v : w) v = (acc += v / total);
    level_cdf.push_back(std::move(w));
  }

  std::vector<Observation> rows;
  rows.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Observation obs;
    double mean = spec.beta_true[0];
    double x1 = 0.0;
    for (std::size_t j = 1; j <= p; ++j) {
      const double x = unif(rng);
      if (j == 1) x1 = x;
      mean += spec.beta_true[j] * x;
      obs.values.emplace_back(x);
    }
    for (const auto& cdf : level_cdf) {
      const double u = unif(rng);
      std::size_t l = 0;
      while (l + 1 < cdf.size() && u > cdf[l]) ++l;
      obs.values.emplace_back("L" + std::to_string(l));
    }
    double e = 0.0;
    if (spec.noise == Noise::gaussian) {
      e = gauss(rng);
    } else {
      e = expo(rng) * (unif(rng) < 0.5 ? -1.0 : 1.0);
    }
    const double scale = spec.sigma * (1.0 + spec.hetero_gamma * x1);
    obs.response = mean + scale * e;
    rows.push_back(std::move(obs));
  }
  return Dataset(std::move(schema), std::move(rows));
}

}  // namespace qrmap::oracle
