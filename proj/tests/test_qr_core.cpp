#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "qrmap/errors.hpp"
#include "qrmap/loss.hpp"
#include "qrmap/ols.hpp"
#include "qrmap/quantile_regression.hpp"
#include "support.hpp"

using namespace qrmap;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::size_t count_if_sign(const VectorXd& r, int sign) {
  std::size_t c = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) c += sign < 0 ? r(i) < 0.0 : r(i) > 0.0;
  return c;
}

DesignMatrix with_duplicate_column() {
  MatrixXd X(6, 3);
  X << 1, 0.1, 0.1, 1, 0.5, 0.5, 1, 0.9, 0.9, 1, 0.3, 0.3, 1, 0.2, 0.2, 1, 0.7, 0.7;
  return DesignMatrix(X, {{"(Intercept)", ColumnKind::intercept, ""},
                          {"slope", ColumnKind::continuous, "slope"},
                          {"slope_copy", ColumnKind::continuous, "slope_copy"}});
}

}  // namespace

TEST_CASE("pinball loss values") {
  CHECK(pinball_loss(-3.0, 0.5) == 3.0);
  CHECK(pinball_loss(3.0, 0.5) == 3.0);
  CHECK(pinball_loss(0.0, 0.95) == 0.0);
  CHECK(pinball_loss(-1.0, 0.05) == doctest::Approx(1.9).epsilon(1e-15));
  CHECK(pinball_loss(1.0, 0.05) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(pinball_loss(2.0, 0.25) == 1.0);
  CHECK(pinball_loss(-2.0, 0.25) == 3.0);
}

TEST_CASE("pinball loss rejects tau outside the open unit interval") {
  for (double tau : {0.0, 1.0, -0.1, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    CHECK_THROWS_AS(pinball_loss(1.0, tau), std::domain_error);
    CHECK_THROWS_AS(Tau{tau}, std::domain_error);
  }
  CHECK(Tau{0.3}.value() == 0.3);
}

TEST_CASE("pinball sum and non-negativity") {
  const std::vector<double> r{-1.0, 0.0, 2.0, -0.5};
  CHECK(pinball_sum(r, 0.5) == doctest::Approx(3.5));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int t = 0; t < 200; ++t) {
    const double x = 10 * z(rng);
    const double tau = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    CHECK(pinball_loss(x, tau) >= 0.0);
    CHECK(pinball_loss(x, tau) == doctest::Approx(pinball_loss(-x, 1.0 - tau)));
  }
}

TEST_CASE("default tau grid has 19 equispaced levels") {
  const auto g = default_tau_grid();
  REQUIRE(g.size() == 19);
  for (std::size_t k = 0; k < g.size(); ++k) CHECK(g[k] == doctest::Approx(0.05 * static_cast<double>(k + 1)));
  CHECK(g.front() == doctest::Approx(0.05));
  CHECK(g.back() == doctest::Approx(0.95));
  CHECK_NOTHROW(validate_tau_grid(g));
  const std::vector<double> bad{0.5, 0.5};
  CHECK_THROWS_AS(validate_tau_grid(bad), std::domain_error);
  const std::vector<double> empty;
  CHECK_THROWS_AS(validate_tau_grid(empty), std::domain_error);
}

TEST_CASE("design matrix validation") {
  SUBCASE("duplicate column is named in the rank error") {
    try {
      with_duplicate_column();
      FAIL("expected a DesignError");
    } catch (const DesignError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("slope") != std::string::npos);
      CHECK(msg.find("slope_copy") != std::string::npos);
    }
  }
  SUBCASE("first column must be an intercept of ones") {
    MatrixXd X(3, 2);
    X << 1, 0, 2, 1, 1, 3;
    CHECK_THROWS_AS(DesignMatrix(X, {{"a", ColumnKind::intercept, ""}, {"b", ColumnKind::continuous, "b"}}),
                    DesignError);
  }
  SUBCASE("dummy values must be 0/1") {
    MatrixXd X(3, 2);
    X << 1, 0, 1, 2, 1, 1;
    CHECK_THROWS_AS(DesignMatrix(X, {{"(Intercept)", ColumnKind::intercept, ""}, {"d", ColumnKind::dummy, "c"}}),
                    DesignError);
  }
  SUBCASE("more columns than rows") {
    MatrixXd X(2, 3);
    X << 1, 0, 1, 1, 1, 0;
    CHECK_THROWS_AS(DesignMatrix(X, {{"(Intercept)", ColumnKind::intercept, ""},
                                     {"a", ColumnKind::continuous, "a"},
                                     {"b", ColumnKind::continuous, "b"}}),
                    DesignError);
  }
  SUBCASE("design errors are data errors") {
    CHECK_THROWS_AS(with_duplicate_column(), DataError);
  }
}

TEST_CASE("intercept-only median") {
  const auto X = DesignMatrix::intercept_only(5);
  VectorXd y(5);
  y << 4, 1, 5, 3, 2;
  const auto fit = fit_quantile(X, y, 0.5);
  CHECK(fit.beta(0) == 3.0);
  CHECK(fit.solver_status == SolverStatus::vertex);
  CHECK(fit.objective == doctest::Approx(6.0));
}

TEST_CASE("intercept-only fit lands on an order statistic") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  for (Eigen::Index n : {100, 101}) {
    VectorXd y(n);
    for (auto& v : y) v = z(rng);
    std::vector<double> s(y.begin(), y.end());
    std::sort(s.begin(), s.end());
    const auto fit = fit_quantile(DesignMatrix::intercept_only(n), y, 0.25);
    CHECK(std::find(s.begin(), s.end(), fit.beta(0)) != s.end());
    const double nt = 0.25 * static_cast<double>(n);
    const auto lo = static_cast<std::size_t>(std::ceil(nt)) - 1;
    if (std::floor(nt) == nt) {
      CHECK(fit.beta(0) >= s[lo]);
      CHECK(fit.beta(0) <= s[lo + 1]);
      CHECK(fit.solver_status == SolverStatus::interior);
    } else {
      CHECK(fit.beta(0) == s[lo]);
      CHECK(fit.solver_status == SolverStatus::vertex);
    }
  }
}

TEST_CASE("solver matches brute force on small instances") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 40; ++rep) {
    const auto X = test::random_design(12, 2, rng);
    const VectorXd y = test::random_response(X, rng);
    for (double tau : {0.05, 0.3, 0.5, 0.85}) {
      const auto fit = fit_quantile(X, y, tau);
      const auto bf = oracle::brute_force_qr(X.values(), y, tau);
      CHECK(test::rel_diff(fit.objective, bf.objective) <= 1e-8);
      const auto ip = fit_quantile(X, y, tau, {.method = SolverMethod::interior_point});
      CHECK(test::rel_diff(ip.objective, bf.objective) <= 1e-6);
      const auto en = fit_quantile(X, y, tau, {.method = SolverMethod::enumeration});
      CHECK(test::rel_diff(en.objective, bf.objective) <= 1e-12);
    }
  }
}

TEST_CASE("fit invariants") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 40 + rep * 7;
    const Eigen::Index p = 1 + rep % 4;
    const auto X = test::random_design(n, p, rng);
    const VectorXd y = test::random_response(X, rng);
    const auto ols = fit_ols(X, y);
    for (double tau : default_tau_grid()) {
      const auto fit = fit_quantile(X, y, tau);
      CHECK(count_if_sign(fit.residuals, -1) <= std::floor(static_cast<double>(n) * tau + 1e-9));
      CHECK(count_if_sign(fit.residuals, +1) <= std::floor(static_cast<double>(n) * (1.0 - tau) + 1e-9));

      const std::vector<double> r(fit.residuals.begin(), fit.residuals.end());
      CHECK(test::rel_diff(fit.objective, pinball_sum(r, tau)) <= 1e-10);
      const VectorXd direct = y - X.values() * fit.beta;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = std::abs(y(i)) + X.values().row(i).cwiseAbs().dot(fit.beta.cwiseAbs());
        CHECK(std::abs(direct(i) - fit.residuals(i)) <= 1e-12 * scale);
      }

      CHECK(fit.objective <= oracle::objective_at(X.values(), y, ols.beta, tau) * (1 + 1e-12));
      if (fit.solver_status == SolverStatus::vertex) {
        CHECK(static_cast<Eigen::Index>(fit.residuals.cwiseEqual(0.0).count()) >= p + 1);
        CHECK(static_cast<Eigen::Index>(fit.basis.size()) == p + 1);
      }
    }
  }
}

TEST_CASE("equivariance") {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    const auto X = test::random_design(37, 2, rng);
    const VectorXd y = test::random_response(X, rng);
    VectorXd gamma(3);
    gamma << 0.7, -1.3, 2.1;
    for (double tau : {0.1, 0.25, 0.5, 0.8}) {
      const auto base = fit_quantile(X, y, tau);
      const auto scaled = fit_quantile(X, VectorXd(3.7 * y), tau);
      const auto flipped = fit_quantile(X, VectorXd(-y), 1.0 - tau);
      const auto shifted = fit_quantile(X, VectorXd(y + X.values() * gamma), tau);
      for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(test::rel_diff(scaled.beta(j), 3.7 * base.beta(j)) <= 1e-8);
        CHECK(test::rel_diff(flipped.beta(j), -base.beta(j)) <= 1e-8);
        CHECK(test::rel_diff(shifted.beta(j), base.beta(j) + gamma(j)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("profile") {
  std::mt19937_64 rng(15);
  const auto X = test::random_design(60, 2, rng);
  const VectorXd y = test::random_response(X, rng);

  const auto prof = fit_profile(X, y);
  REQUIRE(prof.fits.size() == 19);
  for (std::size_t t = 0; t < 19; ++t) CHECK(prof.fits[t].tau == default_tau_grid()[t]);
  CHECK(prof.columns == X.columns());

  const auto single = fit_profile(X, y, {0.5});
  const auto direct = fit_quantile(X, y, 0.5);
  REQUIRE(single.fits.size() == 1);
  CHECK(single.fits[0].beta == direct.beta);
  CHECK(single.at_tau(0.5).objective == direct.objective);

  const auto parallel = fit_profile(X, y, {}, {}, 3);
  for (std::size_t t = 0; t < 19; ++t) CHECK(parallel.fits[t].beta == prof.fits[t].beta);

  const auto io = fit_profile(DesignMatrix::intercept_only(60), y);
  for (std::size_t t = 1; t < 19; ++t) CHECK(io.fits[t].beta(0) >= io.fits[t - 1].beta(0));

  CHECK_THROWS_AS(fit_profile(X, y, {0.5, 0.4}), std::domain_error);
  CHECK_THROWS_AS(fit_quantile(X, y, 1.0), std::domain_error);
}

TEST_CASE("fit errors") {
  std::mt19937_64 rng(16);
  const auto X = test::random_design(10, 1, rng);
  CHECK_THROWS_AS(fit_quantile(X, VectorXd::Zero(9), 0.5), DataError);
  VectorXd y = VectorXd::Zero(10);
  y(3) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fit_quantile(X, y, 0.5), DataError);
}

TEST_CASE("iteration budget is reported") {
  std::mt19937_64 rng(17);
  const auto X = test::random_design(300, 3, rng);
  const VectorXd y = test::random_response(X, rng);
  SolverOptions opts;
  opts.method = SolverMethod::interior_point;
  opts.max_iterations = 2;
  const auto fit = fit_quantile(X, y, 0.5, opts);
  CHECK(fit.solver_status == SolverStatus::max_iter);
  CHECK(fit.beta.allFinite());
  CHECK(to_string(fit.solver_status) == "max_iter");
}

TEST_CASE("warm start reaches the same optimum") {
  std::mt19937_64 rng(18);
  const auto X = test::random_design(150, 3, rng);
  const VectorXd y = test::random_response(X, rng);
  const auto cold = fit_quantile(X, y, 0.3);
  SolverOptions opts;
  opts.warm_start = VectorXd::Zero(4);
  const auto warm = fit_quantile(X, y, 0.3, opts);
  CHECK(test::rel_diff(cold.objective, warm.objective) <= 1e-12);
}

TEST_CASE("ols") {
  std::mt19937_64 rng(19);
  const auto X = test::random_design(30, 2, rng);
  VectorXd b(3);
  b << 1.0, -2.0, 0.5;
  const VectorXd exact = X.values() * b;
  const auto fe = fit_ols(X, exact);
  CHECK(fe.rss <= 1e-20);
  CHECK(fe.residuals.cwiseAbs().maxCoeff() <= 1e-12);

  const VectorXd y = test::random_response(X, rng);
  const auto f = fit_ols(X, y);
  CHECK((X.values().transpose() * f.residuals).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(f.sigma2_hat == doctest::Approx(f.rss / 27.0));
  CHECK(f.standard_errors.size() == 3);

  const auto mean_fit = fit_ols(DesignMatrix::intercept_only(30), y);
  CHECK(mean_fit.beta(0) == doctest::Approx(y.mean()).epsilon(1e-14));
}

TEST_CASE("ols and median regression agree under symmetric noise") {
  oracle::SyntheticSpec spec;
  spec.n = 2000;
  spec.beta_true = {1.0, 2.0, -1.0};
  spec.seed = 20;
  const auto m = test::synthetic_model(spec);
  const auto ols = fit_ols(m.X, m.y);
  const auto med = fit_quantile(m.X, m.y, 0.5);
  for (Eigen::Index j = 0; j < 3; ++j) {
    // The median estimator's spread is sqrt(pi/2) times the OLS spread here.
    CHECK(std::abs(ols.beta(j) - med.beta(j)) <= 3.0 * std::sqrt(M_PI / 2.0) * ols.standard_errors(j));
  }
}
