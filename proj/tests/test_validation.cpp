#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qrmap/errors.hpp"
#include "qrmap/loss.hpp"
#include "qrmap/percentiles.hpp"
#include "qrmap/quantile_regression.hpp"
#include "qrmap/validation.hpp"
#include "support.hpp"

using namespace qrmap;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

DesignMatrix with_lone_dummy(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  MatrixXd X(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) << 1.0, z(rng), i == 0 ? 1.0 : 0.0;
  return DesignMatrix(X, {{"(Intercept)", ColumnKind::intercept, ""},
                          {"x", ColumnKind::continuous, "x"},
                          {"g=b", ColumnKind::dummy, "g"}});
}

BootstrapEnsemble ensemble_of(const std::vector<double>& column) {
  BootstrapEnsemble e;
  e.B = column.size();
  e.draws = MatrixXd(static_cast<Eigen::Index>(column.size()), 1);
  for (std::size_t i = 0; i < column.size(); ++i) e.draws(static_cast<Eigen::Index>(i), 0) = column[i];
  return e;
}

}  // namespace

TEST_CASE("percentile conventions") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(rank_quantile(v, 0.025) == 3.0);
  CHECK(rank_quantile(v, 0.975) == 98.0);
  CHECK(rank_quantile(v, 0.5) == 50.0);
  CHECK(quantile_type7(v, 0.5) == 50.5);
  CHECK(quantile_type7(v, 0.25) == 25.75);
  CHECK(quantile_type7(v, 0.75) == 75.25);
  CHECK(quantile_type7(v, 0.0) == 1.0);
  CHECK(quantile_type7(v, 1.0) == 100.0);
  const std::vector<double> one{4.0};
  CHECK(quantile_type7(one, 0.3) == 4.0);
  const std::vector<double> raw{3.0, std::nan(""), 1.0};
  CHECK(sorted_finite(raw) == std::vector<double>{1.0, 3.0});
}

TEST_CASE("loocv anchors") {
  std::mt19937_64 rng(31);
  SUBCASE("noiseless linear data") {
    const auto X = test::random_design(30, 2, rng);
    VectorXd b(3);
    b << 1.0, 2.0, -3.0;
    const VectorXd y = X.values() * b;
    const auto rep = loocv(X, y, default_tau_grid());
    REQUIRE(rep.entries.size() == 19);
    for (const auto& e : rep.entries) {
      CHECK(std::abs(e.r1 - 1.0) <= 1e-10);
      CHECK(e.n == 30);
      CHECK(e.skipped_folds == 0);
    }
  }
  SUBCASE("intercept-only model against itself") {
    VectorXd y(25);
    for (auto& v : y) v = std::normal_distribution<double>()(rng);
    const auto rep = loocv(DesignMatrix::intercept_only(25), y, {0.1, 0.5, 0.9});
    for (const auto& e : rep.entries) {
      CHECK(e.r1 == 0.0);
      CHECK(e.heldout_pinball_sum == e.reference_pinball_sum);
    }
  }
  SUBCASE("report consistency") {
    const auto X = test::random_design(40, 2, rng);
    const VectorXd y = test::random_response(X, rng);
    const auto rep = loocv(X, y, {0.25, 0.5});
    const auto par = loocv(X, y, {0.25, 0.5}, {.workers = 3});
    for (std::size_t t = 0; t < 2; ++t) {
      const auto& e = rep.entries[t];
      CHECK(e.r1 <= 1.0);
      CHECK(e.mean_heldout_pinball == doctest::Approx(e.heldout_pinball_sum / 40.0));
      CHECK(e.r1 == doctest::Approx(1.0 - e.heldout_pinball_sum / e.reference_pinball_sum));
      CHECK(par.entries[t].r1 == e.r1);
      CHECK(par.entries[t].heldout_pinball_sum == e.heldout_pinball_sum);
    }
  }
  SUBCASE("held-out loss recomputed fold by fold") {
    const auto X = test::random_design(15, 1, rng);
    const VectorXd y = test::random_response(X, rng);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < 15; ++i) {
      std::vector<Eigen::Index> keep;
      for (Eigen::Index j = 0; j < 15; ++j) {
        if (j != i) keep.push_back(j);
      }
      const auto Xi = X.select_rows(keep);
      VectorXd yi(14);
      for (std::size_t j = 0; j < keep.size(); ++j) yi(static_cast<Eigen::Index>(j)) = y(keep[j]);
      const auto bf = oracle::brute_force_qr(Xi.values(), yi, 0.3);
      sum += pinball_loss(y(i) - X.values().row(i).dot(bf.beta), 0.3);
    }
    const auto rep = loocv(X, y, {0.3});
    CHECK(rep.entries[0].heldout_pinball_sum == doctest::Approx(sum).epsilon(1e-9));
  }
  SUBCASE("errors and skipped folds") {
    const auto X = test::random_design(3, 2, rng);
    CHECK_THROWS_AS(loocv(X, VectorXd::Zero(3), {0.5}), DataError);

    auto small = with_lone_dummy(50, rng);
    const VectorXd ys = test::random_response(small, rng);
    CHECK_THROWS_AS(loocv(small, ys, {0.5}), NumericalError);

    auto big = with_lone_dummy(150, rng);
    const VectorXd yb = test::random_response(big, rng);
    const auto rep = loocv(big, yb, {0.5});
    CHECK(rep.entries[0].skipped_folds == 1);
    CHECK(rep.entries[0].n == 149);
  }
}

TEST_CASE("in-sample r1 grows with nested columns") {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 10; ++rep) {
    const auto X = test::random_design(80, 4, rng);
    const VectorXd y = test::random_response(X, rng);
    for (double tau : {0.1, 0.5, 0.9}) {
      double prev = 0.0;
      for (Eigen::Index k = 1; k <= 5; ++k) {
        std::vector<Eigen::Index> cols(static_cast<std::size_t>(k));
        std::iota(cols.begin(), cols.end(), 0);
        const double r1 = in_sample_r1(X.select_columns(cols), y, tau);
        CHECK(r1 >= prev - 1e-12);
        CHECK(r1 <= 1.0);
        prev = r1;
      }
    }
  }
}

TEST_CASE("resampling") {
  const auto a = resample_indices(50, 9, 3);
  const auto b = resample_indices(50, 9, 3);
  CHECK(a == b);
  CHECK(a != resample_indices(50, 9, 4));
  CHECK(a != resample_indices(50, 10, 3));
  CHECK(a != resample_indices(50, 9, 3, 1));
  CHECK(a.size() == 50);
  for (auto i : a) CHECK((i >= 0 && i < 50));

  std::vector<int> hits(10, 0);
  for (std::uint64_t r = 0; r < 2000; ++r) {
    for (auto i : resample_indices(10, 1, r)) ++hits[static_cast<std::size_t>(i)];
  }
  for (int h : hits) CHECK(std::abs(h - 2000) < 200);
}

TEST_CASE("bootstrap") {
  std::mt19937_64 rng(33);
  const auto X = test::random_design(60, 2, rng);
  const VectorXd y = test::random_response(X, rng);

  SUBCASE("identity resample reproduces the full-data fit") {
    const auto X4 = test::random_design(5, 1, rng);
    const VectorXd y4 = test::random_response(X4, rng);
    std::uint64_t seed = 0;
    for (;; ++seed) {
      auto idx = resample_indices(5, seed, 0);
      std::sort(idx.begin(), idx.end());
      if (idx == std::vector<Eigen::Index>{0, 1, 2, 3, 4}) break;
    }
    const auto ens = bootstrap(X4, y4, 0.3, 1, seed);
    const auto full = fit_quantile(X4, y4, 0.3);
    CHECK(ens.draws.row(0).transpose() == full.beta);
  }
  SUBCASE("deterministic across worker counts and grids") {
    const auto e1 = bootstrap(X, y, 0.5, 64, 77);
    const auto e3 = bootstrap(X, y, 0.5, 64, 77, {.workers = 3});
    CHECK(e1.draws == e3.draws);
    CHECK(e1.B == 64);
    CHECK(e1.master_seed == 77);
    const auto prof = bootstrap_profile(X, y, {0.25, 0.5}, 64, 77, {.workers = 2});
    CHECK(prof[1].draws == e1.draws);
    CHECK(prof[0].draws == bootstrap(X, y, 0.25, 64, 77).draws);
    CHECK(bootstrap(X, y, 0.5, 64, 78).draws != e1.draws);
  }
  SUBCASE("each draw is the fit on its resample") {
    const auto e = bootstrap(X, y, 0.7, 5, 4);
    for (std::size_t r = 0; r < 5; ++r) {
      const auto idx = resample_indices(60, 4, r);
      VectorXd yr(60);
      for (Eigen::Index i = 0; i < 60; ++i) yr(i) = y(idx[static_cast<std::size_t>(i)]);
      const auto fit = fit_quantile(X.select_rows(idx), yr, 0.7);
      CHECK(test::rel_diff(oracle::objective_at(X.select_rows(idx).values(), yr,
                                                e.draws.row(static_cast<Eigen::Index>(r)).transpose(), 0.7),
                           fit.objective) <= 1e-10);
    }
  }
  SUBCASE("degenerate resamples are redrawn or counted") {
    auto Xd = with_lone_dummy(4, rng);
    const VectorXd yd = test::random_response(Xd, rng);
    const auto strict = bootstrap(Xd, yd, 0.5, 60, 5, {.max_redraws = 0});
    CHECK(strict.failed_replicates > 0);
    std::size_t nan_rows = 0;
    for (Eigen::Index r = 0; r < strict.draws.rows(); ++r) nan_rows += strict.draws.row(r).hasNaN() ? 1 : 0;
    CHECK(nan_rows == strict.failed_replicates);
    const auto lenient = bootstrap(Xd, yd, 0.5, 60, 5);
    CHECK(lenient.failed_replicates < strict.failed_replicates);
  }
  SUBCASE("invalid arguments") {
    CHECK_THROWS(bootstrap(X, y, 0.5, 0, 1));
    CHECK_THROWS_AS(bootstrap(X, y, 1.5, 10, 1), std::domain_error);
  }
}

TEST_CASE("coefficient summaries") {
  SUBCASE("rank rule and type-7 box") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    std::reverse(v.begin(), v.end());
    const auto s = summarize_coefficients({ensemble_of(v)}, {"b"});
    const auto& c = s.stats[0][0];
    REQUIRE(c.ci_lo_95.has_value());
    CHECK(*c.ci_lo_95 == 3.0);
    CHECK(*c.ci_hi_95 == 98.0);
    CHECK(c.median == 50.5);
    CHECK(c.q25 == 25.75);
    CHECK(c.q75 == 75.25);
    CHECK(c.whisker_lo == 1.0);
    CHECK(c.whisker_hi == 100.0);
    CHECK(c.draws == 100);
  }
  SUBCASE("identical draws") {
    const auto s = summarize_coefficients({ensemble_of(std::vector<double>(50, 2.5))}, {"b"});
    const auto& c = s.stats[0][0];
    CHECK(c.q25 == 2.5);
    CHECK(c.median == 2.5);
    CHECK(c.q75 == 2.5);
    CHECK(*c.ci_lo_95 == 2.5);
    CHECK(*c.ci_hi_95 == 2.5);
  }
  SUBCASE("too few draws for an interval") {
    const auto s = summarize_coefficients({ensemble_of(std::vector<double>(39, 1.0))}, {"b"});
    CHECK_FALSE(s.stats[0][0].ci_lo_95.has_value());
    CHECK(s.stats[0][0].median == 1.0);
  }
  SUBCASE("outliers sit beyond the whiskers") {
    std::vector<double> v(60, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 10);
    v[0] = 1000.0;
    const auto c = summarize_coefficients({ensemble_of(v)}, {"b"}).stats[0][0];
    CHECK(c.whisker_hi == 9.0);
  }
  SUBCASE("failed rows are excluded") {
    std::vector<double> v(45, 1.0);
    v[3] = std::nan("");
    const auto c = summarize_coefficients({ensemble_of(v)}, {"b"}).stats[0][0];
    CHECK(c.draws == 44);
    CHECK(c.ci_lo_95.has_value());
  }
  SUBCASE("ordering on real ensembles") {
    std::mt19937_64 rng(34);
    const auto X = test::random_design(80, 3, rng);
    const VectorXd y = test::random_response(X, rng);
    const auto ens = bootstrap_profile(X, y, {0.2, 0.5, 0.8}, 100, 3);
    const auto s = summarize_coefficients(ens, X.column_names());
    CHECK(s.taus == std::vector<double>{0.2, 0.5, 0.8});
    for (const auto& row : s.stats) {
      for (const auto& c : row) {
        CHECK(c.q25 <= c.median);
        CHECK(c.median <= c.q75);
        CHECK(*c.ci_lo_95 <= c.median);
        CHECK(c.median <= *c.ci_hi_95);
        CHECK(c.whisker_lo <= c.q25);
        CHECK(c.q75 <= c.whisker_hi);
      }
    }
  }
}

TEST_CASE("zero-effect covariate intervals cover zero") {
  const std::vector<double> taus{0.25, 0.5, 0.75};
  std::vector<int> covered(taus.size(), 0);
  const int seeds = 60;
  for (int s = 0; s < seeds; ++s) {
    oracle::SyntheticSpec spec;
    spec.n = 200;
    spec.beta_true = {1.0, 2.0, 0.0};
    spec.seed = 1000 + static_cast<std::uint64_t>(s);
    const auto m = test::synthetic_model(spec);
    const auto ens = bootstrap_profile(m.X, m.y, taus, 200, static_cast<std::uint64_t>(s));
    const auto sum = summarize_coefficients(ens, m.X.column_names());
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const auto& c = sum.stats[t][2];
      covered[t] += (*c.ci_lo_95 <= 0.0 && 0.0 <= *c.ci_hi_95) ? 1 : 0;
    }
  }
  for (std::size_t t = 0; t < taus.size(); ++t) {
    INFO("tau = " << taus[t] << ", covered " << covered[t] << " of " << seeds);
    CHECK(covered[t] >= 0.9 * seeds);
  }
}
