#include "qrmap/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "qrmap/errors.hpp"
#include "qrmap/loss.hpp"
#include "qrmap/parallel.hpp"
#include "qrmap/percentiles.hpp"

namespace qrmap {

using Eigen::Index;
using Eigen::VectorXd;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform integer in [0, n) by rejection, independent of the standard
// library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t v = rng();
    if (v < limit) return v % n;
  }
}

VectorXd select(const VectorXd& y, const std::vector<Index>& idx) {
  VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Index>(i)) = y(idx[i]);
  return out;
}

}  // namespace

CvReport loocv(const DesignMatrix& X, const VectorXd& y, const std::vector<double>& taus,
               const ValidationOptions& opts) {
  validate_tau_grid(taus);
  const Index n = X.rows();
  const Index k = X.cols();
  if (y.size() != n) throw DataError("response length does not match design rows");
  if (n < k + 2) throw DataError("LOOCV needs n >= p+2 so every fold stays overdetermined");

  const bool model_is_reference = k == 1;
  const auto reference = DesignMatrix::intercept_only(n);
  const std::size_t nt = taus.size();

  // Full-data fits seed every fold.
  std::vector<VectorXd> warm_model(nt), warm_ref(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    warm_model[t] = fit_quantile(X, y, taus[t], opts.solver).beta;
    warm_ref[t] = model_is_reference ? warm_model[t] : fit_quantile(reference, y, taus[t], opts.solver).beta;
  }

  constexpr double kSkipped = std::numeric_limits<double>::quiet_NaN();
  // loss[i * nt + t] for the model and the reference.
  std::vector<double> model_loss(static_cast<std::size_t>(n) * nt, kSkipped);
  std::vector<double> ref_loss(static_cast<std::size_t>(n) * nt, kSkipped);

  parallel_for(static_cast<std::size_t>(n), opts.workers, [&](std::size_t fold) {
    const auto i = static_cast<Index>(fold);
    std::optional<DesignMatrix> train;
    try {
      train.emplace(X.drop_row(i));
    } catch (const DesignError&) {
      return;
    }
    VectorXd y_train(n - 1);
    y_train.head(i) = y.head(i);
    y_train.tail(n - 1 - i) = y.tail(n - 1 - i);
    const auto ref_train = DesignMatrix::intercept_only(n - 1);
    for (std::size_t t = 0; t < nt; ++t) {
      SolverOptions so = opts.solver;
      so.warm_start = warm_model[t];
      const auto fit = fit_quantile(*train, y_train, taus[t], so);
      const double pred = X.values().row(i).dot(fit.beta);
      model_loss[fold * nt + t] = pinball_loss(y(i) - pred, taus[t]);
      if (model_is_reference) {
        ref_loss[fold * nt + t] = model_loss[fold * nt + t];
      } else {
        so.warm_start = warm_ref[t];
        const auto rfit = fit_quantile(ref_train, y_train, taus[t], so);
        ref_loss[fold * nt + t] = pinball_loss(y(i) - rfit.beta(0), taus[t]);
      }
    }
  });

  std::size_t skipped = 0;
  for (Index i = 0; i < n; ++i) skipped += std::isnan(model_loss[static_cast<std::size_t>(i) * nt]) ? 1 : 0;
  if (static_cast<double>(skipped) > opts.max_skipped_fraction * static_cast<double>(n)) {
    throw NumericalError("LOOCV: " + std::to_string(skipped) + " of " + std::to_string(n) +
                         " folds are rank deficient");
  }

  CvReport report;
  for (std::size_t t = 0; t < nt; ++t) {
    CvEntry e;
    e.tau = taus[t];
    e.n = static_cast<std::size_t>(n) - skipped;
    e.skipped_folds = skipped;
    for (Index i = 0; i < n; ++i) {
      const double m = model_loss[static_cast<std::size_t>(i) * nt + t];
      if (std::isnan(m)) continue;
      e.heldout_pinball_sum += m;
      e.reference_pinball_sum += ref_loss[static_cast<std::size_t>(i) * nt + t];
    }
    e.mean_heldout_pinball = e.heldout_pinball_sum / static_cast<double>(static_cast<std::size_t>(n) - skipped);
    if (e.reference_pinball_sum > 0.0) {
      e.r1 = 1.0 - e.heldout_pinball_sum / e.reference_pinball_sum;
    } else {
      e.r1 = e.heldout_pinball_sum > 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
    }
    report.entries.push_back(e);
  }
  return report;
}

double in_sample_r1(const DesignMatrix& X, const VectorXd& y, double tau, const SolverOptions& opts) {
  const double model = fit_quantile(X, y, tau, opts).objective;
  const double ref = fit_quantile(DesignMatrix::intercept_only(X.rows()), y, tau, opts).objective;
  return ref > 0.0 ? 1.0 - model / ref : 0.0;
}

std::vector<Index> resample_indices(Index n, std::uint64_t master_seed, std::uint64_t replicate,
                                    std::uint64_t attempt) {
  const std::uint64_t seed = splitmix64(splitmix64(splitmix64(master_seed) ^ replicate) ^ (attempt * 0xD1B54A32D192ED03ULL));
  std::mt19937_64 rng(seed);
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (auto& v : idx) v = static_cast<Index>(bounded(rng, static_cast<std::uint64_t>(n)));
  return idx;
}

std::vector<BootstrapEnsemble> bootstrap_profile(const DesignMatrix& X, const VectorXd& y,
                                                 const std::vector<double>& taus, std::size_t B,
                                                 std::uint64_t master_seed, const BootstrapOptions& opts) {
  validate_tau_grid(taus);
  if (B < 1) throw std::invalid_argument("bootstrap needs B >= 1");
  if (y.size() != X.rows()) throw DataError("response length does not match design rows");
  const Index n = X.rows();
  const Index k = X.cols();
  const std::size_t nt = taus.size();

  std::vector<BootstrapEnsemble> out(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    out[t].tau = taus[t];
    out[t].B = B;
    out[t].master_seed = master_seed;
    out[t].draws = Eigen::MatrixXd::Constant(static_cast<Index>(B), k, std::numeric_limits<double>::quiet_NaN());
  }
  std::vector<char> failed(B, 0);
  std::vector<char> nonconverged(B * nt, 0);

  parallel_for(B, opts.workers, [&](std::size_t r) {
    for (int attempt = 0; attempt <= opts.max_redraws; ++attempt) {
      const auto idx = resample_indices(n, master_seed, r, static_cast<std::uint64_t>(attempt));
      std::optional<DesignMatrix> Xr;
      try {
        Xr.emplace(X.select_rows(idx));
      } catch (const DesignError&) {
        continue;
      }
      const VectorXd yr = select(y, idx);
      for (std::size_t t = 0; t < nt; ++t) {
        const auto fit = fit_quantile(*Xr, yr, taus[t], opts.solver);
        out[t].draws.row(static_cast<Index>(r)) = fit.beta.transpose();
        nonconverged[r * nt + t] = fit.solver_status == SolverStatus::max_iter ? 1 : 0;
      }
      return;
    }
    failed[r] = 1;
  });

  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t r = 0; r < B; ++r) {
      out[t].failed_replicates += failed[r] ? 1 : 0;
      out[t].nonconverged_replicates += nonconverged[r * nt + t] ? 1 : 0;
    }
  }
  return out;
}

BootstrapEnsemble bootstrap(const DesignMatrix& X, const VectorXd& y, double tau, std::size_t B,
                            std::uint64_t master_seed, const BootstrapOptions& opts) {
  return std::move(bootstrap_profile(X, y, {tau}, B, master_seed, opts).front());
}

CoefficientSummary summarize_coefficients(const std::vector<BootstrapEnsemble>& ensembles,
                                          const std::vector<std::string>& columns) {
  CoefficientSummary summary;
  summary.columns = columns;
  for (const auto& e : ensembles) {
    if (e.draws.cols() != static_cast<Index>(columns.size())) {
      throw std::invalid_argument("bootstrap ensembles do not share the design columns");
    }
    summary.taus.push_back(e.tau);
    std::vector<CoefficientStats> row;
    for (Index j = 0; j < e.draws.cols(); ++j) {
      const auto col = e.draws.col(j);
      std::vector<double> raw(col.data(), col.data() + col.size());
      const auto sorted = sorted_finite(raw);
      CoefficientStats s;
      s.draws = sorted.size();
      if (sorted.empty()) {
        s.median = s.q25 = s.q75 = s.whisker_lo = s.whisker_hi = std::numeric_limits<double>::quiet_NaN();
        row.push_back(s);
        continue;
      }
      s.median = quantile_type7(sorted, 0.5);
      s.q25 = quantile_type7(sorted, 0.25);
      s.q75 = quantile_type7(sorted, 0.75);
      const double iqr = s.q75 - s.q25;
      const double lo_fence = s.q25 - 1.5 * iqr;
      const double hi_fence = s.q75 + 1.5 * iqr;
      s.whisker_lo = *std::lower_bound(sorted.begin(), sorted.end(), lo_fence);
      s.whisker_hi = *(std::upper_bound(sorted.begin(), sorted.end(), hi_fence) - 1);
      if (sorted.size() >= kMinDrawsForCi) {
        s.ci_lo_95 = rank_quantile(sorted, 0.025);
        s.ci_hi_95 = rank_quantile(sorted, 0.975);
      }
      row.push_back(s);
    }
    summary.stats.push_back(std::move(row));
  }
  return summary;
}

}  // namespace qrmap
