#include "qrmap/quantile_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "qrmap/errors.hpp"
#include "qrmap/loss.hpp"
#include "qrmap/parallel.hpp"

namespace qrmap {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::vertex: return "vertex";
    case SolverStatus::interior: return "interior";
    case SolverStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

const QuantileFit& QuantileProfile::at_tau(double tau) const {
  for (const auto& f : fits) {
    if (std::abs(f.tau - tau) < 1e-12) return f;
  }
  throw std::out_of_range("no fit at tau=" + std::to_string(tau));
}

namespace {

// Residuals this close to zero relative to the magnitude of the terms that
// produced them are stored as exact zeros.
constexpr double kSnapTolerance = 1e-12;

inline double loss(double r, double tau) {
  return r < 0.0 ? -2.0 * (1.0 - tau) * r : 2.0 * tau * r;
}

VectorXd residuals_of(const MatrixXd& X, const VectorXd& y, const VectorXd& beta) {
  return y - X * beta;
}

void snap_residuals(const MatrixXd& X, const VectorXd& y, const VectorXd& beta,
                    VectorXd& r) {
  const VectorXd abs_beta = beta.cwiseAbs();
  for (Index i = 0; i < r.size(); ++i) {
    const double scale = std::abs(y(i)) + X.row(i).cwiseAbs().dot(abs_beta);
    if (std::abs(r(i)) <= kSnapTolerance * scale) r(i) = 0.0;
  }
}

// ---------------------------------------------------------------------------
// Frisch-Newton interior point with Mehrotra predictor-corrector steps, run
// on the bounded dual  max y'a  s.t.  X'a = (1-tau) X'1,  0 <= a <= 1.
// The equality multipliers of that problem are -beta.

struct InteriorResult {
  VectorXd beta;
  int iterations = 0;
  bool converged = false;
};

double step_bound(const VectorXd& v, const VectorXd& dv) {
  double f = 1e20;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) f = std::min(f, -v(i) / dv(i));
  }
  return f;
}

InteriorResult interior_point(const MatrixXd& X, const VectorXd& y, double tau,
                              double gap_tolerance, int max_iterations) {
  constexpr double kStep = 0.99995;
  const Index n = X.rows();

  const VectorXd c = -y;
  const VectorXd b = (1.0 - tau) * X.colwise().sum().transpose();
  VectorXd x = VectorXd::Constant(n, 1.0 - tau);
  VectorXd s = VectorXd::Ones(n) - x;
  VectorXd dual = X.colPivHouseholderQr().solve(c);
  VectorXd r = c - X * dual;
  const double shift = 1e-3 * (1.0 + r.cwiseAbs().mean());
  VectorXd z = r.cwiseMax(0.0).array() + shift;
  VectorXd w = (-r).cwiseMax(0.0).array() + shift;

  auto gap_of = [&] { return c.dot(x) - b.dot(dual) + w.sum(); };
  double gap = gap_of();

  InteriorResult out;
  VectorXd best_dual = dual;
  double best_gap = std::abs(gap);
  int it = 0;
  while (it < max_iterations) {
    if (std::abs(gap) <= gap_tolerance * (1.0 + std::abs(c.dot(x)))) {
      out.converged = true;
      break;
    }
    ++it;
    const VectorXd q = (z.array() / x.array() + w.array() / s.array()).inverse();
    r = z - w;
    const MatrixXd Xq = X.array().colwise() * q.array().sqrt();
    const MatrixXd Q = Xq.transpose() * Xq;
    Eigen::LDLT<MatrixXd> chol(Q);
    if (chol.info() != Eigen::Success) break;

    VectorXd rhs = X.transpose() * q.cwiseProduct(r);
    VectorXd dy = chol.solve(rhs);
    VectorXd dx = q.cwiseProduct(X * dy - r);
    VectorXd ds = -dx;
    VectorXd dz = -z.cwiseProduct(dx.cwiseQuotient(x).array().matrix() + VectorXd::Ones(n));
    VectorXd dw = -w.cwiseProduct(ds.cwiseQuotient(s).array().matrix() + VectorXd::Ones(n));

    double fp = std::min(kStep * std::min(step_bound(x, dx), step_bound(s, ds)), 1.0);
    double fd = std::min(kStep * std::min(step_bound(w, dw), step_bound(z, dz)), 1.0);

    if (std::min(fp, fd) < 1.0) {
      double mu = z.dot(x) + w.dot(s);
      const double g = (z + fd * dz).dot(x + fp * dx) + (w + fd * dw).dot(s + fp * ds);
      mu = mu * std::pow(g / mu, 3) / (2.0 * static_cast<double>(n));
      const VectorXd dxdz = dx.cwiseProduct(dz);
      const VectorXd dsdw = ds.cwiseProduct(dw);
      const VectorXd xinv = x.cwiseInverse();
      const VectorXd sinv = s.cwiseInverse();
      const VectorXd xi = mu * (xinv - sinv);
      rhs += X.transpose() * q.cwiseProduct(dxdz - dsdw - xi);
      dy = chol.solve(rhs);
      dx = q.cwiseProduct(X * dy + xi - r - dxdz + dsdw);
      ds = -dx;
      dz = mu * xinv - z - xinv.cwiseProduct(z).cwiseProduct(dx) - dxdz;
      dw = mu * sinv - w - sinv.cwiseProduct(w).cwiseProduct(ds) - dsdw;
      fp = std::min(kStep * std::min(step_bound(x, dx), step_bound(s, ds)), 1.0);
      fd = std::min(kStep * std::min(step_bound(w, dw), step_bound(z, dz)), 1.0);
    }

    x += fp * dx;
    s += fp * ds;
    dual += fd * dy;
    w += fd * dw;
    z += fd * dz;
    if (!dual.allFinite()) {
      dual = best_dual;
      break;
    }
    gap = gap_of();
    if (std::abs(gap) < best_gap) {
      best_gap = std::abs(gap);
      best_dual = dual;
    }
  }
  if (!out.converged && it >= max_iterations) {
    out.converged = std::abs(gap) <= gap_tolerance * (1.0 + std::abs(c.dot(x)));
  }
  out.beta = out.converged ? VectorXd(-dual) : VectorXd(-best_dual);
  out.iterations = it;
  return out;
}

// ---------------------------------------------------------------------------
// Basic solutions: the fit interpolates the k observations of `basis`.

std::vector<Index> select_basis(const MatrixXd& X, const VectorXd& r) {
  const Index n = X.rows();
  const Index k = X.cols();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(r(a)) < std::abs(r(b)); });

  MatrixXd ortho(k, k);
  Index found = 0;
  std::vector<Index> basis;
  for (Index i : order) {
    VectorXd v = X.row(i).transpose();
    const double norm0 = v.norm();
    if (norm0 == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index j = 0; j < found; ++j) v -= ortho.col(j).dot(v) * ortho.col(j);
    }
    const double nv = v.norm();
    if (nv <= 1e-9 * norm0) continue;
    ortho.col(found++) = v / nv;
    basis.push_back(i);
    if (found == k) break;
  }
  if (found < k) throw NumericalError("could not select a nonsingular basis; design is rank deficient");
  return basis;
}

struct SimplexResult {
  VectorXd beta;
  VectorXd residuals;
  std::vector<Index> basis;
  int pivots = 0;
  bool converged = false;
  bool unique = false;
};

SimplexResult simplex_refine(const MatrixXd& X, const VectorXd& y, double tau,
                             std::vector<Index> basis, int max_pivots) {
  const Index n = X.rows();
  const Index k = X.cols();
  const VectorXd abs_colsum = X.cwiseAbs().colwise().sum().transpose();
  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  std::vector<std::pair<double, Index>> breaks;
  breaks.reserve(static_cast<std::size_t>(n));

  SimplexResult out;
  for (int pivot = 0;; ++pivot) {
    MatrixXd Xb(k, k);
    VectorXd yb(k);
    for (Index j = 0; j < k; ++j) {
      Xb.row(j) = X.row(basis[j]);
      yb(j) = y(basis[j]);
    }
    Eigen::PartialPivLU<MatrixXd> lu(Xb);
    const MatrixXd directions = lu.inverse();
    VectorXd beta = lu.solve(yb);
    // One step of iterative refinement keeps basis residuals at rounding level.
    beta += lu.solve(yb - Xb * beta);
    VectorXd r = residuals_of(X, y, beta);
    std::fill(in_basis.begin(), in_basis.end(), 0);
    for (Index j : basis) {
      in_basis[static_cast<std::size_t>(j)] = 1;
      r(j) = 0.0;
    }
    snap_residuals(X, y, beta, r);

    out.beta = beta;
    out.residuals = r;
    out.basis = basis;
    out.pivots = pivot;
    if (pivot >= max_pivots) return out;

    // Subgradient of the non-basic residuals with a definite sign.
    VectorXd v = VectorXd::Zero(k);
    std::vector<Index> zeros;
    for (Index i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) continue;
      if (r(i) > 0.0) {
        v.noalias() += 2.0 * tau * X.row(i).transpose();
      } else if (r(i) < 0.0) {
        v.noalias() -= 2.0 * (1.0 - tau) * X.row(i).transpose();
      } else {
        zeros.push_back(i);
      }
    }
    const VectorXd g = directions.transpose() * v;

    // Moving beta along +d_j drives basis residual j negative, along -d_j
    // positive; the other basis residuals stay at zero.
    Index best_j = -1;
    double best_slope = 0.0;
    double best_sign = 0.0;
    bool unique = true;
    for (Index j = 0; j < k; ++j) {
      double plus = 2.0 * (1.0 - tau) - g(j);
      double minus = 2.0 * tau + g(j);
      for (Index i : zeros) {
        const double a = X.row(i).dot(directions.col(j));
        plus += loss(-a, tau);
        minus += loss(a, tau);
      }
      const double tol = 1e-10 * (2.0 + 2.0 * abs_colsum.dot(directions.col(j).cwiseAbs()));
      if (plus <= tol || minus <= tol) unique = false;
      if (plus < -tol && plus < best_slope) {
        best_slope = plus;
        best_j = j;
        best_sign = 1.0;
      }
      if (minus < -tol && minus < best_slope) {
        best_slope = minus;
        best_j = j;
        best_sign = -1.0;
      }
    }
    if (best_j < 0) {
      out.converged = true;
      out.unique = unique;
      return out;
    }

    // Exact line search: the objective along the edge is convex piecewise
    // linear; each crossing residual raises the slope by 2|c_i|.
    const VectorXd cvec = best_sign * (X * directions.col(best_j));
    breaks.clear();
    for (Index i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)] || r(i) == 0.0 || cvec(i) == 0.0) continue;
      const double step = r(i) / cvec(i);
      if (step > 0.0) breaks.emplace_back(step, i);
    }
    std::sort(breaks.begin(), breaks.end());
    double slope = best_slope;
    Index entering = -1;
    for (const auto& [step, i] : breaks) {
      slope += 2.0 * std::abs(cvec(i));
      if (slope >= 0.0) {
        entering = i;
        break;
      }
    }
    if (entering < 0) {
      // Unbounded edge cannot occur for a full-rank design; stop on the
      // current vertex rather than loop.
      return out;
    }
    basis[static_cast<std::size_t>(best_j)] = entering;
  }
}

QuantileFit finish(double tau, VectorXd beta, VectorXd residuals, SolverStatus status,
                   int iterations, std::vector<Index> basis) {
  QuantileFit fit;
  fit.tau = tau;
  fit.beta = std::move(beta);
  fit.residuals = std::move(residuals);
  fit.objective = pinball_sum({fit.residuals.data(), static_cast<std::size_t>(fit.residuals.size())}, tau);
  fit.solver_status = status;
  fit.iterations = iterations;
  fit.basis = std::move(basis);
  return fit;
}

QuantileFit enumerate_vertices(const MatrixXd& X, const VectorXd& y, double tau) {
  const Index n = X.rows();
  const Index k = X.cols();
  if (n > 20) throw std::invalid_argument("vertex enumeration is limited to n <= 20");
  std::vector<Index> subset(static_cast<std::size_t>(k));
  std::iota(subset.begin(), subset.end(), Index{0});
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_beta;
  std::vector<Index> best_subset;
  int evaluated = 0;
  for (;;) {
    MatrixXd Xb(k, k);
    VectorXd yb(k);
    for (Index j = 0; j < k; ++j) {
      Xb.row(j) = X.row(subset[j]);
      yb(j) = y(subset[j]);
    }
    Eigen::FullPivLU<MatrixXd> lu(Xb);
    lu.setThreshold(1e-10);
    if (lu.rank() == k) {
      const VectorXd beta = lu.solve(yb);
      const VectorXd r = residuals_of(X, y, beta);
      double obj = 0.0;
      for (Index i = 0; i < n; ++i) obj += loss(r(i), tau);
      ++evaluated;
      if (obj < best) {
        best = obj;
        best_beta = beta;
        best_subset = subset;
      }
    }
    // Next k-combination in lexicographic order.
    Index pos = k - 1;
    while (pos >= 0 && subset[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++subset[pos];
    for (Index j = pos + 1; j < k; ++j) subset[j] = subset[j - 1] + 1;
  }
  if (best_subset.empty()) throw NumericalError("every candidate subset is degenerate");
  VectorXd r = residuals_of(X, y, best_beta);
  for (Index j : best_subset) r(j) = 0.0;
  snap_residuals(X, y, best_beta, r);
  return finish(tau, best_beta, r, SolverStatus::vertex, evaluated, best_subset);
}

}  // namespace

namespace detail {

QuantileFit solve_quantile(const MatrixXd& X, const VectorXd& y, double tau,
                           const SolverOptions& opts) {
  if (opts.method == SolverMethod::enumeration) return enumerate_vertices(X, y, tau);

  VectorXd start;
  int ip_iterations = 0;
  bool ip_converged = true;
  if (opts.method == SolverMethod::interior_point || !opts.warm_start) {
    auto ip = interior_point(X, y, tau, opts.gap_tolerance, opts.max_iterations);
    start = std::move(ip.beta);
    ip_iterations = ip.iterations;
    ip_converged = ip.converged;
  } else {
    if (opts.warm_start->size() != X.cols()) {
      throw std::invalid_argument("warm start has the wrong number of coefficients");
    }
    start = *opts.warm_start;
  }

  if (opts.method == SolverMethod::interior_point) {
    VectorXd r = residuals_of(X, y, start);
    return finish(tau, start, r,
                  ip_converged ? SolverStatus::interior : SolverStatus::max_iter,
                  ip_iterations, {});
  }

  const int max_pivots = opts.max_pivots > 0 ? opts.max_pivots : 50 + 4 * static_cast<int>(X.rows());
  auto basis = select_basis(X, residuals_of(X, y, start));
  auto sx = simplex_refine(X, y, tau, std::move(basis), max_pivots);
  SolverStatus status = SolverStatus::max_iter;
  if (sx.converged) status = sx.unique ? SolverStatus::vertex : SolverStatus::interior;
  return finish(tau, std::move(sx.beta), std::move(sx.residuals), status,
                ip_iterations + sx.pivots, std::move(sx.basis));
}

}  // namespace detail

QuantileFit fit_quantile(const DesignMatrix& X, const VectorXd& y, double tau,
                         const SolverOptions& opts) {
  Tau checked(tau);
  if (y.size() != X.rows()) {
    throw DataError("response has " + std::to_string(y.size()) + " values but the design has " +
                    std::to_string(X.rows()) + " rows");
  }
  if (!y.allFinite()) throw DataError("response contains non-finite values");
  return detail::solve_quantile(X.values(), y, checked.value(), opts);
}

QuantileProfile fit_profile(const DesignMatrix& X, const VectorXd& y,
                            const std::vector<double>& taus, const SolverOptions& opts,
                            int workers) {
  const std::vector<double> grid = taus.empty() ? default_tau_grid() : taus;
  validate_tau_grid(grid);
  QuantileProfile profile;
  profile.columns = X.columns();
  profile.fits.resize(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t t) {
    const auto tag = [&](const std::exception& e) {
      return "tau=" + std::to_string(grid[t]) + ": " + e.what();
    };
    try {
      profile.fits[t] = fit_quantile(X, y, grid[t], opts);
    } catch (const DesignError& e) {
      throw DesignError(tag(e));
    } catch (const DataError& e) {
      throw DataError(tag(e));
    } catch (const std::domain_error& e) {
      throw std::domain_error(tag(e));
    } catch (const std::exception& e) {
      throw NumericalError(tag(e));
    }
  });
  return profile;
}

}  // namespace qrmap
