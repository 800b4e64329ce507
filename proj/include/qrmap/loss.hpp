#pragma once

#include <span>
#include <vector>

namespace qrmap {

/// Probability level of a quantile model. Always strictly inside (0, 1).
class Tau {
 public:
  explicit Tau(double value);
  double value() const noexcept { return value_; }
  operator double() const noexcept { return value_; }

 private:
  double value_;
};

/// Asymmetric absolute loss, scaled so that the median loss is |x|:
///   L(x) = -2 (1 - tau) x   for x < 0
///   L(x) =  2 tau x         for x >= 0
/// Throws std::domain_error when tau is outside (0, 1).
double pinball_loss(double x, double tau);

/// Sum of pinball_loss over a residual vector.
double pinball_sum(std::span<const double> residuals, double tau);

/// The 19 equispaced levels 0.05, 0.10, ..., 0.95.
std::vector<double> default_tau_grid();

/// Throws std::domain_error unless taus is non-empty, strictly increasing
/// and contained in (0, 1).
void validate_tau_grid(std::span<const double> taus);

}  // namespace qrmap
