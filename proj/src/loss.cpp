#include "qrmap/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qrmap {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw std::domain_error("tau must lie in (0, 1), got " + std::to_string(tau));
  }
}

}  // namespace

Tau::Tau(double value) : value_(value) { check_tau(value); }

double pinball_loss(double x, double tau) {
  check_tau(tau);
  return x < 0.0 ? -2.0 * (1.0 - tau) * x : 2.0 * tau * x;
}

double pinball_sum(std::span<const double> residuals, double tau) {
  check_tau(tau);
  double total = 0.0;
  for (double r : residuals) total += r < 0.0 ? -2.0 * (1.0 - tau) * r : 2.0 * tau * r;
  return total;
}

std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  taus.reserve(19);
  for (int k = 1; k <= 19; ++k) taus.push_back(k / 20.0);
  return taus;
}

void validate_tau_grid(std::span<const double> taus) {
  if (taus.empty()) throw std::domain_error("tau grid is empty");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    check_tau(taus[i]);
    if (i > 0 && !(taus[i] > taus[i - 1])) {
      throw std::domain_error("tau grid must be strictly increasing (at tau=" +
                              std::to_string(taus[i]) + ")");
    }
  }
}

}  // namespace qrmap
