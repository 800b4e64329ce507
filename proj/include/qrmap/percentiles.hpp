#pragma once

#include <span>
#include <vector>

namespace qrmap {

/// Linear-interpolation sample quantile (Hyndman-Fan type 7) of sorted data.
double quantile_type7(std::span<const double> sorted, double p);

/// Order statistic at rank ceil(p * n) (1-based) of sorted data.
double rank_quantile(std::span<const double> sorted, double p);

/// Sorted copy without NaNs.
std::vector<double> sorted_finite(std::span<const double> values);

}  // namespace qrmap
