#pragma once

#include <span>
#include <vector>

namespace tna {

/// Empirical quantile with type-7 linear interpolation (the common default:
/// h = (n-1)q, interpolate between the floor(h) and floor(h)+1 order
/// statistics). `values` is copied and sorted; must be non-empty.
double quantile_type7(std::vector<double> values, double q);

/// log(sum(exp(x))) guarded against overflow; -inf input is handled.
double log_sum_exp(std::span<const double> x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Two-sided p-value for a standard-normal test statistic.
double two_sided_p(double t);

double mean(std::span<const double> x);
double sample_sd(std::span<const double> x);

/// Pearson correlation; returns 0 when either side has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Spearman rank correlation with average ranks for ties. When either rank
/// vector is constant, returns 1 if both rank vectors are equal and 0
/// otherwise (keeps the drop-nothing stability case at exactly 1).
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace tna
