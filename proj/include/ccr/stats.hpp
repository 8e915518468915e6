#pragma once

#include <span>
#include <utility>
#include <vector>

namespace ccr {

/// Sample Pearson correlation. Throws DataError on length mismatch, n < 2 or
/// zero variance in either input. Accumulation is serial in input order.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of their rank block.
std::vector<double> average_ranks(std::span<const double> x);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Two-sided p-value from t = rho * sqrt((n-2)/(1-rho^2)) with n-2 degrees of freedom.
double spearman_p_value(double rho, std::size_t n);

struct MeanStdErr {
  double mean = 0.0;
  double std_err = 0.0;
};

/// Mean and sample standard deviation (n-1) over sqrt(n); std_err is 0 for n = 1.
MeanStdErr mean_and_stderr(std::span<const double> values);

}  // namespace ccr
