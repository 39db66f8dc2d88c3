#ifndef PRIORCLEAN_STATS_HPP_
#define PRIORCLEAN_STATS_HPP_

#include <span>
#include <vector>

namespace priorclean {

// Population (ddof = 0) moment estimates. Skewness is m3 / m2^1.5 and excess
// kurtosis m4 / m2^2 - 3, both bias-uncorrected; they are 0 when m2 == 0.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

Moments moments(std::span<const double> x);
double mean(std::span<const double> x);

// Linear-interpolation quantile of sorted data (position q * (n - 1)).
double quantile_sorted(std::span<const double> sorted, double q);
double median(std::vector<double> x);

// 1-based ranks with ties sharing their average rank.
std::vector<double> midranks(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace priorclean

#endif  // PRIORCLEAN_STATS_HPP_
