#ifndef PRIORCLEAN_ANALYSIS_HPP_
#define PRIORCLEAN_ANALYSIS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace priorclean {

enum class Alternative { kTwoSided, kGreater, kLess };
std::string alternative_name(Alternative a);
Alternative parse_alternative(const std::string& s);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  size_t n_effective = 0;
  Alternative alternative = Alternative::kTwoSided;
  std::string method;  // "exact" or "normal-approx"
  bool degenerate = false;
};

// Paired signed-rank test on d = x - y. Zero differences are dropped and
// tied |d| share mid-ranks. Two-sided: statistic min(W+, W-), p =
// min(1, 2 P(W <= statistic)). Greater (x > y): statistic W-, p = P(W <= W-).
// Less: statistic W+, p = P(W <= W+). Exact null distribution by dynamic
// programming over sign assignments when n_effective <= 25, otherwise the
// tie-corrected normal approximation with continuity correction.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                Alternative alternative = Alternative::kTwoSided);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  size_t n = 0;
  bool undefined = false;  // a constant input
};

// Pearson correlation of mid-ranks; two-sided p from the t distribution with
// n - 2 degrees of freedom (approximate for small n).
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

// Mean of the last `window` values at every position (fewer at the start).
std::vector<double> rolling_mean(std::span<const double> values, size_t window = 100);

// Earliest step at which the `window`-entry rolling mean has stayed within
// `tol` (max - min) for `span` consecutive steps. The rolling mean exists
// once `window` entries have been seen. Entries are (step, value) pairs with
// non-decreasing steps, e.g. (episode end step, episode reward).
std::optional<size_t> detect_convergence(const std::vector<std::pair<size_t, double>>& log,
                                         size_t window = 100, size_t span = 500,
                                         double tol = 0.001);

}  // namespace priorclean

#endif  // PRIORCLEAN_ANALYSIS_HPP_
