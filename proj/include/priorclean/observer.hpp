#ifndef PRIORCLEAN_OBSERVER_HPP_
#define PRIORCLEAN_OBSERVER_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "priorclean/table.hpp"

namespace priorclean {

constexpr size_t kStateDim = 9;
constexpr double kDriftCap = 5.0;

// Which cleaning families were applied this episode. Dedup has its own bit
// internally; the exported observation folds it into the scaler bit.
struct HistoryBits {
  bool imputer = false;
  bool outlier = false;
  bool scaler = false;
  bool dedup = false;
};

// The 9-dimensional observation: six quality scalars and three history bits.
struct QualityState {
  double r_miss = 0.0;
  double w1 = 0.0;
  double skew_mean = 0.0;
  double kurt_mean = 0.0;
  double balance = 0.0;
  double retention = 1.0;
  bool h_imp = false;
  bool h_out = false;
  bool h_scl = false;

  std::array<double, kStateDim> vector() const;
};

// Statistics of the pre-cleaning table, frozen at reset.
struct ReferenceProfile {
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;
  std::vector<std::vector<double>> sorted;  // empty for categorical columns
  std::vector<double> sd;                   // 0 for categorical columns
  size_t n0 = 0;
  std::vector<size_t> class_counts;
};

ReferenceProfile reset_reference(const Table& t);

// Exact W1 between two empirical distributions given as sorted samples,
// integrating |F^-1 - G^-1| over the merged quantile breakpoints.
double wasserstein1_sorted(std::span<const double> a, std::span<const double> b);

// Per numeric column min(W1 / sd_ref, 5); 0 when sd_ref == 0 or either side
// has fewer than two observed values.
std::vector<double> column_drifts(const Table& current, const ReferenceProfile& ref);

// Mean of column_drifts over numeric columns (0 without numeric columns).
double wasserstein1_normalized(const Table& current, const ReferenceProfile& ref);

// Mean per-column missing rate over all feature columns.
double missing_rate(const Table& t);
// Mean |skewness| / |excess kurtosis| over numeric columns; columns with
// fewer than 3 (resp. 4) observed values contribute 0.
double mean_abs_skewness(const Table& t);
double mean_abs_kurtosis(const Table& t);
// min / max class count over the reference classes; 0 without a label.
double class_balance(const Table& t);

QualityState observe(const Table& t, const ReferenceProfile& ref,
                     const HistoryBits& history);

}  // namespace priorclean

#endif  // PRIORCLEAN_OBSERVER_HPP_
