#include "priorclean/observer.hpp"

#include <algorithm>
#include <cmath>

#include "priorclean/error.hpp"
#include "priorclean/stats.hpp"

namespace priorclean {

std::array<double, kStateDim> QualityState::vector() const {
  return {r_miss,   w1,
          skew_mean, kurt_mean,
          balance,  retention,
          h_imp ? 1.0 : 0.0, h_out ? 1.0 : 0.0,
          h_scl ? 1.0 : 0.0};
}

ReferenceProfile reset_reference(const Table& t) {
  ReferenceProfile ref;
  ref.n0 = t.n_rows();
  ref.class_counts = t.class_counts();
  for (const Column& c : t.columns()) {
    ref.names.push_back(c.name);
    ref.kinds.push_back(c.kind);
    if (c.is_numeric()) {
      std::vector<double> obs = c.observed();
      std::sort(obs.begin(), obs.end());
      ref.sd.push_back(moments(obs).sd);
      ref.sorted.push_back(std::move(obs));
    } else {
      ref.sd.push_back(0.0);
      ref.sorted.emplace_back();
    }
  }
  return ref;
}

double wasserstein1_sorted(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("W1 of an empty sample");
  const unsigned long long n = a.size();
  const unsigned long long m = b.size();
  // Breakpoints i/n and j/m scaled by n*m are the integers i*m and j*n.
  unsigned long long prev = 0;
  size_t i = 0;
  size_t j = 0;
  long double total = 0.0L;
  while (i < n && j < m) {
    const unsigned long long next_a = (i + 1) * m;
    const unsigned long long next_b = (j + 1) * n;
    const unsigned long long next = std::min(next_a, next_b);
    total += static_cast<long double>(std::fabs(a[i] - b[j])) *
             static_cast<long double>(next - prev);
    prev = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return static_cast<double>(total / static_cast<long double>(n * m));
}

namespace {

void check_schema(const Table& current, const ReferenceProfile& ref) {
  if (current.n_cols() != ref.names.size()) {
    throw SchemaError("table has " + std::to_string(current.n_cols()) +
                      " columns, reference has " + std::to_string(ref.names.size()));
  }
  for (size_t j = 0; j < current.n_cols(); ++j) {
    if (current.column(j).name != ref.names[j] || current.column(j).kind != ref.kinds[j]) {
      throw SchemaError("column " + std::to_string(j) + " ('" + current.column(j).name +
                        "') does not match the reference schema");
    }
  }
}

}  // namespace

std::vector<double> column_drifts(const Table& current, const ReferenceProfile& ref) {
  check_schema(current, ref);
  std::vector<double> out;
  for (size_t j = 0; j < current.n_cols(); ++j) {
    if (ref.kinds[j] != ColumnKind::kNumeric) continue;
    const double sd = ref.sd[j];
    std::vector<double> obs = current.column(j).observed();
    if (sd <= 0.0 || obs.size() < 2 || ref.sorted[j].size() < 2) {
      out.push_back(0.0);
      continue;
    }
    std::sort(obs.begin(), obs.end());
    out.push_back(std::min(wasserstein1_sorted(obs, ref.sorted[j]) / sd, kDriftCap));
  }
  return out;
}

double wasserstein1_normalized(const Table& current, const ReferenceProfile& ref) {
  std::vector<double> d = column_drifts(current, ref);
  return d.empty() ? 0.0 : mean(d);
}

double missing_rate(const Table& t) {
  if (t.n_cols() == 0 || t.n_rows() == 0) return 0.0;
  double sum = 0.0;
  for (const Column& c : t.columns()) {
    sum += static_cast<double>(c.missing_count()) / static_cast<double>(t.n_rows());
  }
  return sum / static_cast<double>(t.n_cols());
}

namespace {

double mean_abs_moment(const Table& t, size_t min_obs, bool kurtosis) {
  const std::vector<size_t> numeric = t.numeric_columns();
  if (numeric.empty()) return 0.0;
  double sum = 0.0;
  for (size_t j : numeric) {
    std::vector<double> obs = t.column(j).observed();
    if (obs.size() < min_obs) continue;
    Moments m = moments(obs);
    sum += std::fabs(kurtosis ? m.excess_kurtosis : m.skewness);
  }
  return sum / static_cast<double>(numeric.size());
}

}  // namespace

double mean_abs_skewness(const Table& t) { return mean_abs_moment(t, 3, false); }
double mean_abs_kurtosis(const Table& t) { return mean_abs_moment(t, 4, true); }

double class_balance(const Table& t) {
  const std::vector<size_t> counts = t.class_counts();
  if (counts.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*hi == 0) return 0.0;
  return static_cast<double>(*lo) / static_cast<double>(*hi);
}

QualityState observe(const Table& t, const ReferenceProfile& ref,
                     const HistoryBits& history) {
  QualityState s;
  s.r_miss = missing_rate(t);
  s.w1 = wasserstein1_normalized(t, ref);
  s.skew_mean = mean_abs_skewness(t);
  s.kurt_mean = mean_abs_kurtosis(t);
  s.balance = class_balance(t);
  s.retention = ref.n0 == 0 ? 0.0
                            : static_cast<double>(t.n_rows()) / static_cast<double>(ref.n0);
  s.h_imp = history.imputer;
  s.h_out = history.outlier;
  s.h_scl = history.scaler || history.dedup;
  return s;
}

}  // namespace priorclean
