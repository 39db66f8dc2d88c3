#include "priorclean/inject.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "priorclean/error.hpp"
#include "priorclean/rng.hpp"
#include "priorclean/stats.hpp"

namespace priorclean {

namespace {

void check_rate(double rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw InvalidArgument("injection rate must lie in [0, 1]");
  }
}

size_t exact_count(double rate, size_t eligible) {
  return static_cast<size_t>(std::llround(rate * static_cast<double>(eligible)));
}

std::string fmt_rate(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", rate);
  return buf;
}

struct Cell {
  size_t col;
  size_t row;
};

Table mask_cells(const Table& t, const std::vector<Cell>& cells,
                 const std::string& transform) {
  std::vector<Column> cols = t.columns();
  for (const Cell& c : cells) {
    cols[c.col].missing[c.row] = 1;
    cols[c.col].values[c.row] = std::numeric_limits<double>::quiet_NaN();
  }
  return t.with_columns(std::move(cols), transform);
}

}  // namespace

std::string error_kind_tag(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMcar: return "mcar";
    case ErrorKind::kMar: return "mar";
    case ErrorKind::kOutlier: return "out";
    case ErrorKind::kDuplicate: return "dup";
  }
  return "mcar";
}

ErrorKind parse_error_kind(const std::string& tag) {
  if (tag == "mcar" || tag == "MCAR") return ErrorKind::kMcar;
  if (tag == "mar" || tag == "MAR") return ErrorKind::kMar;
  if (tag == "out" || tag == "outlier" || tag == "OUTLIER") return ErrorKind::kOutlier;
  if (tag == "dup" || tag == "duplicate" || tag == "DUPLICATE") return ErrorKind::kDuplicate;
  throw InvalidArgument("unknown error type '" + tag + "' (mcar, mar, out, dup)");
}

Table inject_mcar(const Table& t, double rate, uint64_t seed) {
  check_rate(rate);
  if (rate == 0.0) return t;
  std::vector<Cell> eligible;
  for (size_t j = 0; j < t.n_cols(); ++j) {
    for (size_t i = 0; i < t.n_rows(); ++i) {
      if (!t.column(j).is_missing(i)) eligible.push_back({j, i});
    }
  }
  if (eligible.empty()) {
    return t.with_warning("mcar: no eligible cells; table unchanged");
  }
  const size_t k = exact_count(rate, eligible.size());
  Rng rng(derive_seed(seed, "mcar"));
  std::vector<Cell> chosen;
  chosen.reserve(k);
  for (size_t idx : rng.sample_without_replacement(eligible.size(), k)) {
    chosen.push_back(eligible[idx]);
  }
  return mask_cells(t, chosen,
                    "inject_mcar(rate=" + fmt_rate(rate) + ",seed=" +
                        std::to_string(seed) + ",cells=" + std::to_string(k) + ")");
}

Table inject_mar(const Table& t, double rate, uint64_t seed,
                 const std::optional<std::string>& pivot) {
  check_rate(rate);
  if (rate == 0.0) return t;
  const std::vector<size_t> numeric = t.numeric_columns();
  std::optional<size_t> fixed_pivot;
  if (pivot) {
    fixed_pivot = t.find_column(*pivot);
    if (!fixed_pivot || !t.column(*fixed_pivot).is_numeric()) {
      throw InvalidArgument("MAR pivot '" + *pivot + "' is not a numeric column");
    }
  }
  // Pivot per target column and the rows above each pivot's median.
  std::vector<std::optional<size_t>> pivot_of(t.n_cols());
  std::vector<std::vector<uint8_t>> above(t.n_cols());
  for (size_t j = 0; j < t.n_cols(); ++j) {
    if (fixed_pivot && *fixed_pivot != j) {
      pivot_of[j] = fixed_pivot;
    } else {
      for (size_t p : numeric) {
        if (p != j) {
          pivot_of[j] = p;
          break;
        }
      }
    }
  }
  for (size_t p : numeric) {
    const Column& col = t.column(p);
    std::vector<double> obs = col.observed();
    if (obs.empty()) continue;
    const double med = median(obs);
    above[p].assign(t.n_rows(), 0);
    for (size_t i = 0; i < t.n_rows(); ++i) {
      above[p][i] = !col.is_missing(i) && col.values[i] > med;
    }
  }
  size_t eligible_cells = 0;
  std::vector<Cell> pool;
  for (size_t j = 0; j < t.n_cols(); ++j) {
    for (size_t i = 0; i < t.n_rows(); ++i) {
      if (t.column(j).is_missing(i)) continue;
      ++eligible_cells;
      if (pivot_of[j] && !above[*pivot_of[j]].empty() && above[*pivot_of[j]][i]) {
        pool.push_back({j, i});
      }
    }
  }
  if (pool.empty()) {
    Table out = inject_mcar(t, rate, seed);
    return out.with_warning("mar: no numeric pivot available; fell back to MCAR");
  }
  size_t k = exact_count(rate, eligible_cells);
  std::string warning;
  if (k > pool.size()) {
    warning = "mar: requested " + std::to_string(k) + " cells but only " +
              std::to_string(pool.size()) + " satisfy the pivot condition";
    k = pool.size();
  }
  Rng rng(derive_seed(seed, "mar"));
  std::vector<Cell> chosen;
  for (size_t idx : rng.sample_without_replacement(pool.size(), k)) {
    chosen.push_back(pool[idx]);
  }
  Table out = mask_cells(t, chosen,
                         "inject_mar(rate=" + fmt_rate(rate) + ",seed=" +
                             std::to_string(seed) + ",cells=" + std::to_string(k) + ")");
  return warning.empty() ? out : out.with_warning(warning);
}

Table inject_outliers(const Table& t, double rate, uint64_t seed,
                      MagnitudeRange magnitude) {
  check_rate(rate);
  if (!(magnitude.lo > 0.0 && magnitude.hi >= magnitude.lo)) {
    throw InvalidArgument("outlier magnitude range must satisfy 0 < lo <= hi");
  }
  if (rate == 0.0) return t;
  struct Stat {
    size_t col;
    double mean;
    double sd;
  };
  std::vector<Stat> qualifying;
  for (size_t j : t.numeric_columns()) {
    std::vector<double> obs = t.column(j).observed();
    if (obs.size() < 3) continue;
    Moments m = moments(obs);
    if (m.sd > 0.0) qualifying.push_back({j, m.mean, m.sd});
  }
  if (qualifying.empty()) {
    return t.with_warning("outlier: no numeric column with >= 3 varying values; table unchanged");
  }
  const size_t k = exact_count(rate, t.n_rows());
  Rng rng(derive_seed(seed, "outlier"));
  std::vector<Column> cols = t.columns();
  for (size_t row : rng.sample_without_replacement(t.n_rows(), k)) {
    std::vector<size_t> observed_here;
    for (size_t q = 0; q < qualifying.size(); ++q) {
      if (!t.column(qualifying[q].col).is_missing(row)) observed_here.push_back(q);
    }
    size_t q = observed_here.empty() ? rng.uniform_index(qualifying.size())
                                     : observed_here[rng.uniform_index(observed_here.size())];
    const Stat& s = qualifying[q];
    const double u = rng.uniform(magnitude.lo, magnitude.hi);
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    cols[s.col].values[row] = s.mean + sign * u * s.sd;
    cols[s.col].missing[row] = 0;
  }
  return t.with_columns(std::move(cols),
                        "inject_outliers(rate=" + fmt_rate(rate) + ",seed=" +
                            std::to_string(seed) + ",rows=" + std::to_string(k) + ")");
}

Table inject_duplicates(const Table& t, double rate, uint64_t seed) {
  check_rate(rate);
  if (rate == 0.0) return t;
  if (t.n_rows() == 0) throw InvalidArgument("cannot duplicate rows of an empty table");
  const size_t k = exact_count(rate, t.n_rows());
  Rng rng(derive_seed(seed, "duplicate"));
  std::vector<size_t> rows(t.n_rows());
  std::iota(rows.begin(), rows.end(), size_t{0});
  for (size_t c = 0; c < k; ++c) rows.push_back(rng.uniform_index(t.n_rows()));
  return t.select_rows(rows, "inject_duplicates(rate=" + fmt_rate(rate) +
                                 ",seed=" + std::to_string(seed) +
                                 ",rows=" + std::to_string(k) + ")");
}

Table inject(const Table& t, const ErrorProfile& profile) {
  switch (profile.kind) {
    case ErrorKind::kMcar: return inject_mcar(t, profile.rate, profile.seed);
    case ErrorKind::kMar: return inject_mar(t, profile.rate, profile.seed, profile.mar_pivot);
    case ErrorKind::kOutlier:
      return inject_outliers(t, profile.rate, profile.seed, profile.magnitude);
    case ErrorKind::kDuplicate: return inject_duplicates(t, profile.rate, profile.seed);
  }
  return t;
}

}  // namespace priorclean
