#ifndef PRIORCLEAN_INJECT_HPP_
#define PRIORCLEAN_INJECT_HPP_

#include <cstdint>
#include <optional>
#include <string>

#include "priorclean/table.hpp"

namespace priorclean {

enum class ErrorKind { kMcar, kMar, kOutlier, kDuplicate };

// Artifact type tag: mcar, mar, out, dup.
std::string error_kind_tag(ErrorKind kind);
ErrorKind parse_error_kind(const std::string& tag);

struct MagnitudeRange {
  double lo = 5.0;
  double hi = 10.0;
};

struct ErrorProfile {
  ErrorKind kind = ErrorKind::kMcar;
  double rate = 0.0;
  uint64_t seed = 42;
  // MAR: name of the pivot column; unset = first other numeric column.
  std::optional<std::string> mar_pivot;
  MagnitudeRange magnitude;
};

// All injectors mask or perturb an exact count round(rate * eligible) instead
// of drawing per-cell Bernoulli trials, and never touch the label.
Table inject_mcar(const Table& t, double rate, uint64_t seed);
// Masks cells of each column only in rows where its pivot column is observed
// and strictly above the pivot's median.
Table inject_mar(const Table& t, double rate, uint64_t seed,
                 const std::optional<std::string>& pivot = std::nullopt);
// Replaces one numeric cell in each of round(rate * n_rows) rows with
// mean +/- u * sd of the column, u ~ U[magnitude.lo, magnitude.hi].
Table inject_outliers(const Table& t, double rate, uint64_t seed,
                      MagnitudeRange magnitude = {});
// Appends round(rate * n_rows) exact copies of rows sampled with replacement.
Table inject_duplicates(const Table& t, double rate, uint64_t seed);

Table inject(const Table& t, const ErrorProfile& profile);

}  // namespace priorclean

#endif  // PRIORCLEAN_INJECT_HPP_
