#ifndef PRIORCLEAN_IO_HPP_
#define PRIORCLEAN_IO_HPP_

#include <optional>
#include <string>
#include <vector>

#include "priorclean/table.hpp"

namespace priorclean {

enum class TableFormat { kCsv, kParquet };

// Infers the format from the file extension (.csv / .parquet).
TableFormat format_from_path(const std::string& path);

struct LoadOptions {
  // Explicit label column. When unset, a single column named class, target,
  // label or y (case-insensitive) is used; otherwise the table is unlabeled.
  std::optional<std::string> label_column;
  bool detect_label = true;
};

// Reads a CSV (header row required) or Parquet file. Cells equal to "", "NA",
// "NaN" or "?" are missing. A column is numeric when at least 95% of its
// non-missing cells parse as numbers; stray tokens in a numeric column become
// missing with a warning, and a column below the threshold is categorical.
// Rows with a missing label are dropped and counted in the warnings.
Table load_table(const std::string& path, TableFormat format,
                 const LoadOptions& options = {});
Table load_table(const std::string& path, const LoadOptions& options = {});

void save_table(const Table& t, const std::string& path, TableFormat format);
void save_table(const Table& t, const std::string& path);

// Raw string cells (std::nullopt = missing) turned into a typed table.
// Shared by the CSV and Parquet readers; `kind` skips type inference when the
// source format already carries a type.
struct RawColumn {
  std::string name;
  std::vector<std::optional<std::string>> cells;
  std::optional<ColumnKind> kind;
};
Table build_table(std::vector<RawColumn> columns, const LoadOptions& options,
                  Provenance provenance);

bool is_missing_marker(const std::string& cell);
constexpr double kNumericThreshold = 0.95;

// RFC-4180 CSV parsing of an in-memory buffer into records.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);
std::string csv_escape(const std::string& field);

}  // namespace priorclean

#endif  // PRIORCLEAN_IO_HPP_
