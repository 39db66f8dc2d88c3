#ifndef PRIORCLEAN_TABLE_HPP_
#define PRIORCLEAN_TABLE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace priorclean {

enum class ColumnKind : uint8_t { kNumeric, kCategorical };

// One feature column. Categorical columns are label-encoded: `values` holds
// integer codes into `categories` (sorted, unique). Missing cells keep a
// value of NaN and a set mask bit.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<double> values;
  std::vector<uint8_t> missing;
  std::vector<std::string> categories;

  static Column numeric(std::string name, std::vector<double> values,
                        std::vector<uint8_t> missing = {});
  static Column categorical(std::string name, std::vector<int32_t> codes,
                            std::vector<std::string> categories,
                            std::vector<uint8_t> missing = {});

  size_t size() const { return values.size(); }
  bool is_numeric() const { return kind == ColumnKind::kNumeric; }
  bool is_missing(size_t row) const { return missing[row] != 0; }
  size_t missing_count() const;
  // Non-missing values, in row order.
  std::vector<double> observed() const;
  // Display form of a cell; "" for missing.
  std::string render(size_t row) const;
};

// Designated target column. Never contains missing values.
struct Label {
  std::string name;
  std::vector<int32_t> codes;
  std::vector<std::string> classes;

  size_t num_classes() const { return classes.size(); }
};

// Parsed `<name>_<type>_p<rate>` artifact stem.
struct ArtifactName {
  std::string dataset;
  std::string type;  // mcar, mar, out, dup
  int rate_percent = 0;

  std::string stem() const;
  static std::optional<ArtifactName> parse(const std::string& stem);
};

struct Provenance {
  std::string source;
  std::optional<ArtifactName> artifact;
  std::vector<std::string> transforms;
  std::vector<std::string> warnings;
};

// Columnar dataset. Immutable: every transformation returns a new Table with
// an extended transform log.
class Table {
 public:
  Table() = default;
  Table(std::vector<Column> columns, std::optional<Label> label,
        Provenance provenance = {});

  size_t n_rows() const { return n_rows_; }
  size_t n_cols() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(size_t j) const { return columns_.at(j); }
  std::optional<size_t> find_column(const std::string& name) const;
  bool has_label() const { return label_.has_value(); }
  const Label& label() const;
  const std::optional<Label>& maybe_label() const { return label_; }
  const Provenance& provenance() const { return provenance_; }

  std::vector<size_t> numeric_columns() const;
  size_t feature_cells() const { return n_rows_ * columns_.size(); }
  size_t missing_cells() const;
  // Per-class row counts, indexed by label code. Empty when unlabeled.
  std::vector<size_t> class_counts() const;
  // Row indices per class code.
  std::vector<std::vector<size_t>> rows_by_class() const;

  // Rows in the given order (duplicates allowed).
  Table select_rows(std::span<const size_t> rows,
                    const std::string& transform) const;
  Table with_columns(std::vector<Column> columns,
                     const std::string& transform) const;
  Table with_warning(const std::string& warning) const;
  Table with_transform(const std::string& transform) const;

  // Cell-level equality of data (names, kinds, values, masks, labels);
  // provenance is ignored. Categorical cells compare by their strings.
  bool same_data(const Table& other) const;

 private:
  std::vector<Column> columns_;
  std::optional<Label> label_;
  Provenance provenance_;
  size_t n_rows_ = 0;
};

// 128-bit content digest.
struct Digest {
  uint64_t hi = 0;
  uint64_t lo = 0;
  friend bool operator==(const Digest&, const Digest&) = default;
  friend auto operator<=>(const Digest&, const Digest&) = default;
  std::string hex() const;
};

// Hash of a row's feature cells. Numeric values are canonicalized through a
// fixed decimal rendering, missing cells hash as a distinct token. The label
// is not part of the fingerprint, so rows that differ only in their label
// count as duplicates. A 64-bit collision is treated as a duplicate.
uint64_t row_fingerprint(const Table& t, size_t row);

// Digest over column names, kinds, values, masks and labels.
Digest table_fingerprint(const Table& t);

// Number of rows whose fingerprint already occurred earlier in the table.
size_t duplicate_row_count(const Table& t);

}  // namespace priorclean

#endif  // PRIORCLEAN_TABLE_HPP_
