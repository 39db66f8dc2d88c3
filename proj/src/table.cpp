#include "priorclean/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <regex>
#include <unordered_set>

#include "priorclean/error.hpp"

namespace priorclean {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<uint8_t> default_mask(std::vector<uint8_t> mask, size_t n) {
  if (mask.empty()) mask.assign(n, 0);
  if (mask.size() != n) {
    throw SchemaError("missing mask length does not match column length");
  }
  return mask;
}

// Two independent 64-bit streams give a 128-bit digest.
class Hasher {
 public:
  void bytes(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      a_ ^= p[i];
      a_ *= 1099511628211ULL;
      b_ = (b_ ^ p[i]) * 0x100000001b3ULL + 0x9e3779b97f4a7c15ULL;
      b_ ^= b_ >> 29;
    }
  }
  void u64(uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void real(double v) {
    if (v == 0.0) v = 0.0;  // fold -0.0
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    u64(bits);
  }
  uint64_t first() const { return a_; }
  Digest digest() const { return Digest{a_, b_}; }

 private:
  uint64_t a_ = 1469598103934665603ULL;
  uint64_t b_ = 0x84222325cbf29ce4ULL;
};

}  // namespace

Column Column::numeric(std::string name, std::vector<double> values,
                       std::vector<uint8_t> missing) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::kNumeric;
  c.missing = default_mask(std::move(missing), values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) c.missing[i] = 1;
    if (c.missing[i]) values[i] = kNaN;
  }
  c.values = std::move(values);
  return c;
}

Column Column::categorical(std::string name, std::vector<int32_t> codes,
                           std::vector<std::string> categories,
                           std::vector<uint8_t> missing) {
  Column c;
  c.name = std::move(name);
  c.kind = ColumnKind::kCategorical;
  c.missing = default_mask(std::move(missing), codes.size());
  c.values.resize(codes.size());
  for (size_t i = 0; i < codes.size(); ++i) {
    if (c.missing[i] || codes[i] < 0) {
      c.missing[i] = 1;
      c.values[i] = kNaN;
      continue;
    }
    if (static_cast<size_t>(codes[i]) >= categories.size()) {
      throw SchemaError("categorical code out of range in column " + c.name);
    }
    c.values[i] = codes[i];
  }
  c.categories = std::move(categories);
  return c;
}

size_t Column::missing_count() const {
  return static_cast<size_t>(std::count(missing.begin(), missing.end(), 1));
}

std::vector<double> Column::observed() const {
  std::vector<double> out;
  out.reserve(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (!missing[i]) out.push_back(values[i]);
  }
  return out;
}

std::string Column::render(size_t row) const {
  if (missing[row]) return {};
  if (kind == ColumnKind::kCategorical) {
    return categories.at(static_cast<size_t>(values[row]));
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", values[row]);
  return buf;
}

std::string ArtifactName::stem() const {
  return dataset + "_" + type + "_p" + std::to_string(rate_percent);
}

std::optional<ArtifactName> ArtifactName::parse(const std::string& stem) {
  static const std::regex kPattern("^(.+)_(mcar|mar|out|dup)_p([0-9]+)$");
  std::smatch m;
  if (!std::regex_match(stem, m, kPattern)) return std::nullopt;
  return ArtifactName{m[1].str(), m[2].str(), std::stoi(m[3].str())};
}

Table::Table(std::vector<Column> columns, std::optional<Label> label,
             Provenance provenance)
    : columns_(std::move(columns)),
      label_(std::move(label)),
      provenance_(std::move(provenance)) {
  if (!columns_.empty()) {
    n_rows_ = columns_.front().size();
  } else if (label_) {
    n_rows_ = label_->codes.size();
  }
  for (const Column& c : columns_) {
    if (c.size() != n_rows_ || c.missing.size() != n_rows_) {
      throw SchemaError("column '" + c.name + "' has " +
                        std::to_string(c.size()) + " rows, expected " +
                        std::to_string(n_rows_));
    }
  }
  if (label_) {
    if (label_->codes.size() != n_rows_) {
      throw SchemaError("label length does not match table rows");
    }
    for (int32_t code : label_->codes) {
      if (code < 0 || static_cast<size_t>(code) >= label_->classes.size()) {
        throw SchemaError("label code out of range");
      }
    }
  }
}

std::optional<size_t> Table::find_column(const std::string& name) const {
  for (size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name == name) return j;
  }
  return std::nullopt;
}

const Label& Table::label() const {
  if (!label_) throw SchemaError("table has no label column");
  return *label_;
}

std::vector<size_t> Table::numeric_columns() const {
  std::vector<size_t> out;
  for (size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].is_numeric()) out.push_back(j);
  }
  return out;
}

size_t Table::missing_cells() const {
  size_t total = 0;
  for (const Column& c : columns_) total += c.missing_count();
  return total;
}

std::vector<size_t> Table::class_counts() const {
  if (!label_) return {};
  std::vector<size_t> counts(label_->classes.size(), 0);
  for (int32_t code : label_->codes) ++counts[static_cast<size_t>(code)];
  return counts;
}

std::vector<std::vector<size_t>> Table::rows_by_class() const {
  if (!label_) return {};
  std::vector<std::vector<size_t>> out(label_->classes.size());
  for (size_t i = 0; i < n_rows_; ++i) {
    out[static_cast<size_t>(label_->codes[i])].push_back(i);
  }
  return out;
}

Table Table::select_rows(std::span<const size_t> rows,
                         const std::string& transform) const {
  std::vector<Column> cols;
  cols.reserve(columns_.size());
  for (const Column& c : columns_) {
    Column out;
    out.name = c.name;
    out.kind = c.kind;
    out.categories = c.categories;
    out.values.reserve(rows.size());
    out.missing.reserve(rows.size());
    for (size_t r : rows) {
      out.values.push_back(c.values.at(r));
      out.missing.push_back(c.missing[r]);
    }
    cols.push_back(std::move(out));
  }
  std::optional<Label> label;
  if (label_) {
    label = Label{label_->name, {}, label_->classes};
    label->codes.reserve(rows.size());
    for (size_t r : rows) label->codes.push_back(label_->codes.at(r));
  }
  Provenance p = provenance_;
  if (!transform.empty()) p.transforms.push_back(transform);
  Table t(std::move(cols), std::move(label), std::move(p));
  t.n_rows_ = rows.size();
  return t;
}

Table Table::with_columns(std::vector<Column> columns,
                          const std::string& transform) const {
  Provenance p = provenance_;
  if (!transform.empty()) p.transforms.push_back(transform);
  return Table(std::move(columns), label_, std::move(p));
}

Table Table::with_warning(const std::string& warning) const {
  Table t = *this;
  t.provenance_.warnings.push_back(warning);
  return t;
}

Table Table::with_transform(const std::string& transform) const {
  Table t = *this;
  t.provenance_.transforms.push_back(transform);
  return t;
}

bool Table::same_data(const Table& other) const {
  if (n_rows_ != other.n_rows_ || columns_.size() != other.columns_.size()) {
    return false;
  }
  for (size_t j = 0; j < columns_.size(); ++j) {
    const Column& a = columns_[j];
    const Column& b = other.columns_[j];
    if (a.name != b.name || a.kind != b.kind || a.missing != b.missing) {
      return false;
    }
    for (size_t i = 0; i < n_rows_; ++i) {
      if (a.missing[i]) continue;
      if (a.is_numeric()) {
        if (a.values[i] != b.values[i]) return false;
      } else if (a.render(i) != b.render(i)) {
        return false;
      }
    }
  }
  if (label_.has_value() != other.label_.has_value()) return false;
  if (label_) {
    if (label_->name != other.label_->name) return false;
    for (size_t i = 0; i < n_rows_; ++i) {
      if (label_->classes[static_cast<size_t>(label_->codes[i])] !=
          other.label_->classes[static_cast<size_t>(other.label_->codes[i])]) {
        return false;
      }
    }
  }
  return true;
}

std::string Digest::hex() const {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx",
                static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

uint64_t row_fingerprint(const Table& t, size_t row) {
  Hasher h;
  char buf[40];
  for (const Column& c : t.columns()) {
    if (c.missing.at(row)) {
      h.bytes("\x01NA", 3);
    } else if (c.is_numeric()) {
      double v = c.values[row];
      if (v == 0.0) v = 0.0;
      int len = std::snprintf(buf, sizeof buf, "\x02%.12e", v);
      h.bytes(buf, static_cast<size_t>(len));
    } else {
      h.bytes("\x03", 1);
      h.str(c.categories[static_cast<size_t>(c.values[row])]);
    }
  }
  return h.first();
}

Digest table_fingerprint(const Table& t) {
  Hasher h;
  h.u64(t.n_rows());
  h.u64(t.n_cols());
  for (const Column& c : t.columns()) {
    h.str(c.name);
    h.u64(static_cast<uint64_t>(c.kind));
    for (size_t i = 0; i < c.size(); ++i) {
      if (c.missing[i]) {
        h.u64(0xfeedfacecafebeefULL);
      } else if (c.is_numeric()) {
        h.real(c.values[i]);
      } else {
        h.str(c.categories[static_cast<size_t>(c.values[i])]);
      }
    }
  }
  if (t.has_label()) {
    const Label& l = t.label();
    h.str(l.name);
    for (const std::string& cls : l.classes) h.str(cls);
    for (int32_t code : l.codes) h.u64(static_cast<uint64_t>(code));
  }
  return h.digest();
}

size_t duplicate_row_count(const Table& t) {
  std::unordered_set<uint64_t> seen;
  seen.reserve(t.n_rows());
  size_t dups = 0;
  for (size_t i = 0; i < t.n_rows(); ++i) {
    if (!seen.insert(row_fingerprint(t, i)).second) ++dups;
  }
  return dups;
}

}  // namespace priorclean
