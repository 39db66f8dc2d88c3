#include "priorclean/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "priorclean/error.hpp"
#include "priorclean/parquet.hpp"

namespace priorclean {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) {
    --e;
  }
  return s.substr(b, e - b);
}

std::optional<double> parse_number(const std::string& cell) {
  const std::string s = trim(cell);
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Sorted vocabulary; numeric-looking vocabularies sort by value.
std::vector<std::string> vocabulary(const RawColumn& col) {
  std::vector<std::string> vocab;
  for (const auto& cell : col.cells) {
    if (cell) vocab.push_back(*cell);
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  return vocab;
}

std::vector<std::string> label_vocabulary(const RawColumn& col) {
  std::vector<std::string> vocab = vocabulary(col);
  bool all_numeric = std::all_of(vocab.begin(), vocab.end(), [](auto& v) {
    return parse_number(v).has_value();
  });
  if (all_numeric) {
    std::stable_sort(vocab.begin(), vocab.end(), [](auto& a, auto& b) {
      return *parse_number(a) < *parse_number(b);
    });
  }
  return vocab;
}

std::vector<int32_t> encode(const RawColumn& col,
                            const std::vector<std::string>& vocab) {
  std::map<std::string, int32_t> index;
  for (size_t k = 0; k < vocab.size(); ++k) {
    index[vocab[k]] = static_cast<int32_t>(k);
  }
  std::vector<int32_t> codes(col.cells.size(), -1);
  for (size_t i = 0; i < col.cells.size(); ++i) {
    if (col.cells[i]) codes[i] = index.at(*col.cells[i]);
  }
  return codes;
}

std::optional<size_t> pick_label(const std::vector<RawColumn>& cols,
                                 const LoadOptions& options) {
  if (options.label_column) {
    for (size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].name == *options.label_column) return j;
    }
    throw SchemaError("label column '" + *options.label_column +
                      "' not found");
  }
  if (!options.detect_label) return std::nullopt;
  std::optional<size_t> found;
  for (size_t j = 0; j < cols.size(); ++j) {
    const std::string n = lower(cols[j].name);
    if (n == "class" || n == "target" || n == "label" || n == "y") {
      if (found) {
        throw SchemaError("more than one candidate label column ('" +
                          cols[*found].name + "', '" + cols[j].name +
                          "'); pass the label column explicitly");
      }
      found = j;
    }
  }
  return found;
}

}  // namespace

TableFormat format_from_path(const std::string& path) {
  const std::string ext = lower(std::filesystem::path(path).extension());
  if (ext == ".csv") return TableFormat::kCsv;
  if (ext == ".parquet" || ext == ".pq") return TableFormat::kParquet;
  throw InvalidArgument("cannot infer table format from '" + path +
                        "' (expected .csv or .parquet)");
}

bool is_missing_marker(const std::string& cell) {
  const std::string s = trim(cell);
  return s.empty() || s == "NA" || s == "NaN" || s == "?";
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) {
      records.push_back(std::move(record));
    }
    record.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field.push_back(c);
      }
      ++i;
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // CRLF handled by the following '\n'.
    } else {
      field.push_back(c);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw IoError("unterminated quoted CSV field");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::string csv_escape(const std::string& field) {
  bool needs = field.find_first_of(",\"\n\r") != std::string::npos ||
               (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Table build_table(std::vector<RawColumn> raw, const LoadOptions& options,
                  Provenance provenance) {
  if (raw.empty()) throw EmptyInputError("input has zero columns");
  const size_t n = raw.front().cells.size();
  for (const RawColumn& c : raw) {
    if (c.cells.size() != n) {
      throw SchemaError("ragged input: column '" + c.name + "' has " +
                        std::to_string(c.cells.size()) + " cells");
    }
  }
  if (n == 0) throw EmptyInputError("input has zero rows");

  std::optional<size_t> label_idx = pick_label(raw, options);
  std::vector<size_t> keep;
  keep.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (!label_idx || raw[*label_idx].cells[i]) keep.push_back(i);
  }
  if (keep.size() != n) {
    provenance.warnings.push_back(
        "dropped " + std::to_string(n - keep.size()) +
        " row(s) with a missing label in column '" + raw[*label_idx].name +
        "'");
    for (RawColumn& c : raw) {
      std::vector<std::optional<std::string>> cells;
      cells.reserve(keep.size());
      for (size_t i : keep) cells.push_back(std::move(c.cells[i]));
      c.cells = std::move(cells);
    }
  }
  if (keep.empty()) throw EmptyInputError("no labeled rows remain");
  if (raw.size() - (label_idx ? 1 : 0) == 0) {
    throw EmptyInputError("input has zero feature columns");
  }

  std::vector<Column> columns;
  std::optional<Label> label;
  for (size_t j = 0; j < raw.size(); ++j) {
    RawColumn& rc = raw[j];
    if (label_idx && j == *label_idx) {
      std::vector<std::string> vocab = label_vocabulary(rc);
      Label l{rc.name, encode(rc, vocab), vocab};
      label = std::move(l);
      continue;
    }
    ColumnKind kind;
    size_t observed = 0;
    size_t parsed = 0;
    for (const auto& cell : rc.cells) {
      if (!cell) continue;
      ++observed;
      if (parse_number(*cell)) ++parsed;
    }
    if (rc.kind) {
      kind = *rc.kind;
    } else {
      kind = (observed == 0 ||
              static_cast<double>(parsed) >=
                  kNumericThreshold * static_cast<double>(observed))
                 ? ColumnKind::kNumeric
                 : ColumnKind::kCategorical;
      if (kind == ColumnKind::kCategorical && parsed > 0) {
        provenance.warnings.push_back(
            "column '" + rc.name + "' is mixed-type (" +
            std::to_string(parsed) + "/" + std::to_string(observed) +
            " numeric); typed as categorical");
      }
    }
    if (kind == ColumnKind::kNumeric) {
      std::vector<double> values(rc.cells.size(), 0.0);
      std::vector<uint8_t> missing(rc.cells.size(), 0);
      size_t coerced = 0;
      for (size_t i = 0; i < rc.cells.size(); ++i) {
        std::optional<double> v;
        if (rc.cells[i]) {
          v = parse_number(*rc.cells[i]);
          if (!v) ++coerced;
        }
        if (v) {
          values[i] = *v;
        } else {
          missing[i] = 1;
        }
      }
      if (coerced > 0) {
        provenance.warnings.push_back(
            "column '" + rc.name + "': " + std::to_string(coerced) +
            " non-numeric token(s) treated as missing");
      }
      columns.push_back(
          Column::numeric(rc.name, std::move(values), std::move(missing)));
    } else {
      std::vector<std::string> vocab = vocabulary(rc);
      std::vector<int32_t> codes = encode(rc, vocab);
      columns.push_back(
          Column::categorical(rc.name, std::move(codes), std::move(vocab)));
    }
  }
  return Table(std::move(columns), std::move(label), std::move(provenance));
}

Table load_table(const std::string& path, TableFormat format,
                 const LoadOptions& options) {
  Provenance prov;
  prov.source = path;
  prov.artifact =
      ArtifactName::parse(std::filesystem::path(path).stem().string());
  if (format == TableFormat::kParquet) {
    ParquetContents contents = read_parquet_columns(path);
    LoadOptions opts = options;
    if (!opts.label_column && opts.detect_label && contents.label_hint) {
      opts.label_column = contents.label_hint;
    }
    return build_table(std::move(contents.columns), opts, std::move(prov));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading '" + path + "'");
  std::vector<std::vector<std::string>> records = parse_csv(ss.str());
  if (records.empty()) throw EmptyInputError("'" + path + "' is empty");
  const std::vector<std::string>& header = records.front();
  std::vector<RawColumn> raw(header.size());
  for (size_t j = 0; j < header.size(); ++j) {
    raw[j].name = trim(header[j]);
    raw[j].cells.reserve(records.size() - 1);
  }
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size()) {
      throw IoError("'" + path + "' line " + std::to_string(r + 1) + " has " +
                    std::to_string(rec.size()) + " fields, header has " +
                    std::to_string(header.size()));
    }
    for (size_t j = 0; j < rec.size(); ++j) {
      if (is_missing_marker(rec[j])) {
        raw[j].cells.emplace_back(std::nullopt);
      } else {
        raw[j].cells.emplace_back(rec[j]);
      }
    }
  }
  return build_table(std::move(raw), options, std::move(prov));
}

Table load_table(const std::string& path, const LoadOptions& options) {
  return load_table(path, format_from_path(path), options);
}

void save_table(const Table& t, const std::string& path, TableFormat format) {
  if (format == TableFormat::kParquet) {
    write_parquet(t, path);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  const auto& cols = t.columns();
  for (size_t j = 0; j < cols.size(); ++j) {
    if (j) out << ',';
    out << csv_escape(cols[j].name);
  }
  if (t.has_label()) out << (cols.empty() ? "" : ",") << csv_escape(t.label().name);
  out << '\n';
  for (size_t i = 0; i < t.n_rows(); ++i) {
    for (size_t j = 0; j < cols.size(); ++j) {
      if (j) out << ',';
      out << csv_escape(cols[j].render(i));
    }
    if (t.has_label()) {
      const Label& l = t.label();
      out << (cols.empty() ? "" : ",")
          << csv_escape(l.classes[static_cast<size_t>(l.codes[i])]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

void save_table(const Table& t, const std::string& path) {
  save_table(t, path, format_from_path(path));
}

}  // namespace priorclean
