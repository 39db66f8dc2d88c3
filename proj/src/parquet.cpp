#include "priorclean/parquet.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <variant>

#include "priorclean/error.hpp"

namespace priorclean {

namespace {

constexpr char kMagic[] = "PAR1";
const char kLabelKey[] = "priorclean.label";

// Parquet enums used here.
enum PhysicalType : int32_t {
  kBoolean = 0,
  kInt32 = 1,
  kInt64 = 2,
  kInt96 = 3,
  kFloat = 4,
  kDouble = 5,
  kByteArray = 6,
  kFixedLenByteArray = 7,
};
enum Encoding : int32_t {
  kPlain = 0,
  kPlainDictionary = 2,
  kRle = 3,
  kRleDictionary = 8,
};
enum PageType : int32_t {
  kDataPage = 0,
  kDictionaryPage = 2,
  kDataPageV2 = 3,
};
enum Codec : int32_t { kUncompressed = 0, kSnappy = 1 };

// ---------------------------------------------------------------------------
// Thrift compact protocol.

enum CType : uint8_t {
  kStop = 0,
  kTrue = 1,
  kFalse = 2,
  kByte = 3,
  kI16 = 4,
  kI32 = 5,
  kI64 = 6,
  kDoubleT = 7,
  kBinary = 8,
  kList = 9,
  kSet = 10,
  kMap = 11,
  kStruct = 12,
};

struct TValue;
using TStruct = std::map<int16_t, TValue>;
using TList = std::vector<TValue>;

struct TValue {
  std::variant<int64_t, double, bool, std::string, std::shared_ptr<TList>,
               std::shared_ptr<TStruct>>
      v;

  int64_t as_int() const {
    if (auto* p = std::get_if<int64_t>(&v)) return *p;
    if (auto* b = std::get_if<bool>(&v)) return *b ? 1 : 0;
    throw IoError("parquet metadata: expected integer");
  }
  const std::string& as_string() const {
    if (auto* p = std::get_if<std::string>(&v)) return *p;
    throw IoError("parquet metadata: expected binary");
  }
  const TList& as_list() const {
    if (auto* p = std::get_if<std::shared_ptr<TList>>(&v)) return **p;
    throw IoError("parquet metadata: expected list");
  }
  const TStruct& as_struct() const {
    if (auto* p = std::get_if<std::shared_ptr<TStruct>>(&v)) return **p;
    throw IoError("parquet metadata: expected struct");
  }
};

const TValue* field(const TStruct& s, int16_t id) {
  auto it = s.find(id);
  return it == s.end() ? nullptr : &it->second;
}

const TValue& required(const TStruct& s, int16_t id, const char* what) {
  const TValue* f = field(s, id);
  if (!f) throw IoError(std::string("parquet metadata: missing ") + what);
  return *f;
}

class CompactReader {
 public:
  CompactReader(const uint8_t* data, size_t size) : p_(data), end_(data + size) {}

  size_t consumed(const uint8_t* start) const {
    return static_cast<size_t>(p_ - start);
  }

  TStruct read_struct() {
    TStruct out;
    int16_t last = 0;
    while (true) {
      uint8_t header = byte();
      if (header == kStop) break;
      uint8_t type = header & 0x0f;
      int16_t delta = static_cast<int16_t>(header >> 4);
      int16_t id = delta ? static_cast<int16_t>(last + delta)
                         : static_cast<int16_t>(zigzag(varint()));
      last = id;
      if (type == kTrue || type == kFalse) {
        out[id] = TValue{type == kTrue};
      } else {
        out[id] = read_value(type);
      }
    }
    return out;
  }

 private:
  uint8_t byte() {
    if (p_ >= end_) throw IoError("parquet metadata truncated");
    return *p_++;
  }
  uint64_t varint() {
    uint64_t result = 0;
    int shift = 0;
    while (true) {
      uint8_t b = byte();
      result |= static_cast<uint64_t>(b & 0x7f) << shift;
      if (!(b & 0x80)) break;
      shift += 7;
      if (shift > 63) throw IoError("parquet metadata: bad varint");
    }
    return result;
  }
  static int64_t zigzag(uint64_t n) {
    return static_cast<int64_t>(n >> 1) ^ -static_cast<int64_t>(n & 1);
  }

  TValue read_value(uint8_t type) {
    switch (type) {
      case kTrue:
      case kFalse:
        return TValue{byte() == kTrue};
      case kByte:
        return TValue{static_cast<int64_t>(static_cast<int8_t>(byte()))};
      case kI16:
      case kI32:
      case kI64:
        return TValue{zigzag(varint())};
      case kDoubleT: {
        if (end_ - p_ < 8) throw IoError("parquet metadata truncated");
        double d;
        std::memcpy(&d, p_, 8);
        p_ += 8;
        return TValue{d};
      }
      case kBinary: {
        uint64_t len = varint();
        if (static_cast<uint64_t>(end_ - p_) < len) {
          throw IoError("parquet metadata truncated");
        }
        std::string s(reinterpret_cast<const char*>(p_), len);
        p_ += len;
        return TValue{std::move(s)};
      }
      case kList:
      case kSet: {
        uint8_t h = byte();
        uint64_t size = h >> 4;
        uint8_t elem = h & 0x0f;
        if (size == 15) size = varint();
        auto list = std::make_shared<TList>();
        list->reserve(size);
        for (uint64_t i = 0; i < size; ++i) list->push_back(read_value(elem));
        return TValue{list};
      }
      case kMap: {
        uint64_t size = varint();
        if (size > 0) {
          uint8_t kv = byte();
          for (uint64_t i = 0; i < size; ++i) {
            read_value(kv >> 4);
            read_value(kv & 0x0f);
          }
        }
        return TValue{int64_t{0}};
      }
      case kStruct:
        return TValue{std::make_shared<TStruct>(read_struct())};
      default:
        throw IoError("parquet metadata: unknown thrift type " +
                      std::to_string(type));
    }
  }

  const uint8_t* p_;
  const uint8_t* end_;
};

class CompactWriter {
 public:
  void begin_struct() { last_.push_back(0); }
  void end_struct() {
    out_.push_back(kStop);
    last_.pop_back();
  }
  void field_header(int16_t id, uint8_t type) {
    int16_t delta = static_cast<int16_t>(id - last_.back());
    if (delta > 0 && delta <= 15) {
      out_.push_back(static_cast<char>((delta << 4) | type));
    } else {
      out_.push_back(static_cast<char>(type));
      varint(zigzag(id));
    }
    last_.back() = id;
  }
  void i32(int16_t id, int64_t v) {
    field_header(id, kI32);
    varint(zigzag(v));
  }
  void i64(int16_t id, int64_t v) {
    field_header(id, kI64);
    varint(zigzag(v));
  }
  void binary(int16_t id, const std::string& s) {
    field_header(id, kBinary);
    raw_binary(s);
  }
  void raw_binary(const std::string& s) {
    varint(s.size());
    out_ += s;
  }
  void struct_field(int16_t id) {
    field_header(id, kStruct);
    begin_struct();
  }
  void list_header(int16_t id, uint8_t elem_type, size_t size) {
    field_header(id, kList);
    if (size < 15) {
      out_.push_back(static_cast<char>((size << 4) | elem_type));
    } else {
      out_.push_back(static_cast<char>(0xf0 | elem_type));
      varint(size);
    }
  }
  void list_i32(int64_t v) { varint(zigzag(v)); }
  const std::string& bytes() const { return out_; }

 private:
  static uint64_t zigzag(int64_t n) {
    return (static_cast<uint64_t>(n) << 1) ^ static_cast<uint64_t>(n >> 63);
  }
  void varint(uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<char>((v & 0x7f) | 0x80));
      v >>= 7;
    }
    out_.push_back(static_cast<char>(v));
  }

  std::string out_;
  std::vector<int16_t> last_{0};
};

// ---------------------------------------------------------------------------
// Page decoding helpers.

class ByteCursor {
 public:
  ByteCursor(const uint8_t* p, size_t n) : p_(p), end_(p + n) {}
  size_t remaining() const { return static_cast<size_t>(end_ - p_); }
  const uint8_t* pos() const { return p_; }
  void skip(size_t n) {
    need(n);
    p_ += n;
  }
  uint8_t byte() {
    need(1);
    return *p_++;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = static_cast<uint32_t>(p_[0]) | (static_cast<uint32_t>(p_[1]) << 8) |
                 (static_cast<uint32_t>(p_[2]) << 16) |
                 (static_cast<uint32_t>(p_[3]) << 24);
    p_ += 4;
    return v;
  }
  uint64_t u64() {
    uint64_t lo = u32();
    uint64_t hi = u32();
    return lo | (hi << 32);
  }
  uint64_t varint() {
    uint64_t result = 0;
    int shift = 0;
    while (true) {
      uint8_t b = byte();
      result |= static_cast<uint64_t>(b & 0x7f) << shift;
      if (!(b & 0x80)) return result;
      shift += 7;
      if (shift > 63) throw IoError("parquet: bad varint");
    }
  }

 private:
  void need(size_t n) const {
    if (remaining() < n) throw IoError("parquet page truncated");
  }
  const uint8_t* p_;
  const uint8_t* end_;
};

// RLE / bit-packed hybrid decoding of `count` values.
std::vector<uint32_t> decode_hybrid(ByteCursor& c, int bit_width,
                                    size_t count) {
  std::vector<uint32_t> out;
  out.reserve(count);
  const size_t value_bytes = static_cast<size_t>((bit_width + 7) / 8);
  while (out.size() < count) {
    uint64_t header = c.varint();
    if (header & 1) {
      size_t groups = static_cast<size_t>(header >> 1);
      size_t nbytes = groups * static_cast<size_t>(bit_width);
      const uint8_t* data = c.pos();
      c.skip(nbytes);
      size_t nvals = groups * 8;
      for (size_t k = 0; k < nvals && out.size() < count; ++k) {
        uint32_t v = 0;
        for (int b = 0; b < bit_width; ++b) {
          size_t bit = k * static_cast<size_t>(bit_width) + static_cast<size_t>(b);
          if (data[bit / 8] & (1u << (bit % 8))) v |= 1u << b;
        }
        out.push_back(v);
      }
    } else {
      size_t run = static_cast<size_t>(header >> 1);
      uint32_t v = 0;
      for (size_t b = 0; b < value_bytes; ++b) {
        v |= static_cast<uint32_t>(c.byte()) << (8 * b);
      }
      for (size_t k = 0; k < run && out.size() < count; ++k) out.push_back(v);
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_float(float v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return buf;
}

// PLAIN-decoded values rendered as strings (NaN -> nullopt).
std::vector<std::optional<std::string>> decode_plain(ByteCursor& c,
                                                     int32_t type,
                                                     size_t count) {
  std::vector<std::optional<std::string>> out;
  out.reserve(count);
  if (type == kBoolean) {
    const uint8_t* data = c.pos();
    c.skip((count + 7) / 8);
    for (size_t k = 0; k < count; ++k) {
      out.emplace_back((data[k / 8] >> (k % 8)) & 1 ? "true" : "false");
    }
    return out;
  }
  for (size_t k = 0; k < count; ++k) {
    switch (type) {
      case kInt32:
        out.emplace_back(std::to_string(static_cast<int32_t>(c.u32())));
        break;
      case kInt64:
        out.emplace_back(std::to_string(static_cast<int64_t>(c.u64())));
        break;
      case kFloat: {
        uint32_t bits = c.u32();
        float f;
        std::memcpy(&f, &bits, 4);
        if (std::isnan(f)) {
          out.emplace_back(std::nullopt);
        } else {
          out.emplace_back(format_float(f));
        }
        break;
      }
      case kDouble: {
        uint64_t bits = c.u64();
        double d;
        std::memcpy(&d, &bits, 8);
        if (std::isnan(d)) {
          out.emplace_back(std::nullopt);
        } else {
          out.emplace_back(format_double(d));
        }
        break;
      }
      case kByteArray: {
        uint32_t len = c.u32();
        const uint8_t* data = c.pos();
        c.skip(len);
        out.emplace_back(std::string(reinterpret_cast<const char*>(data), len));
        break;
      }
      default:
        throw IoError("parquet: unsupported physical type " +
                      std::to_string(type));
    }
  }
  return out;
}

std::string decompress(int32_t codec, const std::string& data) {
  if (codec == kUncompressed) return data;
  if (codec == kSnappy) return snappy_decompress(data);
  throw IoError("parquet: unsupported compression codec " +
                std::to_string(codec));
}

struct SchemaColumn {
  std::string name;
  int32_t type = 0;
  bool optional = false;
};

RawColumn read_column_chunk(const std::string& file, const TStruct& chunk,
                            const SchemaColumn& schema, size_t num_rows) {
  const TStruct& meta = required(chunk, 3, "column meta_data").as_struct();
  const int32_t codec = static_cast<int32_t>(required(meta, 4, "codec").as_int());
  const int64_t num_values = required(meta, 5, "num_values").as_int();
  int64_t offset = required(meta, 9, "data_page_offset").as_int();
  if (const TValue* dict = field(meta, 11)) {
    offset = std::min(offset, dict->as_int());
  }
  const int64_t total = required(meta, 7, "total_compressed_size").as_int();
  if (offset < 0 || total < 0 ||
      static_cast<uint64_t>(offset + total) > file.size()) {
    throw IoError("parquet: column chunk out of file bounds");
  }
  const auto* base = reinterpret_cast<const uint8_t*>(file.data());
  const uint8_t* p = base + offset;
  const uint8_t* end = p + total;

  RawColumn col;
  col.name = schema.name;
  col.cells.reserve(num_rows);
  std::vector<std::optional<std::string>> dictionary;
  int64_t seen = 0;
  while (seen < num_values && p < end) {
    CompactReader reader(p, static_cast<size_t>(end - p));
    TStruct header = reader.read_struct();
    p += reader.consumed(p);
    const int32_t page_type =
        static_cast<int32_t>(required(header, 1, "page type").as_int());
    const int32_t uncompressed =
        static_cast<int32_t>(required(header, 2, "page size").as_int());
    const int32_t compressed =
        static_cast<int32_t>(required(header, 3, "compressed size").as_int());
    if (compressed < 0 || p + compressed > end) {
      throw IoError("parquet: page out of bounds");
    }
    std::string body(reinterpret_cast<const char*>(p),
                     static_cast<size_t>(compressed));
    p += compressed;

    if (page_type == kDictionaryPage) {
      const TStruct& dh =
          required(header, 7, "dictionary page header").as_struct();
      size_t n = static_cast<size_t>(required(dh, 1, "num_values").as_int());
      std::string plain = decompress(codec, body);
      ByteCursor c(reinterpret_cast<const uint8_t*>(plain.data()), plain.size());
      dictionary = decode_plain(c, schema.type, n);
      continue;
    }
    if (page_type != kDataPage && page_type != kDataPageV2) continue;

    std::string page;
    size_t n = 0;
    int32_t encoding = 0;
    std::vector<uint32_t> def_levels;
    size_t values_offset = 0;
    if (page_type == kDataPage) {
      const TStruct& dh = required(header, 5, "data page header").as_struct();
      n = static_cast<size_t>(required(dh, 1, "num_values").as_int());
      encoding = static_cast<int32_t>(required(dh, 2, "encoding").as_int());
      page = decompress(codec, body);
      ByteCursor c(reinterpret_cast<const uint8_t*>(page.data()), page.size());
      if (schema.optional) {
        uint32_t len = c.u32();
        ByteCursor levels(c.pos(), len);
        def_levels = decode_hybrid(levels, 1, n);
        c.skip(len);
      }
      values_offset = page.size() - c.remaining();
    } else {
      const TStruct& dh = required(header, 8, "data page v2 header").as_struct();
      n = static_cast<size_t>(required(dh, 1, "num_values").as_int());
      encoding = static_cast<int32_t>(required(dh, 4, "encoding").as_int());
      const size_t def_len =
          static_cast<size_t>(required(dh, 5, "def levels length").as_int());
      const size_t rep_len =
          static_cast<size_t>(required(dh, 6, "rep levels length").as_int());
      bool is_compressed = true;
      if (const TValue* f = field(dh, 7)) is_compressed = f->as_int() != 0;
      if (def_len + rep_len > body.size()) {
        throw IoError("parquet: bad v2 level lengths");
      }
      if (schema.optional) {
        ByteCursor levels(
            reinterpret_cast<const uint8_t*>(body.data()) + rep_len, def_len);
        def_levels = decode_hybrid(levels, 1, n);
      }
      std::string values = body.substr(rep_len + def_len);
      page = is_compressed ? decompress(codec, values) : values;
      (void)uncompressed;
    }

    size_t present = n;
    if (schema.optional) {
      present = 0;
      for (uint32_t d : def_levels) present += d;
    }
    ByteCursor vc(reinterpret_cast<const uint8_t*>(page.data()) + values_offset,
                  page.size() - values_offset);
    std::vector<std::optional<std::string>> values;
    if (encoding == kPlain) {
      values = decode_plain(vc, schema.type, present);
    } else if (encoding == kPlainDictionary || encoding == kRleDictionary) {
      int bit_width = vc.byte();
      std::vector<uint32_t> idx = decode_hybrid(vc, bit_width, present);
      values.reserve(present);
      for (uint32_t k : idx) {
        if (k >= dictionary.size()) throw IoError("parquet: bad dictionary index");
        values.push_back(dictionary[k]);
      }
    } else {
      throw IoError("parquet: unsupported encoding " + std::to_string(encoding) +
                    " in column '" + schema.name + "'");
    }
    size_t next = 0;
    for (size_t k = 0; k < n; ++k) {
      if (schema.optional && def_levels[k] == 0) {
        col.cells.emplace_back(std::nullopt);
      } else {
        col.cells.push_back(values.at(next++));
      }
    }
    seen += static_cast<int64_t>(n);
  }
  return col;
}

std::string encode_levels(const std::vector<uint8_t>& present) {
  const size_t groups = (present.size() + 7) / 8;
  std::string out;
  uint64_t header = (groups << 1) | 1;
  while (header >= 0x80) {
    out.push_back(static_cast<char>((header & 0x7f) | 0x80));
    header >>= 7;
  }
  out.push_back(static_cast<char>(header));
  std::string bits(groups, '\0');
  for (size_t k = 0; k < present.size(); ++k) {
    if (present[k]) bits[k / 8] = static_cast<char>(bits[k / 8] | (1 << (k % 8)));
  }
  return out + bits;
}

void put_u32(std::string& out, uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

struct OutColumn {
  std::string name;
  bool is_double = false;
  bool optional = true;
  std::vector<uint8_t> present;
  std::vector<double> doubles;
  std::vector<std::string> strings;
};

}  // namespace

std::string snappy_decompress(const std::string& compressed) {
  ByteCursor c(reinterpret_cast<const uint8_t*>(compressed.data()),
               compressed.size());
  const uint64_t length = c.varint();
  std::string out;
  out.reserve(length);
  while (c.remaining() > 0) {
    uint8_t tag = c.byte();
    size_t len = 0;
    size_t offset = 0;
    switch (tag & 3) {
      case 0: {
        len = tag >> 2;
        if (len >= 60) {
          size_t nbytes = len - 59;
          len = 0;
          for (size_t b = 0; b < nbytes; ++b) len |= static_cast<size_t>(c.byte()) << (8 * b);
        }
        len += 1;
        const uint8_t* data = c.pos();
        c.skip(len);
        out.append(reinterpret_cast<const char*>(data), len);
        continue;
      }
      case 1:
        len = ((tag >> 2) & 7) + 4;
        offset = (static_cast<size_t>(tag >> 5) << 8) | c.byte();
        break;
      case 2:
        len = (tag >> 2) + 1;
        offset = c.byte();
        offset |= static_cast<size_t>(c.byte()) << 8;
        break;
      default:
        len = (tag >> 2) + 1;
        offset = c.u32();
        break;
    }
    if (offset == 0 || offset > out.size()) throw IoError("snappy: bad copy offset");
    size_t from = out.size() - offset;
    for (size_t k = 0; k < len; ++k) out.push_back(out[from + k]);
  }
  if (out.size() != length) throw IoError("snappy: length mismatch");
  return out;
}

ParquetContents read_parquet_columns(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string file = ss.str();
  if (file.size() < 12 || file.compare(0, 4, kMagic) != 0 ||
      file.compare(file.size() - 4, 4, kMagic) != 0) {
    throw IoError("'" + path + "' is not a parquet file");
  }
  const auto* base = reinterpret_cast<const uint8_t*>(file.data());
  ByteCursor len_cursor(base + file.size() - 8, 4);
  const uint32_t meta_len = len_cursor.u32();
  if (meta_len > file.size() - 12) throw IoError("parquet footer corrupt");
  CompactReader reader(base + file.size() - 8 - meta_len, meta_len);
  TStruct meta = reader.read_struct();

  const TList& schema = required(meta, 2, "schema").as_list();
  const size_t num_rows =
      static_cast<size_t>(required(meta, 3, "num_rows").as_int());
  if (schema.empty()) throw IoError("parquet: empty schema");
  std::vector<SchemaColumn> cols;
  for (size_t k = 1; k < schema.size(); ++k) {
    const TStruct& el = schema[k].as_struct();
    if (const TValue* children = field(el, 5); children && children->as_int() > 0) {
      throw IoError("parquet: nested schemas are not supported");
    }
    SchemaColumn sc;
    sc.name = required(el, 4, "column name").as_string();
    sc.type = static_cast<int32_t>(required(el, 1, "column type").as_int());
    if (const TValue* rep = field(el, 3)) {
      if (rep->as_int() == 2) throw IoError("parquet: repeated columns are not supported");
      sc.optional = rep->as_int() == 1;
    }
    cols.push_back(sc);
  }

  ParquetContents contents;
  contents.columns.resize(cols.size());
  for (size_t j = 0; j < cols.size(); ++j) {
    contents.columns[j].name = cols[j].name;
    contents.columns[j].kind = cols[j].type == kByteArray || cols[j].type == kBoolean
                                   ? ColumnKind::kCategorical
                                   : ColumnKind::kNumeric;
  }
  if (const TValue* groups = field(meta, 4)) {
    for (const TValue& g : groups->as_list()) {
      const TStruct& group = g.as_struct();
      const size_t rows =
          static_cast<size_t>(required(group, 3, "row group rows").as_int());
      const TList& chunks = required(group, 1, "row group columns").as_list();
      if (chunks.size() != cols.size()) throw IoError("parquet: column count mismatch");
      for (size_t j = 0; j < cols.size(); ++j) {
        RawColumn part = read_column_chunk(file, chunks[j].as_struct(), cols[j], rows);
        auto& dst = contents.columns[j].cells;
        for (auto& cell : part.cells) dst.push_back(std::move(cell));
      }
    }
  }
  for (const RawColumn& c : contents.columns) {
    if (c.cells.size() != num_rows) throw IoError("parquet: row count mismatch");
  }
  if (const TValue* kv = field(meta, 5)) {
    for (const TValue& entry : kv->as_list()) {
      const TStruct& e = entry.as_struct();
      const TValue* key = field(e, 1);
      const TValue* value = field(e, 2);
      if (key && value && key->as_string() == kLabelKey) {
        contents.label_hint = value->as_string();
      }
    }
  }
  // pandas may persist its index as an extra column.
  std::erase_if(contents.columns, [](const RawColumn& c) {
    return c.name == "__index_level_0__";
  });
  return contents;
}

void write_parquet(const Table& t, const std::string& path) {
  std::vector<OutColumn> out_cols;
  for (const Column& c : t.columns()) {
    OutColumn oc;
    oc.name = c.name;
    oc.is_double = c.is_numeric();
    oc.present.resize(c.size());
    for (size_t i = 0; i < c.size(); ++i) {
      oc.present[i] = c.missing[i] ? 0 : 1;
      if (c.missing[i]) continue;
      if (oc.is_double) {
        oc.doubles.push_back(c.values[i]);
      } else {
        oc.strings.push_back(c.render(i));
      }
    }
    out_cols.push_back(std::move(oc));
  }
  if (t.has_label()) {
    const Label& l = t.label();
    OutColumn oc;
    oc.name = l.name;
    oc.optional = false;
    oc.present.assign(t.n_rows(), 1);
    for (int32_t code : l.codes) oc.strings.push_back(l.classes[static_cast<size_t>(code)]);
    out_cols.push_back(std::move(oc));
  }

  std::string file(kMagic, 4);
  struct ChunkInfo {
    int64_t offset;
    int64_t size;
  };
  std::vector<ChunkInfo> chunks;
  for (const OutColumn& oc : out_cols) {
    std::string page;
    if (oc.optional) {
      std::string levels = encode_levels(oc.present);
      put_u32(page, static_cast<uint32_t>(levels.size()));
      page += levels;
    }
    if (oc.is_double) {
      for (double d : oc.doubles) {
        uint64_t bits;
        std::memcpy(&bits, &d, 8);
        put_u64(page, bits);
      }
    } else {
      for (const std::string& s : oc.strings) {
        put_u32(page, static_cast<uint32_t>(s.size()));
        page += s;
      }
    }
    CompactWriter header;
    header.begin_struct();
    header.i32(1, kDataPage);
    header.i32(2, static_cast<int64_t>(page.size()));
    header.i32(3, static_cast<int64_t>(page.size()));
    header.struct_field(5);
    header.i32(1, static_cast<int64_t>(oc.present.size()));
    header.i32(2, kPlain);
    header.i32(3, kRle);
    header.i32(4, kRle);
    header.end_struct();
    header.end_struct();
    const int64_t offset = static_cast<int64_t>(file.size());
    file += header.bytes();
    file += page;
    chunks.push_back({offset, static_cast<int64_t>(file.size()) - offset});
  }

  CompactWriter meta;
  meta.begin_struct();
  meta.i32(1, 1);
  meta.list_header(2, kStruct, out_cols.size() + 1);
  meta.begin_struct();
  meta.binary(4, "schema");
  meta.i32(5, static_cast<int64_t>(out_cols.size()));
  meta.end_struct();
  for (const OutColumn& oc : out_cols) {
    meta.begin_struct();
    meta.i32(1, oc.is_double ? kDouble : kByteArray);
    meta.i32(3, oc.optional ? 1 : 0);
    meta.binary(4, oc.name);
    if (!oc.is_double) meta.i32(6, 0);  // UTF8
    meta.end_struct();
  }
  meta.i64(3, static_cast<int64_t>(t.n_rows()));
  meta.list_header(4, kStruct, 1);
  meta.begin_struct();
  meta.list_header(1, kStruct, out_cols.size());
  int64_t total = 0;
  for (size_t j = 0; j < out_cols.size(); ++j) {
    const OutColumn& oc = out_cols[j];
    meta.begin_struct();
    meta.i64(2, chunks[j].offset);
    meta.struct_field(3);
    meta.i32(1, oc.is_double ? kDouble : kByteArray);
    meta.list_header(2, kI32, 2);
    meta.list_i32(kPlain);
    meta.list_i32(kRle);
    meta.list_header(3, kBinary, 1);
    meta.raw_binary(oc.name);
    meta.i32(4, kUncompressed);
    meta.i64(5, static_cast<int64_t>(oc.present.size()));
    meta.i64(6, chunks[j].size);
    meta.i64(7, chunks[j].size);
    meta.i64(9, chunks[j].offset);
    meta.end_struct();
    meta.end_struct();
    total += chunks[j].size;
  }
  meta.i64(2, total);
  meta.i64(3, static_cast<int64_t>(t.n_rows()));
  meta.end_struct();
  if (t.has_label()) {
    meta.list_header(5, kStruct, 1);
    meta.begin_struct();
    meta.binary(1, kLabelKey);
    meta.binary(2, t.label().name);
    meta.end_struct();
  }
  meta.binary(6, "priorclean");
  meta.end_struct();

  file += meta.bytes();
  put_u32(file, static_cast<uint32_t>(meta.bytes().size()));
  file.append(kMagic, 4);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace priorclean
