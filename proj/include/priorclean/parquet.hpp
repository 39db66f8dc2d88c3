#ifndef PRIORCLEAN_PARQUET_HPP_
#define PRIORCLEAN_PARQUET_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "priorclean/io.hpp"
#include "priorclean/table.hpp"

namespace priorclean {

// Minimal Parquet support for flat tables.
//
// Reader: flat schemas, physical types BOOLEAN/INT32/INT64/FLOAT/DOUBLE/
// BYTE_ARRAY, PLAIN and dictionary encodings, data pages v1 and v2,
// UNCOMPRESSED and SNAPPY codecs. Writer: one row group, one PLAIN
// uncompressed v1 page per column; numeric columns as optional DOUBLE,
// categorical and label columns as UTF8 BYTE_ARRAY. The label column name is
// stored in the key/value metadata under "priorclean.label".
struct ParquetContents {
  std::vector<RawColumn> columns;
  std::optional<std::string> label_hint;
};

ParquetContents read_parquet_columns(const std::string& path);
void write_parquet(const Table& t, const std::string& path);

// Exposed for tests.
std::string snappy_decompress(const std::string& compressed);

}  // namespace priorclean

#endif  // PRIORCLEAN_PARQUET_HPP_
