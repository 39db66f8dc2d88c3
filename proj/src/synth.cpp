#include "priorclean/synth.hpp"

#include <string>
#include <vector>

#include "priorclean/error.hpp"
#include "priorclean/rng.hpp"

namespace priorclean {

Table make_blobs(const BlobSpec& spec) {
  if (spec.rows == 0 || spec.numeric + spec.categorical == 0) {
    throw InvalidArgument("synthetic table needs rows and columns");
  }
  if (spec.classes < 2) throw InvalidArgument("synthetic table needs at least 2 classes");
  Rng rng(derive_seed(spec.seed, "blobs"));
  std::vector<int32_t> y(spec.rows);
  for (size_t i = 0; i < spec.rows; ++i) y[i] = static_cast<int32_t>(i % spec.classes);
  std::vector<Column> cols;
  for (size_t j = 0; j < spec.numeric; ++j) {
    std::vector<double> v(spec.rows);
    const double sign = j % 2 == 0 ? 1.0 : -1.0;
    for (size_t i = 0; i < spec.rows; ++i) {
      v[i] = sign * spec.separation * static_cast<double>(y[i]) + rng.normal();
    }
    cols.push_back(Column::numeric("x" + std::to_string(j), std::move(v)));
  }
  for (size_t j = 0; j < spec.categorical; ++j) {
    std::vector<int32_t> codes(spec.rows);
    for (size_t i = 0; i < spec.rows; ++i) {
      codes[i] = rng.uniform() < 0.7 ? y[i] % 3 : static_cast<int32_t>(rng.uniform_index(3));
    }
    cols.push_back(Column::categorical("cat" + std::to_string(j), std::move(codes), {"a", "b", "c"}));
  }
  Label label;
  label.name = "class";
  label.codes = std::move(y);
  for (size_t k = 0; k < spec.classes; ++k) label.classes.push_back("c" + std::to_string(k));
  Provenance p;
  p.source = "synthetic";
  return Table(std::move(cols), std::move(label), std::move(p));
}

}  // namespace priorclean
