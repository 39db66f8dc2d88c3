#include "priorclean/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "priorclean/error.hpp"
#include "priorclean/rng.hpp"

namespace priorclean {

std::vector<size_t> stratified_test_counts(const std::vector<size_t>& class_counts,
                                           double fraction) {
  std::vector<size_t> test(class_counts.size(), 0);
  size_t total = 0;
  for (size_t k = 0; k < class_counts.size(); ++k) {
    if (class_counts[k] < 2) continue;
    size_t n = static_cast<size_t>(
        std::llround(fraction * static_cast<double>(class_counts[k])));
    test[k] = std::min(n, class_counts[k] - 1);
    total += test[k];
  }
  if (total == 0) {
    auto it = std::max_element(class_counts.begin(), class_counts.end());
    if (it != class_counts.end() && *it >= 2) {
      test[static_cast<size_t>(it - class_counts.begin())] = 1;
    }
  }
  return test;
}

SplitPair stratified_split(const Table& t, double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw InvalidArgument("split fraction must lie in (0, 1)");
  }
  const std::vector<size_t> counts = t.class_counts();
  if (counts.empty()) throw SchemaError("stratified split needs a label column");
  const std::vector<size_t> test_counts = stratified_test_counts(counts, fraction);
  std::vector<std::vector<size_t>> by_class = t.rows_by_class();
  std::vector<uint8_t> in_test(t.n_rows(), 0);
  std::vector<std::string> warnings;
  Rng rng(derive_seed(seed, "stratified_split"));
  for (size_t k = 0; k < by_class.size(); ++k) {
    if (counts[k] == 1) {
      warnings.push_back("class '" + t.label().classes[k] +
                         "' has a single row; kept in train");
    }
    std::vector<size_t> pick =
        rng.sample_without_replacement(by_class[k].size(), test_counts[k]);
    for (size_t p : pick) in_test[by_class[k][p]] = 1;
  }
  std::vector<size_t> train_rows;
  std::vector<size_t> test_rows;
  for (size_t i = 0; i < t.n_rows(); ++i) {
    (in_test[i] ? test_rows : train_rows).push_back(i);
  }
  const std::string tag = "split(fraction=" + std::to_string(fraction) +
                          ",seed=" + std::to_string(seed) + ")";
  Table train = t.select_rows(train_rows, tag + ":train");
  Table test = t.select_rows(test_rows, tag + ":test");
  for (const std::string& w : warnings) {
    train = train.with_warning(w);
  }
  return SplitPair{std::move(train), std::move(test), seed, fraction};
}

std::vector<size_t> proportional_allocation(const std::vector<size_t>& sizes,
                                            size_t total) {
  const size_t n = std::accumulate(sizes.begin(), sizes.end(), size_t{0});
  std::vector<size_t> alloc(sizes.size(), 0);
  if (n == 0 || total == 0) return alloc;
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t k = 0; k < sizes.size(); ++k) {
    // Exact integer arithmetic for the floor and remainder.
    const unsigned long long num =
        static_cast<unsigned long long>(total) * sizes[k];
    alloc[k] = static_cast<size_t>(num / n);
    assigned += alloc[k];
    remainders.emplace_back(static_cast<double>(num % n), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t r = 0; assigned < total && r < remainders.size(); ++r) {
    size_t k = remainders[r].second;
    if (alloc[k] < sizes[k]) {
      ++alloc[k];
      ++assigned;
    }
  }
  return alloc;
}

Table subsample_stratified(const Table& t, size_t max_rows, uint64_t seed) {
  if (t.n_rows() <= max_rows) return t;
  std::vector<size_t> selected;
  Rng rng(derive_seed(seed, "subsample_stratified"));
  if (!t.has_label()) {
    selected = rng.sample_without_replacement(t.n_rows(), max_rows);
  } else {
    const std::vector<size_t> counts = t.class_counts();
    size_t present = static_cast<size_t>(
        std::count_if(counts.begin(), counts.end(), [](size_t c) { return c > 0; }));
    if (max_rows < present) {
      throw InvalidArgument("max_rows (" + std::to_string(max_rows) +
                            ") is below the number of classes (" +
                            std::to_string(present) + ")");
    }
    const std::vector<size_t> alloc = proportional_allocation(counts, max_rows);
    const std::vector<std::vector<size_t>> by_class = t.rows_by_class();
    for (size_t k = 0; k < by_class.size(); ++k) {
      for (size_t p : rng.sample_without_replacement(by_class[k].size(), alloc[k])) {
        selected.push_back(by_class[k][p]);
      }
    }
  }
  std::sort(selected.begin(), selected.end());
  return t.select_rows(selected, "subsample(max_rows=" + std::to_string(max_rows) +
                                     ",seed=" + std::to_string(seed) + ")");
}

}  // namespace priorclean
