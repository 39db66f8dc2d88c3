#ifndef PRIORCLEAN_SAMPLING_HPP_
#define PRIORCLEAN_SAMPLING_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "priorclean/table.hpp"

namespace priorclean {

struct SplitPair {
  Table train;
  Table test;
  uint64_t seed = 0;
  double fraction = 0.0;
};

// Per-class test counts: round(fraction * class count). A class with a
// single row keeps it in train (warning). When every class rounds to zero,
// the largest class contributes one test row so the test side is non-empty.
std::vector<size_t> stratified_test_counts(const std::vector<size_t>& class_counts,
                                           double fraction);

// Deterministic stratified train/test split; both sides keep the input row
// order.
SplitPair stratified_split(const Table& t, double fraction, uint64_t seed);

// Per-class allocation of `total` rows proportional to class sizes, with
// largest-remainder rounding (ties go to the lower class index).
std::vector<size_t> proportional_allocation(const std::vector<size_t>& sizes,
                                            size_t total);

// Returns `t` unchanged when it has at most `max_rows` rows, otherwise a
// per-class proportional sample of exactly `max_rows` rows in input order.
Table subsample_stratified(const Table& t, size_t max_rows, uint64_t seed);

}  // namespace priorclean

#endif  // PRIORCLEAN_SAMPLING_HPP_
