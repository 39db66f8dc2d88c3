#ifndef PRIORCLEAN_FOREST_HPP_
#define PRIORCLEAN_FOREST_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "priorclean/metrics.hpp"
#include "priorclean/table.hpp"

namespace priorclean {

// Row-major feature matrix; NaN marks a missing cell.
struct FeatureMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  double at(size_t i, size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(size_t i) const { return {data.data() + i * cols, cols}; }
};

// Numeric values and categorical codes of every feature column.
FeatureMatrix feature_matrix(const Table& t);

struct ForestOptions {
  size_t n_trees = 50;
  size_t max_depth = 12;
  size_t min_samples_split = 2;
  uint64_t seed = 42;
};

// Bagged CART classifier: Gini splits over floor(sqrt(p)) random features per
// node, leaves store class frequencies, predictions average leaf
// distributions. Missing training cells are filled with training column
// means and the same means are applied at prediction time.
class RandomForest {
 public:
  explicit RandomForest(ForestOptions options = {}) : options_(options) {}

  void fit(const FeatureMatrix& x, std::span<const int32_t> y, size_t n_classes);
  std::vector<double> predict_proba(std::span<const double> row) const;
  ProbabilityRows predict_proba(const FeatureMatrix& x) const;

 private:
  struct Node {
    int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    uint32_t left = 0;
    uint32_t right = 0;
    uint32_t leaf = 0;  // offset into leaf_probs_
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  ForestOptions options_;
  size_t n_classes_ = 0;
  std::vector<double> fill_;
  std::vector<Tree> trees_;
  std::vector<double> leaf_probs_;

  friend class TreeBuilder;
};

// Mean accuracy over `folds` stratified folds (seeded class-wise shuffles,
// round-robin assignment). Throws DegenerateClassifierError on single-class
// input.
double cv_accuracy(const Table& t, size_t folds = 3, const ForestOptions& options = {});

}  // namespace priorclean

#endif  // PRIORCLEAN_FOREST_HPP_
