#include "priorclean/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "priorclean/error.hpp"
#include "priorclean/rng.hpp"

namespace priorclean {

FeatureMatrix feature_matrix(const Table& t) {
  FeatureMatrix m;
  m.rows = t.n_rows();
  m.cols = t.n_cols();
  m.data.resize(m.rows * m.cols);
  for (size_t j = 0; j < m.cols; ++j) {
    const Column& c = t.column(j);
    for (size_t i = 0; i < m.rows; ++i) m.data[i * m.cols + j] = c.values[i];
  }
  return m;
}

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int32_t> y, size_t n_classes,
              const ForestOptions& options, Rng& rng, RandomForest::Tree& tree,
              std::vector<double>& leaf_probs)
      : x_(x),
        y_(y),
        n_classes_(n_classes),
        options_(options),
        rng_(rng),
        tree_(tree),
        leaf_probs_(leaf_probs) {
    mtry_ = std::max<size_t>(1, static_cast<size_t>(std::floor(std::sqrt(x.cols))));
  }

  void build(std::vector<size_t> sample) { grow(sample, 0); }

 private:
  uint32_t make_leaf(const std::vector<size_t>& idx) {
    RandomForest::Node node;
    node.leaf = static_cast<uint32_t>(leaf_probs_.size());
    std::vector<double> counts(n_classes_, 0.0);
    for (size_t i : idx) counts[static_cast<size_t>(y_[i])] += 1.0;
    for (double c : counts) leaf_probs_.push_back(c / static_cast<double>(idx.size()));
    tree_.nodes.push_back(node);
    return static_cast<uint32_t>(tree_.nodes.size() - 1);
  }

  uint32_t grow(std::vector<size_t>& idx, size_t depth) {
    bool pure = true;
    for (size_t i : idx) pure = pure && y_[i] == y_[idx.front()];
    if (pure || depth >= options_.max_depth || idx.size() < options_.min_samples_split) {
      return make_leaf(idx);
    }
    const size_t n = idx.size();
    std::vector<double> total(n_classes_, 0.0);
    for (size_t i : idx) total[static_cast<size_t>(y_[i])] += 1.0;

    double best_score = -1.0;
    size_t best_feature = 0;
    double best_threshold = 0.0;
    std::vector<size_t> order(idx);
    std::vector<double> left(n_classes_);
    for (size_t f : rng_.sample_without_replacement(x_.cols, mtry_)) {
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        double va = x_.at(a, f);
        double vb = x_.at(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::fill(left.begin(), left.end(), 0.0);
      double left_sq = 0.0;
      double right_sq = 0.0;
      for (double c : total) right_sq += c * c;
      for (size_t pos = 0; pos + 1 < n; ++pos) {
        const size_t k = static_cast<size_t>(y_[order[pos]]);
        // Update sum of squared class counts on both sides in O(1).
        left_sq += 2.0 * left[k] + 1.0;
        left[k] += 1.0;
        const double right_k = total[k] - left[k];
        right_sq -= 2.0 * right_k + 1.0;
        const double v = x_.at(order[pos], f);
        const double next = x_.at(order[pos + 1], f);
        if (next <= v) continue;
        const double nl = static_cast<double>(pos + 1);
        const double nr = static_cast<double>(n - pos - 1);
        // Maximizing sum_k l_k^2/n_l + r_k^2/n_r minimizes weighted Gini.
        const double score = left_sq / nl + right_sq / nr;
        if (score > best_score + 1e-12) {
          best_score = score;
          best_feature = f;
          best_threshold = 0.5 * (v + next);
          if (best_threshold >= next) best_threshold = v;
        }
      }
    }
    double parent_sq = 0.0;
    for (double c : total) parent_sq += c * c;
    if (best_score <= parent_sq / static_cast<double>(n) + 1e-12) return make_leaf(idx);

    std::vector<size_t> li;
    std::vector<size_t> ri;
    for (size_t i : idx) {
      (x_.at(i, best_feature) <= best_threshold ? li : ri).push_back(i);
    }
    if (li.empty() || ri.empty()) return make_leaf(idx);
    const uint32_t id = static_cast<uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[id].feature = static_cast<int32_t>(best_feature);
    tree_.nodes[id].threshold = best_threshold;
    idx.clear();
    idx.shrink_to_fit();
    const uint32_t l = grow(li, depth + 1);
    const uint32_t r = grow(ri, depth + 1);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const FeatureMatrix& x_;
  std::span<const int32_t> y_;
  size_t n_classes_;
  const ForestOptions& options_;
  Rng& rng_;
  RandomForest::Tree& tree_;
  std::vector<double>& leaf_probs_;
  size_t mtry_;
};

void RandomForest::fit(const FeatureMatrix& x_in, std::span<const int32_t> y, size_t n_classes) {
  if (x_in.rows == 0) throw DegenerateClassifierError("cannot fit a forest on zero rows");
  if (y.size() != x_in.rows) throw InvalidArgument("forest: label count mismatch");
  size_t distinct = 0;
  {
    std::vector<uint8_t> seen(n_classes, 0);
    for (int32_t k : y) {
      if (!seen[static_cast<size_t>(k)]) ++distinct;
      seen[static_cast<size_t>(k)] = 1;
    }
  }
  if (distinct < 2) {
    throw DegenerateClassifierError("training data contains a single class");
  }
  n_classes_ = n_classes;
  FeatureMatrix x = x_in;
  fill_.assign(x.cols, 0.0);
  for (size_t j = 0; j < x.cols; ++j) {
    double s = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < x.rows; ++i) {
      if (!std::isnan(x.at(i, j))) {
        s += x.at(i, j);
        ++n;
      }
    }
    fill_[j] = n ? s / static_cast<double>(n) : 0.0;
    for (size_t i = 0; i < x.rows; ++i) {
      double& v = x.data[i * x.cols + j];
      if (std::isnan(v)) v = fill_[j];
    }
  }
  trees_.assign(options_.n_trees, {});
  leaf_probs_.clear();
  for (size_t t = 0; t < options_.n_trees; ++t) {
    Rng rng(derive_seed(options_.seed, t));
    std::vector<size_t> sample(x.rows);
    for (size_t& s : sample) s = rng.uniform_index(x.rows);
    TreeBuilder builder(x, y, n_classes_, options_, rng, trees_[t], leaf_probs_);
    builder.build(std::move(sample));
  }
}

std::vector<double> RandomForest::predict_proba(std::span<const double> row) const {
  std::vector<double> out(n_classes_, 0.0);
  for (const Tree& tree : trees_) {
    uint32_t id = 0;
    while (tree.nodes[id].feature >= 0) {
      const Node& node = tree.nodes[id];
      double v = row[static_cast<size_t>(node.feature)];
      if (std::isnan(v)) v = fill_[static_cast<size_t>(node.feature)];
      id = v <= node.threshold ? node.left : node.right;
    }
    const double* p = leaf_probs_.data() + tree.nodes[id].leaf;
    for (size_t k = 0; k < n_classes_; ++k) out[k] += p[k];
  }
  for (double& v : out) v /= static_cast<double>(trees_.size());
  return out;
}

ProbabilityRows RandomForest::predict_proba(const FeatureMatrix& x) const {
  ProbabilityRows out;
  out.reserve(x.rows);
  for (size_t i = 0; i < x.rows; ++i) out.push_back(predict_proba(x.row(i)));
  return out;
}

double cv_accuracy(const Table& t, size_t folds, const ForestOptions& options) {
  if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
  const Label& label = t.label();
  std::vector<std::vector<size_t>> by_class = t.rows_by_class();
  size_t present = 0;
  for (const auto& rows : by_class) present += rows.empty() ? 0 : 1;
  if (present < 2) throw DegenerateClassifierError("table contains a single class");

  std::vector<size_t> fold_of(t.n_rows(), 0);
  Rng rng(derive_seed(options.seed, "cv_folds"));
  size_t offset = 0;
  for (auto& rows : by_class) {
    rng.shuffle(rows);
    for (size_t p = 0; p < rows.size(); ++p) fold_of[rows[p]] = (offset + p) % folds;
    offset += rows.size();
  }
  const FeatureMatrix x = feature_matrix(t);
  double acc_sum = 0.0;
  size_t used = 0;
  for (size_t f = 0; f < folds; ++f) {
    std::vector<size_t> train_rows;
    std::vector<size_t> test_rows;
    for (size_t i = 0; i < t.n_rows(); ++i) (fold_of[i] == f ? test_rows : train_rows).push_back(i);
    if (test_rows.empty() || train_rows.empty()) continue;
    FeatureMatrix xtr{train_rows.size(), x.cols, {}};
    std::vector<int32_t> ytr;
    for (size_t i : train_rows) {
      auto r = x.row(i);
      xtr.data.insert(xtr.data.end(), r.begin(), r.end());
      ytr.push_back(label.codes[i]);
    }
    ForestOptions fo = options;
    fo.seed = derive_seed(options.seed, f);
    RandomForest forest(fo);
    forest.fit(xtr, ytr, label.num_classes());
    size_t correct = 0;
    for (size_t i : test_rows) {
      if (static_cast<int32_t>(argmax(forest.predict_proba(x.row(i)))) == label.codes[i]) ++correct;
    }
    acc_sum += static_cast<double>(correct) / static_cast<double>(test_rows.size());
    ++used;
  }
  return used ? acc_sum / static_cast<double>(used) : 0.0;
}

}  // namespace priorclean
