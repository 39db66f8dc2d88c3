#ifndef PRIORCLEAN_ACTIONS_HPP_
#define PRIORCLEAN_ACTIONS_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "priorclean/table.hpp"

namespace priorclean {

enum class Family { kImputer, kOutlier, kScaler, kDedup };
std::string family_name(Family f);

enum class ImputeStrategy { kMean, kMedian, kKnn };
enum class OutlierMethod { kIqr, kZscore };
enum class ScaleMethod { kMinMax, kZscore, kQuantile };
enum class QuantileOutput { kUniform, kNormal };

struct ImputeParams {
  ImputeStrategy strategy = ImputeStrategy::kMean;
  int k = 5;  // KNN only, in [1, 20]
};
struct OutlierParams {
  OutlierMethod method = OutlierMethod::kIqr;
  double threshold = 1.5;  // in [0.5, 5.0]
};
struct ScaleParams {
  ScaleMethod method = ScaleMethod::kMinMax;
  QuantileOutput output = QuantileOutput::kUniform;
};
struct DedupParams {};

// A parameterized cleaning operation: family, operator and sub-parameters.
class Action {
 public:
  using Params = std::variant<ImputeParams, OutlierParams, ScaleParams, DedupParams>;

  explicit Action(Params params);

  static Action impute_mean() { return Action(ImputeParams{ImputeStrategy::kMean}); }
  static Action impute_median() { return Action(ImputeParams{ImputeStrategy::kMedian}); }
  static Action impute_knn(int k = 5) { return Action(ImputeParams{ImputeStrategy::kKnn, k}); }
  static Action outlier_iqr(double t = 1.5) { return Action(OutlierParams{OutlierMethod::kIqr, t}); }
  static Action outlier_zscore(double t = 3.0) {
    return Action(OutlierParams{OutlierMethod::kZscore, t});
  }
  static Action scale_minmax() { return Action(ScaleParams{ScaleMethod::kMinMax}); }
  static Action scale_zscore() { return Action(ScaleParams{ScaleMethod::kZscore}); }
  static Action scale_quantile(QuantileOutput out = QuantileOutput::kUniform) {
    return Action(ScaleParams{ScaleMethod::kQuantile, out});
  }
  static Action dedup() { return Action(DedupParams{}); }

  Family family() const;
  const Params& params() const { return params_; }
  // e.g. impute(knn,k=5), outlier(iqr,t=1.5), scale(minmax), dedup
  std::string canonical() const;
  static Action parse(const std::string& canonical);

  friend bool operator==(const Action& a, const Action& b) {
    return a.canonical() == b.canonical();
  }

 private:
  Params params_;
};

// Ordered sequence of at most three actions with pairwise distinct families.
struct Pipeline {
  std::vector<Action> steps;

  size_t size() const { return steps.size(); }
  bool is_noop() const { return steps.empty(); }
  // Steps joined by "->"; the empty pipeline is "noop".
  std::string canonical() const;
  static Pipeline parse(const std::string& canonical);
  // Throws InvalidArgument on a repeated family or more than 3 steps.
  void validate() const;
};

// Shorter first, then lexicographic canonical string.
bool canonical_less(const Pipeline& a, const Pipeline& b);

struct ActionSuite {
  std::string name;
  std::vector<Action> actions;

  // 3 imputers (mean, median, knn k=5), iqr 1.5, zscore 3.0, minmax, zscore.
  static ActionSuite discrete7();
  // discrete7 + quantile scaler + dedup.
  static ActionSuite extended9();
  // 6 imputers (mean, median, knn k in {3,5,7,10}), iqr thresholds
  // {1.0,...,3.0}, zscore thresholds {2.0,...,3.5}, minmax, zscore.
  static ActionSuite param17();
  static ActionSuite by_name(const std::string& name);
};

struct ApplyOptions {
  // Outlier removal is skipped when it would leave fewer rows than this.
  size_t min_rows = 10;
};

struct ActionOutcome {
  Table table;
  bool guard_triggered = false;
};

// Applies one action. Operators never read or modify the label.
ActionOutcome run_action(const Table& t, const Action& a, const ApplyOptions& options = {});
Table apply_action(const Table& t, const Action& a, const ApplyOptions& options = {});
// Left-to-right fold of apply_action.
Table apply_pipeline(const Table& t, const Pipeline& p, const ApplyOptions& options = {});

// All sequences of length 0..max_len with pairwise distinct families,
// ordered by length then lexicographically by suite action index.
std::vector<Pipeline> enumerate_pipelines(const ActionSuite& suite, size_t max_len = 3);

// Closed-form count 1 + sum s_i + sum_{i!=j} s_i s_j + 6 sum_{i<j<k} s_i s_j s_k
// over family sizes (for max_len = 3).
size_t pipeline_count(const ActionSuite& suite);

// Keeps the no-op and every single-step pipeline, then fills the remaining
// budget from the 2- and 3-step tiers in proportion to tier sizes (largest
// remainder), sampling uniformly without replacement inside each tier. The
// result is in pool order.
std::vector<Pipeline> subsample_pipelines(const std::vector<Pipeline>& pool, size_t budget,
                                          uint64_t seed);

}  // namespace priorclean

#endif  // PRIORCLEAN_ACTIONS_HPP_
