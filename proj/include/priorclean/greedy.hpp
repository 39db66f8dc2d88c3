#ifndef PRIORCLEAN_GREEDY_HPP_
#define PRIORCLEAN_GREEDY_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "priorclean/actions.hpp"
#include "priorclean/cache.hpp"
#include "priorclean/rewards.hpp"

namespace priorclean {

struct PipelineScore {
  Pipeline pipeline;
  std::string canonical;
  bool failed = false;
  std::string error;
  double reward = 0.0;
  double raw_reward = 0.0;
  double accuracy = 0.0;  // downstream evaluator, reward protocol
  double ece = 0.0;
  size_t n_rows = 0;
  bool guard_triggered = false;
};

struct BaselineRow {
  std::string name;      // B0, B1, B2, B3
  std::string pipeline;  // canonical pipeline(s) evaluated
  double accuracy = 0.0;
  double ece = 0.0;
  bool failed = false;
  std::string error;
};

struct SearchReport {
  RewardKind kind = RewardKind::kR1;
  std::vector<PipelineScore> scores;  // in input order
  std::optional<size_t> best;         // index into scores
  double best_score = 0.0;
  size_t evaluator_calls = 0;  // calls made during this search
  size_t failures = 0;
  std::vector<BaselineRow> baselines;

  const PipelineScore* winner() const { return best ? &scores[*best] : nullptr; }
};

struct SearchOptions {
  size_t threads = 1;
  // Evaluate B0 (dirty) and B1 (impute(mean)->scale(minmax)) on the
  // baseline protocol alongside the search.
  bool baselines = true;
};

// Shared state for searches over one dirty table.
class SearchSession {
 public:
  SearchSession(Table dirty, EvaluationHub& hub, CleaningCache& cache);

  const Table& dirty() const { return dirty_; }
  const Digest& dirty_fingerprint() const { return dirty_fp_; }
  EvaluationHub& hub() { return hub_; }
  CleaningCache& cache() { return cache_; }
  const RewardContext& context() const { return ctx_; }

 private:
  Table dirty_;
  Digest dirty_fp_;
  EvaluationHub& hub_;
  CleaningCache& cache_;
  RewardContext ctx_;
};

// Scores every pipeline: cleaned through the cleaning cache, evaluated once
// per distinct cleaned table on the reward protocol, rewarded under `kind`.
// Failed pipelines are reported and excluded from the argmax. Ties go to the
// shorter pipeline, then the lexicographically smaller canonical string.
SearchReport greedy_search(SearchSession& session, const std::vector<Pipeline>& pipelines,
                           RewardKind kind, const SearchOptions& options = {});

Pipeline baseline_pipeline(const std::string& name);  // B1 or B2

// B0 dirty, B1 impute(mean)->scale(minmax), B2 impute(mean)->scale(zscore),
// B3 mean over impute(mean), impute(median), scale(minmax); all on the
// baseline protocol.
std::vector<BaselineRow> run_baselines(SearchSession& session);

struct TaxonomyReport {
  std::vector<RewardKind> rewards;
  std::vector<SearchReport> searches;  // one per reward, same pipeline order
  size_t evaluator_calls = 0;
};

TaxonomyReport rank_rewards(SearchSession& session, const std::vector<Pipeline>& pipelines,
                            const std::vector<RewardKind>& rewards,
                            const SearchOptions& options = {});

// Long-format rows: reward, pipeline, length, score, raw, accuracy, ece,
// n_rows, status.
std::string taxonomy_csv(const TaxonomyReport& report, const std::string& dataset);
// reward score vs downstream accuracy: dataset, reward, pipeline, score, accuracy
std::string scatter_csv(const TaxonomyReport& report, const std::string& dataset);

}  // namespace priorclean

#endif  // PRIORCLEAN_GREEDY_HPP_
