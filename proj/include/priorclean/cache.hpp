#ifndef PRIORCLEAN_CACHE_HPP_
#define PRIORCLEAN_CACHE_HPP_

#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "priorclean/actions.hpp"
#include "priorclean/evaluator.hpp"
#include "priorclean/forest.hpp"
#include "priorclean/table.hpp"

namespace priorclean {

// Compute-once map. Each key is computed at most once even under concurrent
// lookups; a computation that throws caches the exception and rethrows it on
// every later lookup.
template <typename K, typename V>
class OnceCache {
 public:
  std::shared_ptr<const V> get(const K& key, const std::function<V()>& compute) {
    std::shared_ptr<Slot> slot;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto& s = slots_[key];
      if (!s) s = std::make_shared<Slot>();
      slot = s;
    }
    std::lock_guard<std::mutex> lock(slot->mutex);
    if (!slot->done) {
      try {
        slot->value = std::make_shared<const V>(compute());
      } catch (...) {
        slot->error = std::current_exception();
      }
      slot->done = true;
      ++computed_;
    }
    if (slot->error) std::rethrow_exception(slot->error);
    return slot->value;
  }

  bool contains(const K& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return slots_.count(key) > 0;
  }
  size_t computed() const { return computed_.load(); }
  size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return slots_.size();
  }

 private:
  struct Slot {
    std::mutex mutex;
    bool done = false;
    std::shared_ptr<const V> value;
    std::exception_ptr error;
  };
  mutable std::mutex mutex_;
  std::map<K, std::shared_ptr<Slot>> slots_;
  std::atomic<size_t> computed_{0};
};

// Exact binary round-trip of a table, provenance included.
void write_table_binary(const Table& t, const std::filesystem::path& path);
Table read_table_binary(const std::filesystem::path& path);

struct CleanedTable {
  Table table;
  Digest fingerprint;
  bool guard_triggered = false;  // some outlier step was skipped by the row guard
};

// Cleaned tables keyed by (dirty-table fingerprint, canonical pipeline). A
// pipeline is computed by applying its last step to the cached result of its
// prefix, so every distinct pipeline is executed once. With a non-zero memory
// budget, tables beyond the budget are spilled to `spill_dir` and reloaded
// on access.
class CleaningCache {
 public:
  explicit CleaningCache(ApplyOptions options = {}, size_t memory_budget_bytes = 0,
                         std::filesystem::path spill_dir = {});
  ~CleaningCache();
  CleaningCache(const CleaningCache&) = delete;
  CleaningCache& operator=(const CleaningCache&) = delete;

  std::shared_ptr<const CleanedTable> get(const Table& dirty, const Pipeline& pipeline);
  std::shared_ptr<const CleanedTable> get(const Table& dirty, const Digest& dirty_fp,
                                          const Pipeline& pipeline);

  // Number of pipeline applications performed (one per distinct key).
  size_t executions() const { return executions_.load(); }
  size_t spilled() const;

 private:
  struct Slot {
    std::mutex mutex;
    bool done = false;
    std::shared_ptr<const CleanedTable> resident;
    std::filesystem::path spill_path;
    Digest fingerprint;
    bool guard_triggered = false;
    std::exception_ptr error;
  };

  void account(const std::shared_ptr<Slot>& slot, const Table& t);

  ApplyOptions options_;
  size_t budget_;
  std::filesystem::path spill_dir_;
  bool own_spill_dir_ = false;
  mutable std::mutex mutex_;
  std::map<std::pair<Digest, std::string>, std::shared_ptr<Slot>> slots_;
  std::vector<std::shared_ptr<Slot>> resident_order_;
  size_t resident_bytes_ = 0;
  size_t spill_count_ = 0;
  std::atomic<size_t> executions_{0};
};

// How a table is turned into a train/test pair for the downstream evaluator.
enum class EvalProtocol {
  kReward,    // stratified subsample to at most 512 rows, then 20% holdout
  kBaseline,  // 20% stratified holdout of the full table
};
std::string protocol_name(EvalProtocol p);

struct HubOptions {
  ForestOptions forest;
  size_t cv_folds = 3;
  size_t reward_max_rows = 512;
  double test_fraction = 0.2;
  uint64_t seed = 42;
};

// Shared, memoized access to the two classifiers every reward needs: forest
// cross-validation accuracy keyed by table fingerprint, and downstream
// evaluator results keyed by (protocol, table fingerprint).
class EvaluationHub {
 public:
  explicit EvaluationHub(Evaluator& evaluator, HubOptions options = {});

  double rf_accuracy(const Table& t);
  double rf_accuracy(const Table& t, const Digest& fp);
  std::shared_ptr<const EvaluationResult> evaluate(const Table& t, EvalProtocol protocol);
  std::shared_ptr<const EvaluationResult> evaluate(const Table& t, const Digest& fp,
                                                   EvalProtocol protocol);

  Evaluator& evaluator() { return evaluator_; }
  const HubOptions& options() const { return options_; }
  // Calls made to the downstream evaluator through this hub.
  size_t evaluator_calls() const { return eval_cache_.computed(); }
  size_t rf_evaluations() const { return rf_cache_.computed(); }

 private:
  Evaluator& evaluator_;
  HubOptions options_;
  OnceCache<Digest, double> rf_cache_;
  OnceCache<std::pair<int, Digest>, EvaluationResult> eval_cache_;
};

}  // namespace priorclean

#endif  // PRIORCLEAN_CACHE_HPP_
