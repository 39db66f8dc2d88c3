#ifndef PRIORCLEAN_EVALUATOR_HPP_
#define PRIORCLEAN_EVALUATOR_HPP_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "priorclean/forest.hpp"
#include "priorclean/metrics.hpp"
#include "priorclean/table.hpp"

namespace priorclean {

struct EvaluationResult {
  double accuracy = 0.0;
  double ece = 0.0;
  // One row per test row, columns indexed by label code.
  ProbabilityRows probs;
  size_t n_train = 0;
  size_t n_test = 0;
};

// Fills accuracy and ECE from probabilities against the test labels and
// checks that every row is a distribution.
EvaluationResult finish_evaluation(ProbabilityRows probs, const Table& test, size_t n_train);

// A downstream classifier scored on a train/test pair. Implementations are
// deterministic for fixed inputs and safe to call from several threads.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::string name() const = 0;
  virtual EvaluationResult evaluate(const Table& train, const Table& test) = 0;
};

// Built-in stand-in for the foundation model: the reference random forest.
class ReferenceForestEvaluator : public Evaluator {
 public:
  explicit ReferenceForestEvaluator(ForestOptions options = {}) : options_(options) {}
  std::string name() const override { return "reference"; }
  EvaluationResult evaluate(const Table& train, const Table& test) override;

 private:
  ForestOptions options_;
};

// Nearest-centroid classifier that counts its calls. An optional predicate
// makes chosen calls fail with EvaluatorError.
class CountingMockEvaluator : public Evaluator {
 public:
  using FailurePredicate = std::function<bool(const Table& train, const Table& test)>;

  CountingMockEvaluator() = default;
  explicit CountingMockEvaluator(FailurePredicate fail) : fail_(std::move(fail)) {}

  std::string name() const override { return "mock"; }
  EvaluationResult evaluate(const Table& train, const Table& test) override;
  size_t calls() const { return calls_.load(); }
  void reset_calls() { calls_ = 0; }

 private:
  FailurePredicate fail_;
  std::atomic<size_t> calls_{0};
};

// Softmax over negative squared distances to per-class centroids of the
// training rows (missing cells skipped). Shared by the mock and the test
// sidecar.
ProbabilityRows nearest_centroid_probs(const FeatureMatrix& train, std::span<const int32_t> labels,
                                       size_t n_classes, const FeatureMatrix& test);

struct ExternalOptions {
  std::vector<std::string> command;  // argv of the sidecar process
  size_t max_rows = 512;
  uint64_t seed = 42;
};

// Client for an out-of-process evaluator speaking newline-delimited JSON
// over the child's stdin/stdout (proto 1). One request is in flight at a
// time; concurrent callers queue on a mutex. The child is started lazily and
// restarted after it dies.
class ExternalTfmEvaluator : public Evaluator {
 public:
  explicit ExternalTfmEvaluator(ExternalOptions options);
  ~ExternalTfmEvaluator() override;
  ExternalTfmEvaluator(const ExternalTfmEvaluator&) = delete;
  ExternalTfmEvaluator& operator=(const ExternalTfmEvaluator&) = delete;

  std::string name() const override { return "external"; }
  EvaluationResult evaluate(const Table& train, const Table& test) override;
  size_t requests_sent() const { return next_id_; }

 private:
  void start();
  void stop();
  std::string roundtrip(const std::string& line);

  ExternalOptions options_;
  std::mutex mutex_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  size_t next_id_ = 0;
};

// Request/response encoding, exposed for protocol tests.
std::string encode_eval_request(const std::string& id, const Table& train, const Table& test,
                                size_t max_rows, uint64_t seed);
// Parses a response line into probabilities over `n_classes` label codes.
// Throws EvaluatorError on an error response, id mismatch or malformed rows.
ProbabilityRows decode_eval_response(const std::string& line, const std::string& expected_id,
                                     size_t n_classes, size_t n_test, size_t* n_train);

std::unique_ptr<Evaluator> make_evaluator(const std::string& mode,
                                          const std::vector<std::string>& command = {});

}  // namespace priorclean

#endif  // PRIORCLEAN_EVALUATOR_HPP_
