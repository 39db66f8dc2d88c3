#include "priorclean/evaluator.hpp"

#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <json.hpp>

#include "priorclean/error.hpp"

namespace priorclean {

using nlohmann::json;

EvaluationResult finish_evaluation(ProbabilityRows probs, const Table& test, size_t n_train) {
  const Label& label = test.label();
  if (probs.size() != test.n_rows()) {
    throw EvaluatorError("evaluator returned " + std::to_string(probs.size()) +
                         " probability rows for " + std::to_string(test.n_rows()) + " test rows");
  }
  for (const auto& row : probs) {
    double s = 0.0;
    for (double p : row) {
      if (!std::isfinite(p) || p < 0.0) throw EvaluatorError("evaluator returned invalid probability");
      s += p;
    }
    if (row.size() != label.num_classes() || std::fabs(s - 1.0) > 1e-6) {
      throw EvaluatorError("evaluator probability row does not sum to 1");
    }
  }
  EvaluationResult r;
  r.accuracy = accuracy(probs, label.codes);
  r.ece = expected_calibration_error(probs, label.codes);
  r.probs = std::move(probs);
  r.n_train = n_train;
  r.n_test = test.n_rows();
  return r;
}

EvaluationResult ReferenceForestEvaluator::evaluate(const Table& train, const Table& test) {
  RandomForest forest(options_);
  forest.fit(feature_matrix(train), train.label().codes, train.label().num_classes());
  return finish_evaluation(forest.predict_proba(feature_matrix(test)), test, train.n_rows());
}

ProbabilityRows nearest_centroid_probs(const FeatureMatrix& train, std::span<const int32_t> labels,
                                       size_t n_classes, const FeatureMatrix& test) {
  const size_t p = train.cols;
  std::vector<double> sum(n_classes * p, 0.0);
  std::vector<double> cnt(n_classes * p, 0.0);
  for (size_t i = 0; i < train.rows; ++i) {
    const size_t k = static_cast<size_t>(labels[i]);
    for (size_t j = 0; j < p; ++j) {
      const double v = train.at(i, j);
      if (std::isnan(v)) continue;
      sum[k * p + j] += v;
      cnt[k * p + j] += 1.0;
    }
  }
  std::vector<uint8_t> present(n_classes, 0);
  for (int32_t y : labels) present[static_cast<size_t>(y)] = 1;
  ProbabilityRows out;
  out.reserve(test.rows);
  for (size_t i = 0; i < test.rows; ++i) {
    std::vector<double> d(n_classes, 0.0);
    double best = INFINITY;
    for (size_t k = 0; k < n_classes; ++k) {
      if (!present[k]) continue;
      for (size_t j = 0; j < p; ++j) {
        const double v = test.at(i, j);
        if (std::isnan(v) || cnt[k * p + j] == 0.0) continue;
        const double diff = v - sum[k * p + j] / cnt[k * p + j];
        d[k] += diff * diff;
      }
      best = std::min(best, d[k]);
    }
    std::vector<double> row(n_classes, 0.0);
    double z = 0.0;
    for (size_t k = 0; k < n_classes; ++k) {
      if (!present[k]) continue;
      row[k] = std::exp(-(d[k] - best));
      z += row[k];
    }
    for (double& v : row) v /= z;
    out.push_back(std::move(row));
  }
  return out;
}

EvaluationResult CountingMockEvaluator::evaluate(const Table& train, const Table& test) {
  ++calls_;
  if (fail_ && fail_(train, test)) throw EvaluatorError("mock evaluator failure");
  const Label& label = train.label();
  return finish_evaluation(
      nearest_centroid_probs(feature_matrix(train), label.codes, label.num_classes(),
                             feature_matrix(test)),
      test, train.n_rows());
}

namespace {

json matrix_json(const Table& t) {
  json rows = json::array();
  for (size_t i = 0; i < t.n_rows(); ++i) {
    json row = json::array();
    for (const Column& c : t.columns()) {
      if (c.missing[i]) {
        row.push_back(nullptr);
      } else {
        row.push_back(c.values[i]);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string encode_eval_request(const std::string& id, const Table& train, const Table& test,
                                size_t max_rows, uint64_t seed) {
  json req;
  req["proto"] = 1;
  req["id"] = id;
  req["train"] = {{"features", matrix_json(train)}, {"labels", train.label().codes}};
  req["test"] = {{"features", matrix_json(test)}};
  req["options"] = {{"max_rows", max_rows}, {"seed", seed}};
  return req.dump();
}

ProbabilityRows decode_eval_response(const std::string& line, const std::string& expected_id,
                                     size_t n_classes, size_t n_test, size_t* n_train) {
  json resp;
  try {
    resp = json::parse(line);
  } catch (const json::exception& e) {
    throw EvaluatorError(std::string("malformed evaluator response: ") + e.what());
  }
  if (!resp.is_object()) throw EvaluatorError("evaluator response is not an object");
  if (resp.contains("error") && !resp["error"].is_null()) {
    throw EvaluatorError("evaluator error: " + resp["error"].dump());
  }
  if (!resp.contains("id") || !resp["id"].is_string() || resp["id"].get<std::string>() != expected_id) {
    throw EvaluatorError("evaluator response id mismatch (expected " + expected_id + ")");
  }
  try {
    const auto classes = resp.at("classes").get<std::vector<int64_t>>();
    const auto& probs = resp.at("probs");
    if (!probs.is_array() || probs.size() != n_test) {
      throw EvaluatorError("evaluator returned wrong number of probability rows");
    }
    for (int64_t c : classes) {
      if (c < 0 || static_cast<size_t>(c) >= n_classes) {
        throw EvaluatorError("evaluator returned unknown class " + std::to_string(c));
      }
    }
    ProbabilityRows out;
    out.reserve(n_test);
    for (const auto& row : probs) {
      if (!row.is_array() || row.size() != classes.size()) {
        throw EvaluatorError("probability row width does not match classes");
      }
      std::vector<double> full(n_classes, 0.0);
      for (size_t k = 0; k < classes.size(); ++k) {
        full[static_cast<size_t>(classes[k])] += row[k].get<double>();
      }
      out.push_back(std::move(full));
    }
    if (n_train) *n_train = resp.value("n_train", size_t{0});
    return out;
  } catch (const json::exception& e) {
    throw EvaluatorError(std::string("malformed evaluator response: ") + e.what());
  }
}

ExternalTfmEvaluator::ExternalTfmEvaluator(ExternalOptions options) : options_(std::move(options)) {
  if (options_.command.empty()) throw InvalidArgument("external evaluator needs a command");
}

ExternalTfmEvaluator::~ExternalTfmEvaluator() { stop(); }

void ExternalTfmEvaluator::start() {
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw EvaluatorError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  std::vector<char*> argv;
  for (std::string& a : options_.command) argv.push_back(a.data());
  argv.push_back(nullptr);
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw EvaluatorError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    dup2(fds[1], STDIN_FILENO);
    dup2(fds[1], STDOUT_FILENO);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(fds[1]);
  pid_ = pid;
  to_child_ = fds[0];
  from_child_ = fds[0];
  buffer_.clear();
}

void ExternalTfmEvaluator::stop() {
  if (pid_ < 0) return;
  close(to_child_);
  to_child_ = from_child_ = -1;
  int status = 0;
  for (int i = 0; i < 50; ++i) {
    if (waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      return;
    }
    usleep(10000);
  }
  kill(pid_, SIGKILL);
  waitpid(pid_, &status, 0);
  pid_ = -1;
}

std::string ExternalTfmEvaluator::roundtrip(const std::string& line) {
  if (pid_ < 0) start();
  const std::string out = line + "\n";
  size_t sent = 0;
  while (sent < out.size()) {
    const ssize_t n = send(to_child_, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw EvaluatorError("evaluator sidecar closed its input");
    }
    sent += static_cast<size_t>(n);
  }
  for (;;) {
    const size_t nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string reply = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return reply;
    }
    char chunk[65536];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      stop();
      throw EvaluatorError("evaluator sidecar exited before responding");
    }
    buffer_.append(chunk, static_cast<size_t>(n));
  }
}

EvaluationResult ExternalTfmEvaluator::evaluate(const Table& train, const Table& test) {
  std::lock_guard<std::mutex> lock(mutex_);
  const std::string id = "req-" + std::to_string(next_id_++);
  const std::string reply =
      roundtrip(encode_eval_request(id, train, test, options_.max_rows, options_.seed));
  size_t n_train = 0;
  ProbabilityRows probs =
      decode_eval_response(reply, id, test.label().num_classes(), test.n_rows(), &n_train);
  return finish_evaluation(std::move(probs), test, n_train ? n_train : train.n_rows());
}

std::unique_ptr<Evaluator> make_evaluator(const std::string& mode,
                                          const std::vector<std::string>& command) {
  if (mode == "reference") return std::make_unique<ReferenceForestEvaluator>();
  if (mode == "mock") return std::make_unique<CountingMockEvaluator>();
  if (mode == "external") {
    ExternalOptions o;
    o.command = command;
    return std::make_unique<ExternalTfmEvaluator>(std::move(o));
  }
  throw InvalidArgument("unknown evaluator mode '" + mode + "' (expected reference, external or mock)");
}

}  // namespace priorclean
