#include <gtest/gtest.h>

#include <cstdio>
#include <numeric>

#include "priorclean/actions.hpp"
#include "priorclean/cache.hpp"
#include "priorclean/error.hpp"
#include "priorclean/evaluator.hpp"
#include "priorclean/greedy.hpp"
#include "priorclean/rng.hpp"
#include "test_util.hpp"
#include <json.hpp>

using namespace priorclean;
using json = nlohmann::json;

namespace {

ExternalOptions sidecar(std::vector<std::string> extra = {}) {
  ExternalOptions o;
  o.command = {FAKE_SIDECAR};
  for (auto& a : extra) o.command.push_back(std::move(a));
  return o;
}

std::pair<Table, Table> split(const Table& t, size_t n_train) {
  std::vector<size_t> a(n_train), b(t.n_rows() - n_train);
  std::iota(a.begin(), a.end(), size_t{0});
  std::iota(b.begin(), b.end(), n_train);
  return {t.select_rows(a, ""), t.select_rows(b, "")};
}

std::string run_shell(const std::string& cmd) {
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  pclose(p);
  return out;
}

}  // namespace

TEST(Sidecar, ThousandRandomRequests) {
  ExternalTfmEvaluator ev(sidecar());
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const size_t rows = 20 + rng.uniform_index(40);
    const size_t classes = 2 + rng.uniform_index(3);
    Table t = testutil::blobs(rows * classes, 1 + rng.uniform_index(5), rng.next(), 2.0, classes);
    if (i % 3 == 0) t = testutil::mcar(t, 0.2, rng.next());
    const auto [train, test] = split(t, t.n_rows() * 3 / 4);
    const EvaluationResult r = ev.evaluate(train, test);
    ASSERT_EQ(r.probs.size(), test.n_rows());
    for (const auto& row : r.probs) {
      ASSERT_EQ(row.size(), classes);
      ASSERT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-6);
    }
  }
  EXPECT_EQ(ev.requests_sent(), 1000u);
}

TEST(Sidecar, SeparableDataIsPerfect) {
  ExternalTfmEvaluator ev(sidecar());
  const auto [train, test] = split(testutil::blobs(200, 3, 11, 12.0), 150);
  const EvaluationResult r = ev.evaluate(train, test);
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.n_test, 50u);
  EXPECT_EQ(r.n_train, 150u);
}

TEST(Sidecar, MaxRowsSubsamplesTrain) {
  ExternalOptions o = sidecar();
  o.max_rows = 64;
  ExternalTfmEvaluator ev(o);
  const auto [train, test] = split(testutil::blobs(300, 3), 250);
  EXPECT_EQ(ev.evaluate(train, test).n_train, 64u);
}

TEST(Sidecar, MalformedJsonGetsNullId) {
  const std::string out = run_shell("printf 'not json\\n' | " + std::string(FAKE_SIDECAR));
  const json resp = json::parse(out);
  EXPECT_TRUE(resp["id"].is_null());
  EXPECT_EQ(resp["proto"], 1);
  EXPECT_EQ(resp["error"], "malformed JSON");
}

TEST(Sidecar, ErrorsAndBadIdsRaise) {
  const auto [train, test] = split(testutil::blobs(80, 3), 60);
  ExternalTfmEvaluator failing(sidecar({"--fail-every", "2"}));
  EXPECT_NO_THROW(failing.evaluate(train, test));
  EXPECT_THROW(failing.evaluate(train, test), EvaluatorError);
  EXPECT_NO_THROW(failing.evaluate(train, test));
  ExternalTfmEvaluator bad(sidecar({"--bad-id"}));
  try {
    bad.evaluate(train, test);
    FAIL() << "expected EvaluatorError";
  } catch (const EvaluatorError& e) {
    EXPECT_NE(std::string(e.what()).find("id mismatch"), std::string::npos);
  }
  EXPECT_THROW(ExternalTfmEvaluator(ExternalOptions{}), InvalidArgument);
  ExternalTfmEvaluator missing({{"/nonexistent/sidecar"}});
  EXPECT_THROW(missing.evaluate(train, test), EvaluatorError);
}

TEST(Sidecar, RestartsAfterExit) {
  const auto [train, test] = split(testutil::blobs(80, 3), 60);
  ExternalTfmEvaluator ev(sidecar({"--exit-after", "2"}));
  EXPECT_NO_THROW(ev.evaluate(train, test));
  EXPECT_NO_THROW(ev.evaluate(train, test));
  EXPECT_THROW(ev.evaluate(train, test), EvaluatorError);
  EXPECT_NO_THROW(ev.evaluate(train, test));
  EXPECT_NO_THROW(ev.evaluate(train, test));
}

TEST(Sidecar, GreedySearchCallAccounting) {
  ExternalTfmEvaluator ev(sidecar());
  EvaluationHub hub(ev);
  CleaningCache cache;
  SearchSession session(testutil::mcar(inject_outliers(testutil::blobs(200, 4, 7, 1.5), 0.05, 3)), hub,
                        cache);
  const auto pool = subsample_pipelines(enumerate_pipelines(ActionSuite::discrete7()), 20, 42);
  SearchReport a = greedy_search(session, pool, RewardKind::kR7, {.threads = 4});
  EXPECT_EQ(a.evaluator_calls, 22u);
  EXPECT_EQ(ev.requests_sent(), 22u);
  EXPECT_EQ(a.failures, 0u);
  SearchReport b = greedy_search(session, pool, RewardKind::kR7);
  EXPECT_EQ(b.evaluator_calls, 0u);
  EXPECT_EQ(ev.requests_sent(), 22u);
}

TEST(Protocol, EncodeDecodeRoundTrip) {
  const auto [train, test] = split(testutil::mcar(testutil::blobs(40, 2), 0.3), 30);
  const json req = json::parse(encode_eval_request("abc", train, test, 512, 7));
  EXPECT_EQ(req["proto"], 1);
  EXPECT_EQ(req["id"], "abc");
  EXPECT_EQ(req["options"]["max_rows"], 512);
  EXPECT_EQ(req["options"]["seed"], 7);
  ASSERT_EQ(req["train"]["features"].size(), 30u);
  ASSERT_EQ(req["test"]["features"].size(), 10u);
  EXPECT_FALSE(req["test"].contains("labels"));
  for (size_t i = 0; i < 30; ++i) {
    for (size_t j = 0; j < 2; ++j) {
      const json& v = req["train"]["features"][i][j];
      if (train.column(j).missing[i]) {
        EXPECT_TRUE(v.is_null());
      } else {
        EXPECT_DOUBLE_EQ(v.get<double>(), train.column(j).values[i]);
      }
    }
    EXPECT_EQ(req["train"]["labels"][i], train.label().codes[i]);
  }

  json resp = {{"proto", 1}, {"id", "abc"}, {"classes", {1, 0}}, {"probs", {{0.25, 0.75}}}, {"n_train", 3}};
  size_t n_train = 0;
  const ProbabilityRows rows = decode_eval_response(resp.dump(), "abc", 2, 1, &n_train);
  EXPECT_EQ(n_train, 3u);
  EXPECT_DOUBLE_EQ(rows[0][0], 0.75);
  EXPECT_DOUBLE_EQ(rows[0][1], 0.25);
  EXPECT_THROW(decode_eval_response(resp.dump(), "xyz", 2, 1, nullptr), EvaluatorError);
  EXPECT_THROW(decode_eval_response(resp.dump(), "abc", 2, 2, nullptr), EvaluatorError);
  EXPECT_THROW(decode_eval_response("{", "abc", 2, 1, nullptr), EvaluatorError);
  resp["classes"] = {0, 5};
  EXPECT_THROW(decode_eval_response(resp.dump(), "abc", 2, 1, nullptr), EvaluatorError);
  json err = {{"proto", 1}, {"id", "abc"}, {"error", "boom"}};
  EXPECT_THROW(decode_eval_response(err.dump(), "abc", 2, 1, nullptr), EvaluatorError);
}
