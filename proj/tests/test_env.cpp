#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "priorclean/env.hpp"
#include "priorclean/error.hpp"
#include "priorclean/evaluator.hpp"
#include "test_util.hpp"

using namespace priorclean;

namespace {

struct EnvFixture {
  explicit EnvFixture(Table dirty, EnvConfig cfg = {}) : hub(mock), env(std::move(dirty), cfg, hub) {}
  CountingMockEvaluator mock;
  EvaluationHub hub;
  CleaningEnv env;
};

EnvConfig with_reward(RewardKind k, const std::string& suite = "discrete7") {
  EnvConfig c;
  c.reward = k;
  c.suite = suite;
  return c;
}

}  // namespace

TEST(EnvConfig, Validation) {
  EnvConfig c;
  EXPECT_NO_THROW(c.validate());
  c.repeat_penalty = 0.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = EnvConfig{};
  c.horizon = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = EnvConfig{};
  c.suite = "nope";
  EnvFixture* f = nullptr;
  EXPECT_THROW(f = new EnvFixture(testutil::blobs(30, 2), c), InvalidArgument);
  delete f;
}

TEST(Env, RepeatedFamilyIsPenalizedAndChangesNothing) {
  EnvFixture f(testutil::mcar(testutil::blobs(80, 3)));
  f.env.reset();
  StepOutcome a = f.env.step(0);  // impute(mean)
  EXPECT_FALSE(a.penalized);
  const Digest before = table_fingerprint(f.env.table());
  StepOutcome b = f.env.step(1);  // impute(median): same family
  EXPECT_TRUE(b.penalized);
  EXPECT_DOUBLE_EQ(b.reward, -0.5);
  EXPECT_EQ(b.info, "repeat-penalty:impute(median)");
  EXPECT_EQ(table_fingerprint(f.env.table()), before);
  EXPECT_EQ(b.observation, a.observation);
  EXPECT_EQ(f.env.applied().canonical(), "impute(mean)");
}

TEST(Env, HorizonAndStepErrors) {
  EnvFixture f(testutil::mcar(testutil::blobs(60, 2)));
  EXPECT_THROW(f.env.step(0), InvalidArgument);
  f.env.reset();
  EXPECT_THROW(f.env.step(99), InvalidArgument);
  for (size_t t = 1; t <= 6; ++t) EXPECT_EQ(f.env.step(t % 7).done, t == 6);
  EXPECT_THROW(f.env.step(0), InvalidArgument);
  f.env.reset();
  EXPECT_EQ(f.env.episode(), 1u);
  EXPECT_EQ(f.env.step_count(), 0u);
}

TEST(Env, ObservationHistoryBitsAndDedupFold) {
  EnvFixture f(inject_duplicates(testutil::mcar(testutil::blobs(60, 2)), 0.1, 1),
               with_reward(RewardKind::kR1, "extended9"));
  Observation o = f.env.reset();
  EXPECT_EQ(o[6] + o[7] + o[8], 0.0);
  o = f.env.step(8).observation;  // dedup
  EXPECT_EQ(o[8], 1.0);
  EXPECT_EQ(o[6], 0.0);
  // The scaler family stays available after dedup.
  StepOutcome s = f.env.step(5);
  EXPECT_FALSE(s.penalized);
  EXPECT_LT(f.env.table().n_rows(), 66u);
  o = f.env.step(0).observation;
  EXPECT_EQ(o[6], 1.0);
  EXPECT_DOUBLE_EQ(o[0], 0.0);
}

TEST(Env, RowGuardKeepsTableAndTagsInfo) {
  std::vector<double> x(12, 0.0);
  x[11] = 100.0;
  x[10] = -100.0;
  x[9] = 50.0;
  Table t(std::vector<Column>{Column::numeric("x", x), Column::numeric("z", std::vector<double>(12, 1.0))},
          Label{"y", {0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, {"a", "b"}});
  EnvFixture f(t, with_reward(RewardKind::kR1));
  f.env.reset();
  StepOutcome o = f.env.step(3);
  EXPECT_TRUE(o.guard_triggered);
  EXPECT_EQ(o.info, "outlier(iqr,t=1.5) [row-guard]");
  EXPECT_EQ(f.env.table().n_rows(), 12u);
}

TEST(Env, R5TelescopesToR3Difference) {
  EnvFixture f(testutil::mcar(inject_outliers(testutil::blobs(120, 3, 5, 2.0), 0.05, 1)),
               with_reward(RewardKind::kR5));
  std::mt19937_64 rng(5);
  for (int ep = 0; ep < 20; ++ep) {
    f.env.reset();
    const double r3_initial = compute_reward(RewardKind::kR3, f.env.table(), f.env.context()).raw;
    double sum = 0.0;
    for (size_t t = 0; t < 6; ++t) {
      StepOutcome o = f.env.step(rng() % 7);
      if (!o.penalized) sum += o.raw_reward / 5.0;
    }
    RewardContext fresh = RewardContext::make(f.env.context().reference, &f.hub);
    const double r3_final = compute_reward(RewardKind::kR3, f.env.table(), fresh).raw;
    EXPECT_NEAR(sum, r3_final - r3_initial, 1e-9);
  }
}

TEST(Env, RandomEpisodesStayInBounds) {
  EnvFixture f(testutil::mcar(inject_outliers(testutil::blobs(40, 3), 0.3, 2)), with_reward(RewardKind::kR4));
  std::mt19937_64 rng(1);
  for (int ep = 0; ep < 200; ++ep) {
    f.env.reset();
    std::vector<double> r;
    for (size_t t = 0; t < 6; ++t) {
      StepOutcome o = f.env.step(rng() % 7);
      EXPECT_GE(f.env.table().n_rows(), 10u);
      r.push_back(o.reward);
    }
    const double g = episode_return(r, 0.99);
    EXPECT_GE(g, -6.0);
    EXPECT_LE(g, 6.0);
  }
}

TEST(Env, TrajectoryLogIsJsonLines) {
  EnvFixture f(testutil::mcar(testutil::blobs(50, 2)), with_reward(RewardKind::kR1));
  std::ostringstream log;
  f.env.set_trajectory_log(&log);
  f.env.reset();
  f.env.step(0);
  f.env.step(1);
  std::istringstream is(log.str());
  std::string line;
  std::vector<nlohmann::json> lines;
  while (std::getline(is, line)) lines.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[1]["tags"][0], "repeat-penalty");
  EXPECT_EQ(lines[0]["state"].size(), 9u);
  EXPECT_EQ(lines[0]["action"], "impute(mean)");
}

TEST(Env, EpisodeReturnIsDiscounted) {
  const std::vector<double> r{1, 1, 1};
  EXPECT_NEAR(episode_return(r, 0.5), 1.75, 1e-15);
  EXPECT_NEAR(episode_return(r, 1.0), 3.0, 1e-15);
}
