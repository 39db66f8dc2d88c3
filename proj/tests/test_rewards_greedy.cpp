#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <set>

#include "priorclean/error.hpp"
#include "priorclean/evaluator.hpp"
#include "priorclean/forest.hpp"
#include "priorclean/greedy.hpp"
#include "priorclean/observer.hpp"
#include "priorclean/rewards.hpp"
#include "test_util.hpp"

using namespace priorclean;

namespace {

struct Fixture {
  explicit Fixture(Table dirty) : hub(mock), session(std::move(dirty), hub, cache) {}
  CountingMockEvaluator mock;
  EvaluationHub hub;
  CleaningCache cache;
  SearchSession session;
};

bool deletes_rows(const Pipeline& p) {
  for (const auto& a : p.steps) {
    if (a.family() == Family::kOutlier || a.family() == Family::kDedup) return true;
  }
  return false;
}

bool has_imputer(const Pipeline& p) {
  for (const auto& a : p.steps) {
    if (a.family() == Family::kImputer) return true;
  }
  return false;
}

}  // namespace

TEST(Rewards, NamesAndAliases) {
  EXPECT_EQ(parse_reward_kind("r3"), RewardKind::kR3);
  EXPECT_EQ(parse_reward_kind("TfmAware"), RewardKind::kR7);
  EXPECT_EQ(parse_reward_kind("distortion+accuracy"), RewardKind::kR6ad);
  EXPECT_EQ(reward_alias(RewardKind::kR5), "incremental");
  EXPECT_EQ(core_rewards().size(), 7u);
  EXPECT_THROW(parse_reward_kind("R9"), InvalidArgument);
  EXPECT_TRUE(reward_uses_evaluator(RewardKind::kR7));
  EXPECT_FALSE(reward_uses_forest(RewardKind::kR1));
}

TEST(Rewards, QualityAndDivergencePrimitives) {
  Table t = inject_duplicates(testutil::blobs(40, 2), 0.25, 1);
  EXPECT_NEAR(duplicate_rate(t), 10.0 / 50.0, 1e-12);
  EXPECT_NEAR(quality_score(t), 0.8, 1e-12);
  std::vector<double> a{0, 0, 0, 1}, b{5, 5, 6, 6};
  EXPECT_NEAR(js_divergence(a, a), 0.0, 1e-12);
  EXPECT_NEAR(js_divergence(std::vector<double>{0, 0}, std::vector<double>{1, 1}), std::log(2.0), 1e-12);
  EXPECT_GT(js_divergence(a, b), 0.0);
}

TEST(Rewards, FormulasMatchComponents) {
  Fixture f(testutil::mcar(testutil::blobs(120, 3, 4, 2.0)));
  const RewardContext& ctx = f.session.context();
  Table c = apply_pipeline(f.session.dirty(), Pipeline::parse("outlier(iqr,t=1.5)->impute(mean)"));
  const double acc = cv_accuracy(c);
  const double ret = double(c.n_rows()) / 120.0;
  const double q = quality_score(c);
  const double w1 = wasserstein1_normalized(c, ctx.profile);
  const double comp = 1.0 - missing_rate(c);
  EXPECT_NEAR(compute_reward(RewardKind::kR1, c, ctx).raw, comp * std::sqrt(ret), 1e-12);
  EXPECT_NEAR(compute_reward(RewardKind::kR2, c, ctx).raw, acc, 1e-12);
  EXPECT_NEAR(compute_reward(RewardKind::kR3, c, ctx).raw, .5 * acc + .3 * ret + .2 * q - .1 * w1, 1e-12);
  EXPECT_NEAR(compute_reward(RewardKind::kR4, c, ctx).raw, .7 * acc + .2 * ret + .1 * q - .5 * w1, 1e-12);
  const double tfm = f.hub.evaluate(c, EvalProtocol::kReward)->accuracy;
  EXPECT_NEAR(compute_reward(RewardKind::kR7, c, ctx).raw,
              .5 * tfm + .35 * ret * ret + .15 * q - .05 * w1, 1e-12);
  const double r3_ref = compute_reward(RewardKind::kR3, f.session.dirty(), ctx).raw;
  const RewardValue r5 = compute_reward(RewardKind::kR5, c, ctx);
  EXPECT_NEAR(r5.raw, 5.0 * (*r5.r3 - r3_ref), 1e-12);
  const Distortion d = distortion(c, ctx);
  EXPECT_NEAR(d.weighted(), .3 * d.w1 + .25 * d.js + .2 * d.corr + .15 * d.logvar + .1 * d.skew, 1e-15);
  EXPECT_NEAR(compute_reward(RewardKind::kR6, c, ctx).raw, 1.0 - d.weighted(), 1e-12);
}

TEST(Rewards, ClippedAndEmptyTableScoresMinusOne) {
  Fixture f(testutil::mcar(testutil::blobs(60, 2)));
  Table empty = f.session.dirty().select_rows(std::vector<size_t>{}, "");
  for (RewardKind k : core_rewards()) {
    EXPECT_EQ(compute_reward(k, empty, f.session.context()).value, -1.0);
    const RewardValue v = compute_reward(k, f.session.dirty(), f.session.context());
    EXPECT_GE(v.value, -1.0);
    EXPECT_LE(v.value, 1.0);
  }
  RewardContext no_hub = RewardContext::make(f.session.dirty(), nullptr);
  EXPECT_THROW(compute_reward(RewardKind::kR3, f.session.dirty(), no_hub), InvalidArgument);
  EXPECT_NO_THROW(compute_reward(RewardKind::kR1, f.session.dirty(), no_hub));
}

TEST(Rewards, DistortionComponentsBounded) {
  Fixture f(testutil::mcar(testutil::blobs(80, 4)));
  for (const auto& p : enumerate_pipelines(ActionSuite::extended9())) {
    const Distortion d = distortion(apply_pipeline(f.session.dirty(), p), f.session.context());
    for (double v : {d.w1, d.js, d.corr, d.logvar, d.skew}) {
      EXPECT_GE(v, 0.0) << p.canonical();
      EXPECT_LE(v, 1.0) << p.canonical();
    }
  }
  const Distortion zero = distortion(f.session.dirty(), f.session.context());
  EXPECT_NEAR(zero.weighted(), 0.0, 1e-12);
}

TEST(Rewards, CollapseOnMcar) {
  Fixture f(testutil::mcar(testutil::blobs(150, 4, 9)));
  const auto pool = enumerate_pipelines(ActionSuite::discrete7());
  SearchReport r1 = greedy_search(f.session, pool, RewardKind::kR1);
  for (const auto& s : r1.scores) {
    if (has_imputer(s.pipeline) && !deletes_rows(s.pipeline)) {
      EXPECT_DOUBLE_EQ(s.reward, 1.0) << s.canonical;
    }
  }
  SearchReport r6 = greedy_search(f.session, pool, RewardKind::kR6);
  ASSERT_TRUE(r6.winner());
  EXPECT_EQ(r6.winner()->canonical, "noop");
}

TEST(Greedy, CallAccountingWithMock) {
  Fixture f(testutil::mcar(inject_outliers(testutil::blobs(200, 4, 7, 1.5), 0.05, 3)));
  const auto pool = subsample_pipelines(enumerate_pipelines(ActionSuite::discrete7()), 20, 42);
  std::set<Digest> distinct;
  for (const auto& p : pool) distinct.insert(table_fingerprint(apply_pipeline(f.session.dirty(), p)));
  ASSERT_EQ(distinct.size(), 20u);
  SearchReport a = greedy_search(f.session, pool, RewardKind::kR7);
  EXPECT_EQ(a.evaluator_calls, 22u);
  EXPECT_EQ(f.mock.calls(), 22u);
  SearchReport b = greedy_search(f.session, pool, RewardKind::kR7);
  EXPECT_EQ(b.evaluator_calls, 0u);
  EXPECT_EQ(f.mock.calls(), 22u);
  ASSERT_EQ(a.baselines.size(), 2u);
  EXPECT_EQ(a.baselines[0].name, "B0");
  EXPECT_EQ(a.baselines[1].pipeline, "impute(mean)->scale(minmax)");
}

TEST(Greedy, ParallelMatchesSerial) {
  Fixture f(testutil::mcar(testutil::blobs(120, 3)));
  Fixture g(testutil::mcar(testutil::blobs(120, 3)));
  const auto pool = enumerate_pipelines(ActionSuite::discrete7());
  SearchOptions par;
  par.threads = 4;
  SearchReport a = greedy_search(f.session, pool, RewardKind::kR3);
  SearchReport b = greedy_search(g.session, pool, RewardKind::kR3, par);
  ASSERT_EQ(a.scores.size(), b.scores.size());
  for (size_t i = 0; i < a.scores.size(); ++i) EXPECT_EQ(a.scores[i].reward, b.scores[i].reward);
  EXPECT_EQ(a.best, b.best);
}

TEST(Greedy, TiesPreferShorterThenLexicographic) {
  // Without missing values every imputer is the identity, so R1 ties at 1.
  Fixture f(testutil::blobs(60, 2));
  const auto pool = enumerate_pipelines(ActionSuite::discrete7());
  SearchReport r = greedy_search(f.session, pool, RewardKind::kR1);
  EXPECT_EQ(r.winner()->canonical, "noop");
  std::vector<Pipeline> no_noop(pool.begin() + 1, pool.end());
  SearchReport s = greedy_search(f.session, no_noop, RewardKind::kR1);
  EXPECT_EQ(s.winner()->canonical, "impute(knn,k=5)");
}

TEST(Greedy, FailuresAreReportedAndExcluded) {
  CountingMockEvaluator mock([](const Table& train, const Table&) {
    for (const auto& c : train.columns()) {
      double lo = 1e300, hi = -1e300;
      for (double v : c.observed()) lo = std::min(lo, v), hi = std::max(hi, v);
      if (lo >= 0.0 && hi <= 1.0) return true;  // fail on min-max scaled tables
    }
    return false;
  });
  EvaluationHub hub(mock);
  CleaningCache cache;
  SearchSession s(testutil::mcar(testutil::blobs(100, 2)), hub, cache);
  SearchReport r = greedy_search(s, enumerate_pipelines(ActionSuite::discrete7()), RewardKind::kR7);
  EXPECT_GT(r.failures, 0u);
  ASSERT_TRUE(r.winner());
  EXPECT_FALSE(r.winner()->failed);
  EXPECT_EQ(r.winner()->canonical.find("minmax"), std::string::npos);
  EXPECT_TRUE(r.baselines[1].failed);
}

TEST(Greedy, BaselinesAndTaxonomyCsv) {
  Fixture f(testutil::mcar(testutil::blobs(100, 3)));
  const auto rows = run_baselines(f.session);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[2].pipeline, "impute(mean)->scale(zscore)");
  EXPECT_EQ(baseline_pipeline("B1").canonical(), "impute(mean)->scale(minmax)");
  EXPECT_THROW(baseline_pipeline("B9"), InvalidArgument);
  const auto pool = subsample_pipelines(enumerate_pipelines(ActionSuite::discrete7()), 10, 1);
  TaxonomyReport tax = rank_rewards(f.session, pool, {RewardKind::kR1, RewardKind::kR3});
  const std::string csv = taxonomy_csv(tax, "d");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dataset,reward,pipeline,length,score,raw,accuracy,ece,n_rows,status");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
  const std::string sc = scatter_csv(tax, "d");
  EXPECT_EQ(sc.substr(0, sc.find('\n')), "dataset,reward,pipeline,score,accuracy");
}

TEST(Greedy, IdenticalCleanedTablesShareOneEvaluation) {
  // No missing values: all three imputers return the dirty table.
  Fixture f(testutil::blobs(80, 2));
  std::vector<Pipeline> pool{Pipeline{}, Pipeline::parse("impute(mean)"), Pipeline::parse("impute(median)"),
                             Pipeline::parse("impute(knn,k=5)")};
  SearchOptions o;
  o.baselines = false;
  SearchReport r = greedy_search(f.session, pool, RewardKind::kR7, o);
  EXPECT_EQ(r.evaluator_calls, 1u);
  EXPECT_EQ(r.winner()->canonical, "noop");
}
