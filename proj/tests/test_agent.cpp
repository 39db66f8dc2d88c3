#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "priorclean/agent.hpp"
#include "priorclean/error.hpp"
#include "priorclean/evaluator.hpp"
#include "test_util.hpp"

using namespace priorclean;

namespace {

// One-state bandit stretched over a fixed horizon: action `good` pays 1.
class BanditEnv : public Environment {
 public:
  BanditEnv(size_t actions, size_t good, size_t horizon = 6) : n_(actions), good_(good), h_(horizon) {}
  size_t num_actions() const override { return n_; }
  size_t horizon() const override { return h_; }
  Observation reset() override {
    t_ = 0;
    return obs();
  }
  StepOutcome step(size_t a) override {
    ++t_;
    StepOutcome o;
    o.reward = o.raw_reward = (a == good_) ? 1.0 : 0.0;
    o.observation = obs();
    o.done = t_ == h_;
    return o;
  }

 private:
  Observation obs() const {
    Observation o{};
    o[0] = double(t_) / double(h_);
    return o;
  }
  size_t n_, good_, h_, t_ = 0;
};

PpoConfig small_config() {
  PpoConfig c;
  c.hidden = 32;
  c.rollout = 64;
  c.minibatch = 16;
  return c;
}

}  // namespace

TEST(Mlp, GradientMatchesFiniteDifferences) {
  Mlp net(3, 5, 2);
  Rng rng(1);
  net.init(rng, 1.0);
  Eigen::MatrixXf x(3, 4);
  x.setRandom();
  Eigen::MatrixXf w(2, 4);
  w.setRandom();
  // loss = sum(w .* f(x))
  Mlp::Cache cache;
  net.forward(x, cache);
  Eigen::VectorXf grad = Eigen::VectorXf::Zero(net.params().size());
  net.backward(cache, w, grad);
  const float eps = 1e-2f;
  for (Eigen::Index i = 0; i < net.params().size(); i += 3) {
    const float keep = net.params()[i];
    net.params()[i] = keep + eps;
    Mlp::Cache c1;
    const double up = (net.forward(x, c1).array() * w.array()).sum();
    net.params()[i] = keep - eps;
    Mlp::Cache c2;
    const double down = (net.forward(x, c2).array() * w.array()).sum();
    net.params()[i] = keep;
    EXPECT_NEAR(grad[i], (up - down) / (2 * eps), 2e-3) << "param " << i;
  }
}

TEST(Ppo, ProbabilitiesAndGreedyAction) {
  PpoAgent agent(7, small_config());
  Observation o{};
  const auto p = agent.action_probs(o);
  ASSERT_EQ(p.size(), 7u);
  double s = 0;
  for (double v : p) s += v;
  EXPECT_NEAR(s, 1.0, 1e-6);
  EXPECT_LT(agent.act_greedy(o), 7u);
  EXPECT_THROW(PpoAgent(0, small_config()), InvalidArgument);
}

TEST(Ppo, LearnsBanditAndIsDeterministic) {
  BanditEnv e1(4, 2), e2(4, 2);
  const TrainResult a = train_ppo(e1, small_config(), 3000);
  const TrainResult b = train_ppo(e2, small_config(), 3000);
  EXPECT_EQ(a.checkpoint.actor, b.checkpoint.actor);
  EXPECT_EQ(a.log.steps, 3000u);
  EXPECT_EQ(a.log.episodes.size(), 500u);
  EXPECT_GT(a.log.final_mean(100), 5.0);
  PpoAgent agent = PpoAgent::from_checkpoint(a.checkpoint);
  EXPECT_EQ(agent.act_greedy(e1.reset()), 2u);
  ASSERT_FALSE(a.log.checkpoints.empty());
  EXPECT_EQ(a.log.checkpoints.front().first, 2000u);
  EXPECT_THROW(train_ppo(e1, small_config(), 5), InvalidArgument);
}

TEST(Ppo, SmallLearningRateKeepsRatiosNearOne) {
  BanditEnv env(5, 1);
  PpoConfig c = small_config();
  c.learning_rate = 1e-5;
  PpoAgent agent(5, c);
  PpoAgent::Batch batch;
  batch.obs = Eigen::MatrixXf::Random(kStateDim, 64);
  Rng rng(3);
  for (int i = 0; i < 64; ++i) {
    batch.actions.push_back(rng.uniform_index(5));
    batch.advantages.push_back(static_cast<float>(rng.normal()));
    batch.returns.push_back(static_cast<float>(rng.normal()));
  }
  for (double lp : agent.log_probs(batch.obs, batch.actions)) batch.logp_old.push_back(static_cast<float>(lp));
  agent.update(batch);
  const auto after = agent.log_probs(batch.obs, batch.actions);
  double worst = 0;
  for (size_t i = 0; i < after.size(); ++i) worst = std::max(worst, std::fabs(std::exp(after[i] - batch.logp_old[i]) - 1.0));
  EXPECT_LT(worst, 0.05);
  EXPECT_GT(worst, 0.0);
}

TEST(Ppo, NonFiniteWeightsRaiseNumericalError) {
  BanditEnv env(3, 0);
  PpoAgent fresh(3, small_config());
  PolicyCheckpoint ck = fresh.checkpoint();
  ck.actor[0] = std::numeric_limits<float>::quiet_NaN();
  PpoAgent broken = PpoAgent::from_checkpoint(ck);
  TrainLog log;
  try {
    broken.train(env, 12, log);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("episode 1"), std::string::npos);
  }
}

TEST(Checkpoint, RoundTripAndCorruption) {
  BanditEnv env(4, 3);
  TrainResult r = train_ppo(env, small_config(), 300, {"d", "discrete7", "R3"});
  testutil::TempDir dir;
  r.checkpoint.save(dir / "p.pcp");
  PolicyCheckpoint back = PolicyCheckpoint::load(dir / "p.pcp");
  EXPECT_EQ(back.actor, r.checkpoint.actor);
  EXPECT_EQ(back.critic, r.checkpoint.critic);
  EXPECT_EQ(back.steps, 300u);
  EXPECT_EQ(back.dataset, "d");
  EXPECT_EQ(back.config.hidden, 32u);
  const std::string bytes = r.checkpoint.serialize();
  EXPECT_EQ(bytes.substr(0, 8), "PCPOLICY");
  EXPECT_THROW(PolicyCheckpoint::deserialize("NOTAPOLICY", "x"), IoError);
  EXPECT_THROW(PolicyCheckpoint::deserialize(bytes.substr(0, bytes.size() - 3), "x"), IoError);
  std::string wrong_version = bytes;
  wrong_version[8] = 9;
  EXPECT_THROW(PolicyCheckpoint::deserialize(wrong_version, "x"), IoError);
  EXPECT_THROW(PolicyCheckpoint::load(dir / "missing.pcp"), IoError);
}

TEST(FineTune, ContinuesFromCheckpoint) {
  BanditEnv src(4, 1), dst(4, 1), other(5, 1);
  TrainResult base = train_ppo(src, small_config(), 2000);
  EXPECT_THROW(fine_tune(base.checkpoint, other, 100), InvalidArgument);
  TrainResult same = fine_tune(base.checkpoint, dst, 0);
  EXPECT_EQ(same.checkpoint.actor, base.checkpoint.actor);
  EXPECT_TRUE(same.log.episodes.empty());
  TrainResult ft = fine_tune(base.checkpoint, dst, 600, small_config());
  EXPECT_EQ(ft.checkpoint.steps, 2600u);
  EXPECT_EQ(ft.log.steps, 600u);
  // Starting from a trained policy, the first episodes already pay off.
  EXPECT_GT(ft.log.episodes.front().reward, 3.0);
  EXPECT_NEAR(transfer_gap(2.0, 2.5), -0.25, 1e-15);
  EXPECT_THROW(transfer_gap(0.0, 1.0), InvalidArgument);
}

TEST(QLearning, FindsBanditArmAndHandlesZeroEpisodes) {
  BanditEnv env(4, 3, 1);
  QPolicy zero = q_learn_reference(env, 0);
  EXPECT_EQ(zero.act(env.reset()), 0u);
  QPolicy q = q_learn_reference(env, 300);
  EXPECT_EQ(q.act(env.reset()), 3u);
}

TEST(Baselines, RandomAndGreedyPolicyMeans) {
  BanditEnv env(4, 0);
  EXPECT_NEAR(random_policy_mean(env, 2000, 1), 1.5, 0.15);
  TrainResult r = train_ppo(env, small_config(), 2400);
  EXPECT_DOUBLE_EQ(greedy_policy_mean(PpoAgent::from_checkpoint(r.checkpoint), env, 3), 6.0);
}
