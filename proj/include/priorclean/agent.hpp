#ifndef PRIORCLEAN_AGENT_HPP_
#define PRIORCLEAN_AGENT_HPP_

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "priorclean/env.hpp"
#include "priorclean/rng.hpp"

namespace priorclean {

struct PpoConfig {
  size_t hidden = 256;
  double learning_rate = 3e-4;
  double clip = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  size_t rollout = 256;
  size_t epochs = 4;
  size_t minibatch = 64;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  double adam_eps = 1e-5;
  double obs_clip = 10.0;
  size_t checkpoint_every = 2000;
  size_t rolling_window = 100;
  uint64_t seed = 42;
};

// Two tanh hidden layers and a linear head, float32, parameters stored in
// one flat vector: W1, b1, W2, b2, W3, b3 (column-major matrices).
class Mlp {
 public:
  Mlp() = default;
  Mlp(size_t in, size_t hidden, size_t out);

  void init(Rng& rng, double output_gain);
  size_t in() const { return in_; }
  size_t hidden() const { return hidden_; }
  size_t out() const { return out_; }
  Eigen::VectorXf& params() { return theta_; }
  const Eigen::VectorXf& params() const { return theta_; }

  struct Cache {
    Eigen::MatrixXf x, h1, h2, y;
  };
  // x is in x batch; returns out x batch and keeps activations in `cache`.
  const Eigen::MatrixXf& forward(const Eigen::MatrixXf& x, Cache& cache) const;
  // Accumulates d loss / d theta given d loss / d output.
  void backward(const Cache& cache, const Eigen::MatrixXf& dy, Eigen::VectorXf& grad) const;

 private:
  size_t in_ = 0;
  size_t hidden_ = 0;
  size_t out_ = 0;
  Eigen::VectorXf theta_;
};

struct PolicyCheckpoint {
  std::vector<float> actor;
  std::vector<float> critic;
  size_t input_dim = kStateDim;
  size_t hidden = 256;
  size_t n_actions = 0;
  size_t steps = 0;
  std::string dataset;
  std::string suite;
  std::string reward;
  bool converged = false;
  PpoConfig config;

  // Versioned binary container: magic "PCPOLICY", u32 version, u64 header
  // length, JSON header, u64 parameter count, little-endian float32 blob
  // (actor then critic).
  void save(const std::filesystem::path& path) const;
  static PolicyCheckpoint load(const std::filesystem::path& path);
  std::string serialize() const;
  static PolicyCheckpoint deserialize(const std::string& bytes, const std::string& origin);
};

struct EpisodeRecord {
  size_t end_step = 0;
  double reward = 0.0;  // undiscounted sum of clipped step rewards
};

struct TrainLog {
  std::vector<EpisodeRecord> episodes;
  std::vector<double> rolling;  // rolling mean after each episode
  // (step, rolling mean) at every checkpoint_every steps.
  std::vector<std::pair<size_t, double>> checkpoints;
  std::optional<size_t> convergence_step;
  size_t steps = 0;

  // Rolling mean of the last episode finished at or before `step`.
  std::optional<double> rolling_at(size_t step) const;
  // Mean reward of the last `n` episodes.
  double final_mean(size_t n = 100) const;
  // First step at which the rolling mean, taken over at least `min_episodes`
  // episodes, reaches `target`.
  std::optional<size_t> first_step_reaching(double target, size_t min_episodes = 100) const;
};

// Clipped-surrogate policy gradient with separate actor and critic MLPs,
// generalized advantage estimation and a single Adam optimizer.
class PpoAgent {
 public:
  PpoAgent(size_t n_actions, PpoConfig config);
  static PpoAgent from_checkpoint(const PolicyCheckpoint& ckpt, std::optional<PpoConfig> config = {});

  size_t n_actions() const { return actor_.out(); }
  const PpoConfig& config() const { return config_; }
  size_t steps_trained() const { return steps_; }

  std::vector<double> action_probs(const Observation& obs) const;
  // Argmax, ties to the lowest index.
  size_t act_greedy(const Observation& obs) const;
  double value(const Observation& obs) const;

  // Collects rollouts and updates for `steps` environment steps. Appends to
  // `log`, whose step counter continues from steps_trained().
  void train(Environment& env, size_t steps, TrainLog& log);

  struct Batch {
    Eigen::MatrixXf obs;  // kStateDim x n
    std::vector<size_t> actions;
    std::vector<float> logp_old;
    std::vector<float> advantages;
    std::vector<float> returns;
  };
  // Runs config.epochs passes of minibatch updates over `batch`.
  void update(const Batch& batch);
  std::vector<double> log_probs(const Eigen::MatrixXf& obs, const std::vector<size_t>& actions) const;

  PolicyCheckpoint checkpoint() const;

 private:
  Eigen::VectorXf clip_obs(const Observation& obs) const;
  void adam_step(Eigen::VectorXf& ga, Eigen::VectorXf& gc);

  PpoConfig config_;
  Mlp actor_;
  Mlp critic_;
  Eigen::VectorXf m_actor_, v_actor_, m_critic_, v_critic_;
  size_t adam_t_ = 0;
  size_t steps_ = 0;
  size_t episodes_ = 0;
  Rng rollout_rng_;
  Rng batch_rng_;
};

struct TrainResult {
  PolicyCheckpoint checkpoint;
  TrainLog log;
};

struct TrainMeta {
  std::string dataset;
  std::string suite;
  std::string reward;
};

// Throws InvalidArgument when total_steps is shorter than one episode.
TrainResult train_ppo(Environment& env, const PpoConfig& config, size_t total_steps,
                      const TrainMeta& meta = {});
// Continues optimization of `ckpt` on `env`. The action count must match.
TrainResult fine_tune(const PolicyCheckpoint& ckpt, Environment& env, size_t steps,
                      std::optional<PpoConfig> config = {});

// (r_scratch - r_finetune) / |r_scratch|; negative means fine-tuning leads.
double transfer_gap(double r_scratch, double r_finetune);

// Mean undiscounted episode reward of a uniform random policy.
double random_policy_mean(Environment& env, size_t episodes, uint64_t seed);
// Mean undiscounted episode reward of the greedy policy.
double greedy_policy_mean(const PpoAgent& agent, Environment& env, size_t episodes);

struct QConfig {
  double alpha = 0.1;
  double epsilon = 0.1;
  double gamma = 0.99;
  size_t warmup_episodes = 20;
  uint64_t seed = 42;
};

// Tabular Q-learning over a discretized observation: each quality scalar
// falls into one of 4 bins cut at the quartiles of warm-up observations
// from random play, and the three history bits are kept as-is.
struct QPolicy {
  size_t n_actions = 0;
  std::array<std::array<double, 3>, 6> edges{};
  std::map<uint32_t, std::vector<double>> q;

  uint32_t state_key(const Observation& obs) const;
  // Greedy action; unseen states and ties go to the lowest index.
  size_t act(const Observation& obs) const;
};

QPolicy q_learn_reference(Environment& env, size_t episodes, const QConfig& config = {});

}  // namespace priorclean

#endif  // PRIORCLEAN_AGENT_HPP_
