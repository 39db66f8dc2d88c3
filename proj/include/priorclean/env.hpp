#ifndef PRIORCLEAN_ENV_HPP_
#define PRIORCLEAN_ENV_HPP_

#include <array>
#include <cstddef>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "priorclean/actions.hpp"
#include "priorclean/cache.hpp"
#include "priorclean/observer.hpp"
#include "priorclean/rewards.hpp"

namespace priorclean {

using Observation = std::array<double, kStateDim>;

struct StepOutcome {
  Observation observation{};
  double reward = 0.0;      // clipped to [-1, 1]
  double raw_reward = 0.0;  // before clipping
  bool done = false;
  std::string info;  // applied action, or the guard tag
  bool penalized = false;
  bool guard_triggered = false;
  bool empty_table = false;
};

// Fixed-horizon episodic environment with a discrete action set.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual size_t num_actions() const = 0;
  virtual size_t horizon() const = 0;
  virtual Observation reset() = 0;
  virtual StepOutcome step(size_t action) = 0;
};

struct EnvConfig {
  size_t horizon = 6;
  double gamma = 0.99;
  double repeat_penalty = -0.5;
  size_t min_rows = 10;
  RewardKind reward = RewardKind::kR3;
  std::string suite = "discrete7";

  void validate() const;
};

// The cleaning MDP over one dirty table. A step applies one suite action to
// the working table; an action whose family was already used this episode
// costs `repeat_penalty` and changes nothing. Outlier removal that would
// leave fewer than `min_rows` rows is skipped. Working tables come from a
// cleaning cache keyed by the sequence of applied actions, so revisiting a
// state never recomputes it.
class CleaningEnv : public Environment {
 public:
  CleaningEnv(Table dirty, EnvConfig config, EvaluationHub& hub);

  size_t num_actions() const override { return suite_.actions.size(); }
  size_t horizon() const override { return config_.horizon; }
  Observation reset() override;
  StepOutcome step(size_t action) override;

  const EnvConfig& config() const { return config_; }
  const ActionSuite& suite() const { return suite_; }
  const Table& table() const { return current_->table; }
  const Pipeline& applied() const { return applied_; }
  const QualityState& state() const { return state_; }
  const RewardContext& context() const { return ctx_; }
  size_t step_count() const { return t_; }
  size_t episode() const { return episode_; }
  // Each step appends one JSON line: episode, step, action, tags, reward,
  // raw_reward, state.
  void set_trajectory_log(std::ostream* log) { log_ = log; }

 private:
  EnvConfig config_;
  ActionSuite suite_;
  EvaluationHub& hub_;
  CleaningCache cache_;
  Table dirty_;
  Digest dirty_fp_;
  RewardContext ctx_;
  std::shared_ptr<const CleanedTable> current_;
  Pipeline applied_;
  HistoryBits history_;
  QualityState state_;
  size_t t_ = 0;
  size_t episode_ = 0;
  bool started_ = false;
  std::ostream* log_ = nullptr;
};

// sum_t gamma^(t-1) r_t.
double episode_return(std::span<const double> rewards, double gamma);

}  // namespace priorclean

#endif  // PRIORCLEAN_ENV_HPP_
