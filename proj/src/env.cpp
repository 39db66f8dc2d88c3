#include "priorclean/env.hpp"

#include <cmath>
#include <json.hpp>

#include "priorclean/error.hpp"

namespace priorclean {

void EnvConfig::validate() const {
  if (horizon < 1) throw InvalidArgument("horizon must be at least 1");
  if (!(repeat_penalty >= -1.0 && repeat_penalty < 0.0)) {
    throw InvalidArgument("repeat penalty must lie in [-1, 0)");
  }
  if (min_rows < 1) throw InvalidArgument("min_rows must be at least 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
}

CleaningEnv::CleaningEnv(Table dirty, EnvConfig config, EvaluationHub& hub)
    : config_(std::move(config)),
      suite_(ActionSuite::by_name(config_.suite)),
      hub_(hub),
      cache_(ApplyOptions{config_.min_rows}),
      dirty_(std::move(dirty)),
      dirty_fp_(table_fingerprint(dirty_)),
      ctx_(RewardContext::make(dirty_, &hub_)) {
  config_.validate();
}

Observation CleaningEnv::reset() {
  current_ = cache_.get(dirty_, dirty_fp_, Pipeline{});
  applied_ = Pipeline{};
  history_ = HistoryBits{};
  ctx_.prev_r3.reset();
  t_ = 0;
  if (started_) ++episode_;
  started_ = true;
  state_ = observe(current_->table, ctx_.profile, history_);
  return state_.vector();
}

StepOutcome CleaningEnv::step(size_t action) {
  if (!started_) throw InvalidArgument("environment stepped before reset");
  if (t_ >= config_.horizon) throw InvalidArgument("episode already finished; call reset");
  if (action >= suite_.actions.size()) {
    throw InvalidArgument("action index " + std::to_string(action) + " out of range [0, " +
                          std::to_string(suite_.actions.size()) + ")");
  }
  ++t_;
  const Action& a = suite_.actions[action];
  bool* bit = nullptr;
  switch (a.family()) {
    case Family::kImputer: bit = &history_.imputer; break;
    case Family::kOutlier: bit = &history_.outlier; break;
    case Family::kScaler: bit = &history_.scaler; break;
    case Family::kDedup: bit = &history_.dedup; break;
  }
  StepOutcome out;
  std::vector<std::string> tags;
  if (*bit) {
    out.penalized = true;
    out.reward = out.raw_reward = config_.repeat_penalty;
    out.info = "repeat-penalty:" + a.canonical();
    tags.push_back("repeat-penalty");
  } else {
    Pipeline next = applied_;
    next.steps.push_back(a);
    auto cleaned = cache_.get(dirty_, dirty_fp_, next);
    out.guard_triggered = a.family() == Family::kOutlier && cleaned->guard_triggered;
    current_ = cleaned;
    applied_ = std::move(next);
    *bit = true;
    RewardValue r = compute_reward(config_.reward, current_->table, current_->fingerprint, ctx_);
    if (r.r3) ctx_.prev_r3 = r.r3;
    out.reward = r.value;
    out.raw_reward = r.raw;
    out.info = a.canonical();
    if (out.guard_triggered) {
      out.info += " [row-guard]";
      tags.push_back("row-guard");
    }
    if (current_->table.n_rows() == 0) {
      out.empty_table = true;
      tags.push_back("empty-table");
    }
    state_ = observe(current_->table, ctx_.profile, history_);
  }
  out.observation = state_.vector();
  out.done = t_ == config_.horizon;
  if (log_) {
    nlohmann::json line;
    line["episode"] = episode_;
    line["step"] = t_;
    line["action"] = a.canonical();
    line["tags"] = tags;
    line["reward"] = out.reward;
    line["raw_reward"] = out.raw_reward;
    line["state"] = out.observation;
    *log_ << line.dump() << '\n';
  }
  return out;
}

double episode_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  double w = 1.0;
  for (double r : rewards) {
    g += w * r;
    w *= gamma;
  }
  return g;
}

}  // namespace priorclean
