#include "priorclean/agent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "priorclean/analysis.hpp"
#include "priorclean/error.hpp"
#include "priorclean/stats.hpp"

namespace priorclean {

using Eigen::MatrixXf;
using Eigen::VectorXf;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'C', 'P', 'O', 'L', 'I', 'C', 'Y'};
constexpr uint32_t kVersion = 1;

size_t mlp_size(size_t in, size_t h, size_t out) {
  return h * in + h + h * h + h + out * h + out;
}

// Row-wise softmax of a column vector of logits.
VectorXf softmax(const Eigen::Ref<const VectorXf>& logits) {
  const float m = logits.maxCoeff();
  VectorXf e = (logits.array() - m).exp();
  return e / e.sum();
}

json config_json(const PpoConfig& c) {
  return {{"hidden", c.hidden},
          {"learning_rate", c.learning_rate},
          {"clip", c.clip},
          {"gamma", c.gamma},
          {"gae_lambda", c.gae_lambda},
          {"rollout", c.rollout},
          {"epochs", c.epochs},
          {"minibatch", c.minibatch},
          {"entropy_coef", c.entropy_coef},
          {"value_coef", c.value_coef},
          {"max_grad_norm", c.max_grad_norm},
          {"adam_eps", c.adam_eps},
          {"obs_clip", c.obs_clip},
          {"checkpoint_every", c.checkpoint_every},
          {"rolling_window", c.rolling_window},
          {"seed", c.seed}};
}

PpoConfig config_from_json(const json& j) {
  PpoConfig c;
  c.hidden = j.at("hidden");
  c.learning_rate = j.at("learning_rate");
  c.clip = j.at("clip");
  c.gamma = j.at("gamma");
  c.gae_lambda = j.at("gae_lambda");
  c.rollout = j.at("rollout");
  c.epochs = j.at("epochs");
  c.minibatch = j.at("minibatch");
  c.entropy_coef = j.at("entropy_coef");
  c.value_coef = j.at("value_coef");
  c.max_grad_norm = j.at("max_grad_norm");
  c.adam_eps = j.at("adam_eps");
  c.obs_clip = j.at("obs_clip");
  c.checkpoint_every = j.at("checkpoint_every");
  c.rolling_window = j.at("rolling_window");
  c.seed = j.at("seed");
  return c;
}

template <typename T>
void put(std::string& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof v];
    std::memcpy(b, &v, sizeof v);
    std::reverse(b, b + sizeof v);
    out.append(reinterpret_cast<const char*>(b), sizeof v);
  } else {
    out.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
}

template <typename T>
T take(const std::string& in, size_t& pos, const std::string& origin) {
  if (pos + sizeof(T) > in.size()) throw IoError("truncated policy checkpoint " + origin);
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof b);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof b);
  pos += sizeof b;
  T v;
  std::memcpy(&v, b, sizeof v);
  return v;
}

}  // namespace

Mlp::Mlp(size_t in, size_t hidden, size_t out)
    : in_(in), hidden_(hidden), out_(out), theta_(VectorXf::Zero(static_cast<Eigen::Index>(mlp_size(in, hidden, out)))) {}

void Mlp::init(Rng& rng, double output_gain) {
  theta_.setZero();
  size_t off = 0;
  auto fill = [&](size_t rows, size_t cols, double gain) {
    const double scale = gain / std::sqrt(static_cast<double>(cols));
    for (size_t k = 0; k < rows * cols; ++k) theta_[static_cast<Eigen::Index>(off + k)] = static_cast<float>(scale * rng.normal());
    off += rows * cols + rows;  // weights then zero biases
  };
  fill(hidden_, in_, std::sqrt(2.0));
  fill(hidden_, hidden_, std::sqrt(2.0));
  fill(out_, hidden_, output_gain);
}

const MatrixXf& Mlp::forward(const MatrixXf& x, Cache& c) const {
  const auto h = static_cast<Eigen::Index>(hidden_);
  const auto n = static_cast<Eigen::Index>(in_);
  const auto o = static_cast<Eigen::Index>(out_);
  const float* p = theta_.data();
  Eigen::Map<const MatrixXf> w1(p, h, n);
  Eigen::Map<const VectorXf> b1(p + h * n, h);
  p += h * n + h;
  Eigen::Map<const MatrixXf> w2(p, h, h);
  Eigen::Map<const VectorXf> b2(p + h * h, h);
  p += h * h + h;
  Eigen::Map<const MatrixXf> w3(p, o, h);
  Eigen::Map<const VectorXf> b3(p + o * h, o);
  c.x = x;
  c.h1 = ((w1 * x).colwise() + b1).array().tanh();
  c.h2 = ((w2 * c.h1).colwise() + b2).array().tanh();
  c.y = (w3 * c.h2).colwise() + b3;
  return c.y;
}

void Mlp::backward(const Cache& c, const MatrixXf& dy, VectorXf& grad) const {
  const auto h = static_cast<Eigen::Index>(hidden_);
  const auto n = static_cast<Eigen::Index>(in_);
  const auto o = static_cast<Eigen::Index>(out_);
  const float* p = theta_.data();
  Eigen::Map<const MatrixXf> w2(p + h * n + h, h, h);
  Eigen::Map<const MatrixXf> w3(p + h * n + h + h * h + h, o, h);
  float* g = grad.data();
  Eigen::Map<MatrixXf> gw1(g, h, n);
  Eigen::Map<VectorXf> gb1(g + h * n, h);
  g += h * n + h;
  Eigen::Map<MatrixXf> gw2(g, h, h);
  Eigen::Map<VectorXf> gb2(g + h * h, h);
  g += h * h + h;
  Eigen::Map<MatrixXf> gw3(g, o, h);
  Eigen::Map<VectorXf> gb3(g + o * h, o);

  gw3 += dy * c.h2.transpose();
  gb3 += dy.rowwise().sum();
  MatrixXf dz2 = ((w3.transpose() * dy).array() * (1.0f - c.h2.array().square())).matrix();
  gw2 += dz2 * c.h1.transpose();
  gb2 += dz2.rowwise().sum();
  MatrixXf dz1 = ((w2.transpose() * dz2).array() * (1.0f - c.h1.array().square())).matrix();
  gw1 += dz1 * c.x.transpose();
  gb1 += dz1.rowwise().sum();
}

std::string PolicyCheckpoint::serialize() const {
  json header = {{"format", "priorclean-policy"},
                 {"input_dim", input_dim},
                 {"hidden", hidden},
                 {"n_actions", n_actions},
                 {"steps", steps},
                 {"dataset", dataset},
                 {"suite", suite},
                 {"reward", reward},
                 {"converged", converged},
                 {"n_actor", actor.size()},
                 {"n_critic", critic.size()},
                 {"config", config_json(config)}};
  const std::string h = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put<uint32_t>(out, kVersion);
  put<uint64_t>(out, h.size());
  out += h;
  put<uint64_t>(out, actor.size() + critic.size());
  for (float v : actor) put<float>(out, v);
  for (float v : critic) put<float>(out, v);
  return out;
}

PolicyCheckpoint PolicyCheckpoint::deserialize(const std::string& in, const std::string& origin) {
  if (in.size() < sizeof kMagic || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    throw IoError(origin + " is not a policy checkpoint");
  }
  size_t pos = sizeof kMagic;
  const auto version = take<uint32_t>(in, pos, origin);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + origin);
  }
  const auto hlen = take<uint64_t>(in, pos, origin);
  if (pos + hlen > in.size()) throw IoError("truncated policy checkpoint " + origin);
  PolicyCheckpoint c;
  try {
    const json h = json::parse(in.substr(pos, hlen));
    c.input_dim = h.at("input_dim");
    c.hidden = h.at("hidden");
    c.n_actions = h.at("n_actions");
    c.steps = h.at("steps");
    c.dataset = h.at("dataset");
    c.suite = h.at("suite");
    c.reward = h.at("reward");
    c.converged = h.at("converged");
    c.config = config_from_json(h.at("config"));
    c.actor.resize(h.at("n_actor").get<size_t>());
    c.critic.resize(h.at("n_critic").get<size_t>());
  } catch (const json::exception& e) {
    throw IoError("bad checkpoint header in " + origin + ": " + e.what());
  }
  pos += hlen;
  const auto count = take<uint64_t>(in, pos, origin);
  if (count != c.actor.size() + c.critic.size() ||
      c.actor.size() != mlp_size(c.input_dim, c.hidden, c.n_actions) ||
      c.critic.size() != mlp_size(c.input_dim, c.hidden, 1)) {
    throw IoError("checkpoint parameter count does not match its header in " + origin);
  }
  for (float& v : c.actor) v = take<float>(in, pos, origin);
  for (float& v : c.critic) v = take<float>(in, pos, origin);
  if (pos != in.size()) throw IoError("trailing bytes in policy checkpoint " + origin);
  return c;
}

void PolicyCheckpoint::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  const std::string bytes = serialize();
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path.string());
}

PolicyCheckpoint PolicyCheckpoint::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize(ss.str(), path.string());
}

std::optional<double> TrainLog::rolling_at(size_t step) const {
  std::optional<double> out;
  for (size_t i = 0; i < episodes.size() && episodes[i].end_step <= step; ++i) out = rolling[i];
  return out;
}

double TrainLog::final_mean(size_t n) const {
  if (episodes.empty()) return 0.0;
  const size_t k = std::min(n, episodes.size());
  double s = 0.0;
  for (size_t i = episodes.size() - k; i < episodes.size(); ++i) s += episodes[i].reward;
  return s / static_cast<double>(k);
}

std::optional<size_t> TrainLog::first_step_reaching(double target, size_t min_episodes) const {
  for (size_t i = min_episodes > 0 ? min_episodes - 1 : 0; i < episodes.size(); ++i) {
    if (rolling[i] >= target) return episodes[i].end_step;
  }
  return std::nullopt;
}

PpoAgent::PpoAgent(size_t n_actions, PpoConfig config)
    : config_(config),
      actor_(kStateDim, config.hidden, n_actions),
      critic_(kStateDim, config.hidden, 1),
      rollout_rng_(derive_seed(config.seed, "rollout")),
      batch_rng_(derive_seed(config.seed, "minibatch")) {
  if (n_actions == 0) throw InvalidArgument("policy needs at least one action");
  if (config.hidden == 0 || config.rollout == 0 || config.minibatch == 0 || config.epochs == 0) {
    throw InvalidArgument("PPO sizes must be positive");
  }
  Rng init(derive_seed(config.seed, "init"));
  actor_.init(init, 0.01);
  critic_.init(init, 1.0);
  m_actor_ = v_actor_ = VectorXf::Zero(actor_.params().size());
  m_critic_ = v_critic_ = VectorXf::Zero(critic_.params().size());
}

PpoAgent PpoAgent::from_checkpoint(const PolicyCheckpoint& ckpt, std::optional<PpoConfig> config) {
  PpoConfig c = config.value_or(ckpt.config);
  c.hidden = ckpt.hidden;
  PpoAgent agent(ckpt.n_actions, c);
  agent.actor_.params() = Eigen::Map<const VectorXf>(ckpt.actor.data(), static_cast<Eigen::Index>(ckpt.actor.size()));
  agent.critic_.params() = Eigen::Map<const VectorXf>(ckpt.critic.data(), static_cast<Eigen::Index>(ckpt.critic.size()));
  agent.steps_ = ckpt.steps;
  return agent;
}

PolicyCheckpoint PpoAgent::checkpoint() const {
  PolicyCheckpoint c;
  c.actor.assign(actor_.params().data(), actor_.params().data() + actor_.params().size());
  c.critic.assign(critic_.params().data(), critic_.params().data() + critic_.params().size());
  c.hidden = config_.hidden;
  c.n_actions = n_actions();
  c.steps = steps_;
  c.config = config_;
  return c;
}

VectorXf PpoAgent::clip_obs(const Observation& obs) const {
  VectorXf x(static_cast<Eigen::Index>(kStateDim));
  const auto c = static_cast<float>(config_.obs_clip);
  for (size_t k = 0; k < kStateDim; ++k) {
    x[static_cast<Eigen::Index>(k)] = std::clamp(static_cast<float>(obs[k]), -c, c);
  }
  return x;
}

std::vector<double> PpoAgent::action_probs(const Observation& obs) const {
  Mlp::Cache cache;
  const MatrixXf& logits = actor_.forward(clip_obs(obs), cache);
  const VectorXf p = softmax(logits.col(0));
  return std::vector<double>(p.data(), p.data() + p.size());
}

size_t PpoAgent::act_greedy(const Observation& obs) const {
  const auto p = action_probs(obs);
  return static_cast<size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

double PpoAgent::value(const Observation& obs) const {
  Mlp::Cache cache;
  return critic_.forward(clip_obs(obs), cache)(0, 0);
}

std::vector<double> PpoAgent::log_probs(const MatrixXf& obs, const std::vector<size_t>& actions) const {
  Mlp::Cache cache;
  const MatrixXf& logits = actor_.forward(obs, cache);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < logits.cols(); ++i) {
    const VectorXf p = softmax(logits.col(i));
    out.push_back(std::log(static_cast<double>(p[static_cast<Eigen::Index>(actions[static_cast<size_t>(i)])])));
  }
  return out;
}

void PpoAgent::adam_step(VectorXf& ga, VectorXf& gc) {
  const double norm = std::sqrt(static_cast<double>(ga.squaredNorm()) + static_cast<double>(gc.squaredNorm()));
  if (!std::isfinite(norm)) throw NumericalError("non-finite policy gradient");
  if (norm > config_.max_grad_norm) {
    const auto s = static_cast<float>(config_.max_grad_norm / (norm + 1e-6));
    ga *= s;
    gc *= s;
  }
  ++adam_t_;
  const float b1 = 0.9f;
  const float b2 = 0.999f;
  const float lr = static_cast<float>(config_.learning_rate);
  const float eps = static_cast<float>(config_.adam_eps);
  const float c1 = 1.0f - std::pow(b1, static_cast<float>(adam_t_));
  const float c2 = 1.0f - std::pow(b2, static_cast<float>(adam_t_));
  auto apply = [&](VectorXf& theta, VectorXf& m, VectorXf& v, const VectorXf& g) {
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
    theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  apply(actor_.params(), m_actor_, v_actor_, ga);
  apply(critic_.params(), m_critic_, v_critic_, gc);
}

void PpoAgent::update(const Batch& batch) {
  const size_t n = batch.actions.size();
  if (n == 0) return;
  const size_t a_dim = n_actions();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    batch_rng_.shuffle(order);
    for (size_t start = 0; start < n; start += config_.minibatch) {
      const size_t m = std::min(config_.minibatch, n - start);
      MatrixXf x(static_cast<Eigen::Index>(kStateDim), static_cast<Eigen::Index>(m));
      std::vector<float> adv(m);
      for (size_t k = 0; k < m; ++k) {
        x.col(static_cast<Eigen::Index>(k)) = batch.obs.col(static_cast<Eigen::Index>(order[start + k]));
        adv[k] = batch.advantages[order[start + k]];
      }
      if (m > 1) {
        const float mu = std::accumulate(adv.begin(), adv.end(), 0.0f) / static_cast<float>(m);
        float var = 0.0f;
        for (float a : adv) var += (a - mu) * (a - mu);
        const float sd = std::sqrt(var / static_cast<float>(m - 1));
        for (float& a : adv) a = (a - mu) / (sd + 1e-8f);
      }
      Mlp::Cache ac;
      Mlp::Cache cc;
      const MatrixXf& logits = actor_.forward(x, ac);
      const MatrixXf& values = critic_.forward(x, cc);
      MatrixXf dlogits(static_cast<Eigen::Index>(a_dim), static_cast<Eigen::Index>(m));
      MatrixXf dvalues(1, static_cast<Eigen::Index>(m));
      const float inv = 1.0f / static_cast<float>(m);
      for (size_t k = 0; k < m; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        const size_t idx = order[start + k];
        const VectorXf p = softmax(logits.col(col));
        if (!p.allFinite()) throw NumericalError("non-finite policy logits during update");
        const auto a = static_cast<Eigen::Index>(batch.actions[idx]);
        const float logp = std::log(std::max(p[a], 1e-30f));
        const float ratio = std::exp(logp - batch.logp_old[idx]);
        const float clipped = std::clamp(ratio, 1.0f - static_cast<float>(config_.clip),
                                         1.0f + static_cast<float>(config_.clip));
        // d(-min(r A, clip(r) A)) / d logp; zero when the clipped branch is active.
        const float g_logp = ratio * adv[k] <= clipped * adv[k] ? -ratio * adv[k] : 0.0f;
        VectorXf logpv = p.array().max(1e-30f).log();
        const float entropy = -(p.array() * logpv.array()).sum();
        VectorXf d = -g_logp * p;
        d[a] += g_logp;
        d += static_cast<float>(config_.entropy_coef) * (p.array() * (logpv.array() + entropy)).matrix();
        dlogits.col(col) = d * inv;
        dvalues(0, col) = static_cast<float>(config_.value_coef) * 2.0f *
                          (values(0, col) - batch.returns[idx]) * inv;
      }
      VectorXf ga = VectorXf::Zero(actor_.params().size());
      VectorXf gc = VectorXf::Zero(critic_.params().size());
      actor_.backward(ac, dlogits, ga);
      critic_.backward(cc, dvalues, gc);
      adam_step(ga, gc);
    }
  }
}

void PpoAgent::train(Environment& env, size_t steps, TrainLog& log) {
  if (env.num_actions() != n_actions()) {
    throw InvalidArgument("policy has " + std::to_string(n_actions()) + " actions but the environment has " +
                          std::to_string(env.num_actions()));
  }
  if (steps == 0) return;
  const float gamma = static_cast<float>(config_.gamma);
  const float lambda = static_cast<float>(config_.gae_lambda);
  Observation obs = env.reset();
  double ep_reward = 0.0;

  std::vector<VectorXf> xs;
  std::vector<size_t> acts;
  std::vector<float> logps, vals, rews;
  std::vector<uint8_t> dones;
  const size_t end = steps_ + steps;
  std::vector<double> ep_rewards;
  for (const auto& e : log.episodes) ep_rewards.push_back(e.reward);

  while (steps_ < end) {
    const VectorXf x = clip_obs(obs);
    Mlp::Cache ac;
    const MatrixXf& logits = actor_.forward(x, ac);
    if (!logits.allFinite()) {
      throw NumericalError("non-finite policy logits in episode " + std::to_string(episodes_ + 1) +
                           " at step " + std::to_string(steps_ + 1));
    }
    const VectorXf p = softmax(logits.col(0));
    double u = rollout_rng_.uniform();
    size_t a = 0;
    for (; a + 1 < n_actions(); ++a) {
      u -= p[static_cast<Eigen::Index>(a)];
      if (u < 0.0) break;
    }
    Mlp::Cache cc;
    const float v = critic_.forward(x, cc)(0, 0);
    const StepOutcome out = env.step(a);
    ++steps_;
    xs.push_back(x);
    acts.push_back(a);
    logps.push_back(std::log(std::max(p[static_cast<Eigen::Index>(a)], 1e-30f)));
    vals.push_back(v);
    rews.push_back(static_cast<float>(out.reward));
    dones.push_back(out.done);
    ep_reward += out.reward;
    if (out.done) {
      ++episodes_;
      ep_rewards.push_back(ep_reward);
      log.episodes.push_back({steps_, ep_reward});
      const size_t w = config_.rolling_window;
      const size_t k = std::min(w, ep_rewards.size());
      double s = 0.0;
      for (size_t i = ep_rewards.size() - k; i < ep_rewards.size(); ++i) s += ep_rewards[i];
      log.rolling.push_back(s / static_cast<double>(k));
      ep_reward = 0.0;
    }
    if (config_.checkpoint_every && steps_ % config_.checkpoint_every == 0) {
      log.checkpoints.emplace_back(steps_, log.rolling.empty() ? 0.0 : log.rolling.back());
    }
    const bool flush = xs.size() == config_.rollout || steps_ == end;
    float bootstrap = 0.0f;
    if (out.done) {
      if (steps_ < end) obs = env.reset();
    } else {
      obs = out.observation;
      if (flush) bootstrap = static_cast<float>(value(obs));
    }
    if (!flush) continue;
    const size_t n = xs.size();
    Batch b;
    b.obs.resize(static_cast<Eigen::Index>(kStateDim), static_cast<Eigen::Index>(n));
    b.advantages.resize(n);
    b.returns.resize(n);
    float gae = 0.0f;
    for (size_t i = n; i-- > 0;) {
      const float next_v = i + 1 < n ? vals[i + 1] : bootstrap;
      const float nonterminal = dones[i] ? 0.0f : 1.0f;
      const float delta = rews[i] + gamma * next_v * nonterminal - vals[i];
      gae = delta + gamma * lambda * nonterminal * gae;
      b.advantages[i] = gae;
      b.returns[i] = gae + vals[i];
      b.obs.col(static_cast<Eigen::Index>(i)) = xs[i];
    }
    b.actions = acts;
    b.logp_old = logps;
    update(b);
    xs.clear();
    acts.clear();
    logps.clear();
    vals.clear();
    rews.clear();
    dones.clear();
  }
  log.steps = steps_;
  std::vector<std::pair<size_t, double>> entries;
  for (const auto& e : log.episodes) entries.emplace_back(e.end_step, e.reward);
  log.convergence_step = detect_convergence(entries, config_.rolling_window);
}

TrainResult train_ppo(Environment& env, const PpoConfig& config, size_t total_steps,
                      const TrainMeta& meta) {
  if (total_steps < env.horizon()) {
    throw InvalidArgument("total_steps (" + std::to_string(total_steps) +
                          ") is shorter than one episode (" + std::to_string(env.horizon()) + ")");
  }
  PpoAgent agent(env.num_actions(), config);
  TrainResult r;
  agent.train(env, total_steps, r.log);
  r.checkpoint = agent.checkpoint();
  r.checkpoint.dataset = meta.dataset;
  r.checkpoint.suite = meta.suite;
  r.checkpoint.reward = meta.reward;
  r.checkpoint.converged = r.log.convergence_step.has_value();
  return r;
}

TrainResult fine_tune(const PolicyCheckpoint& ckpt, Environment& env, size_t steps,
                      std::optional<PpoConfig> config) {
  if (ckpt.n_actions != env.num_actions()) {
    throw InvalidArgument("checkpoint has " + std::to_string(ckpt.n_actions) +
                          " actions but the target environment has " +
                          std::to_string(env.num_actions()));
  }
  TrainResult r;
  if (steps == 0) {
    r.checkpoint = ckpt;
    return r;
  }
  // The log counts steps from the start of fine-tuning.
  PolicyCheckpoint start = ckpt;
  start.steps = 0;
  PpoAgent agent = PpoAgent::from_checkpoint(start, config);
  agent.train(env, steps, r.log);
  r.checkpoint = agent.checkpoint();
  r.checkpoint.steps += ckpt.steps;
  r.checkpoint.dataset = ckpt.dataset;
  r.checkpoint.suite = ckpt.suite;
  r.checkpoint.reward = ckpt.reward;
  r.checkpoint.converged = r.log.convergence_step.has_value();
  return r;
}

double transfer_gap(double r_scratch, double r_finetune) {
  if (r_scratch == 0.0) throw InvalidArgument("transfer gap undefined for a zero scratch reward");
  return (r_scratch - r_finetune) / std::fabs(r_scratch);
}

double random_policy_mean(Environment& env, size_t episodes, uint64_t seed) {
  if (episodes == 0) return 0.0;
  Rng rng(derive_seed(seed, "random-policy"));
  double total = 0.0;
  for (size_t e = 0; e < episodes; ++e) {
    env.reset();
    for (size_t t = 0; t < env.horizon(); ++t) {
      const StepOutcome out = env.step(rng.uniform_index(env.num_actions()));
      total += out.reward;
      if (out.done) break;
    }
  }
  return total / static_cast<double>(episodes);
}

double greedy_policy_mean(const PpoAgent& agent, Environment& env, size_t episodes) {
  if (episodes == 0) return 0.0;
  double total = 0.0;
  for (size_t e = 0; e < episodes; ++e) {
    Observation obs = env.reset();
    for (size_t t = 0; t < env.horizon(); ++t) {
      const StepOutcome out = env.step(agent.act_greedy(obs));
      total += out.reward;
      obs = out.observation;
      if (out.done) break;
    }
  }
  return total / static_cast<double>(episodes);
}

uint32_t QPolicy::state_key(const Observation& obs) const {
  uint32_t key = 0;
  for (size_t k = 0; k < 6; ++k) {
    uint32_t bin = 0;
    for (double e : edges[k]) bin += obs[k] > e ? 1 : 0;
    key = key * 4 + bin;
  }
  for (size_t k = 6; k < kStateDim; ++k) key = key * 2 + (obs[k] > 0.5 ? 1 : 0);
  return key;
}

size_t QPolicy::act(const Observation& obs) const {
  auto it = q.find(state_key(obs));
  if (it == q.end()) return 0;
  return static_cast<size_t>(std::max_element(it->second.begin(), it->second.end()) -
                             it->second.begin());
}

QPolicy q_learn_reference(Environment& env, size_t episodes, const QConfig& config) {
  QPolicy policy;
  policy.n_actions = env.num_actions();
  if (episodes == 0) return policy;
  Rng rng(derive_seed(config.seed, "q-learning"));
  std::array<std::vector<double>, 6> seen;
  for (size_t e = 0; e < config.warmup_episodes; ++e) {
    Observation obs = env.reset();
    for (size_t k = 0; k < 6; ++k) seen[k].push_back(obs[k]);
    for (size_t t = 0; t < env.horizon(); ++t) {
      const StepOutcome out = env.step(rng.uniform_index(env.num_actions()));
      for (size_t k = 0; k < 6; ++k) seen[k].push_back(out.observation[k]);
      if (out.done) break;
    }
  }
  for (size_t k = 0; k < 6; ++k) {
    std::sort(seen[k].begin(), seen[k].end());
    for (size_t b = 0; b < 3; ++b) {
      policy.edges[k][b] = seen[k].empty() ? 0.0 : quantile_sorted(seen[k], 0.25 * static_cast<double>(b + 1));
    }
  }
  auto row = [&](uint32_t key) -> std::vector<double>& {
    auto& r = policy.q[key];
    if (r.empty()) r.assign(policy.n_actions, 0.0);
    return r;
  };
  for (size_t e = 0; e < episodes; ++e) {
    Observation obs = env.reset();
    for (size_t t = 0; t < env.horizon(); ++t) {
      const uint32_t s = policy.state_key(obs);
      std::vector<double>& qs = row(s);
      size_t a;
      if (rng.uniform() < config.epsilon) {
        a = rng.uniform_index(policy.n_actions);
      } else {
        a = static_cast<size_t>(std::max_element(qs.begin(), qs.end()) - qs.begin());
      }
      const StepOutcome out = env.step(a);
      double target = out.reward;
      if (!out.done) {
        const auto& next = row(policy.state_key(out.observation));
        target += config.gamma * *std::max_element(next.begin(), next.end());
      }
      std::vector<double>& qa = row(s);
      qa[a] += config.alpha * (target - qa[a]);
      obs = out.observation;
      if (out.done) break;
    }
  }
  return policy;
}

}  // namespace priorclean
