#pragma once

// Soft actor-critic: replay buffer, twin critics with Polyak-averaged targets,
// entropy-regularised actor and automatic temperature tuning. Also a one-step
// advantage actor-critic baseline and the deterministic evaluation loop.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "env.hpp"
#include "errors.hpp"
#include "neural.hpp"
#include "rng.hpp"

namespace uavbc {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;  // normalized, [-1, 1]^A
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;  // cuts the bootstrap; step-cap truncation is not terminal
};

struct Batch {
  Matrix states;       // S x N
  Matrix actions;      // A x N
  RowVector rewards;   // N
  Matrix next_states;  // S x N
  RowVector terminal;  // N, 1.0 where the bootstrap is cut

  Eigen::Index size() const noexcept { return rewards.size(); }
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ParameterError("replay buffer: capacity must be > 0");
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[head_] = std::move(t);
    }
    head_ = (head_ + 1) % capacity_;
  }

  std::size_t size() const noexcept { return data_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }

  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const {
    if (i >= data_.size()) throw UsageError("replay buffer: index out of range");
    return data_.size() < capacity_ ? data_[i] : data_[(head_ + i) % capacity_];
  }

  /// Distinct uniform indices (Floyd's algorithm), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, CounterRng& rng) const {
    if (n > data_.size()) throw UsageError("replay buffer: batch larger than stored transitions");
    std::vector<std::size_t> picked;
    picked.reserve(n);
    std::unordered_set<std::size_t> seen;
    for (std::size_t j = data_.size() - n; j < data_.size(); ++j) {
      std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
      if (!seen.insert(t).second) {
        t = j;
        seen.insert(t);
      }
      picked.push_back(t);
    }
    return picked;
  }

  Batch sample(std::size_t n, CounterRng& rng) const { return gather(sample_indices(n, rng)); }

  Batch gather(std::span<const std::size_t> idx) const {
    const auto s_dim = static_cast<Eigen::Index>(data_.front().state.size());
    const auto a_dim = static_cast<Eigen::Index>(data_.front().action.size());
    const auto n = static_cast<Eigen::Index>(idx.size());
    Batch b{Matrix(s_dim, n), Matrix(a_dim, n), RowVector(n), Matrix(s_dim, n), RowVector(n)};
    for (Eigen::Index j = 0; j < n; ++j) {
      const Transition& t = data_[idx[static_cast<std::size_t>(j)]];
      b.states.col(j) = Eigen::Map<const Vector>(t.state.data(), s_dim);
      b.actions.col(j) = Eigen::Map<const Vector>(t.action.data(), a_dim);
      b.rewards(j) = t.reward;
      b.next_states.col(j) = Eigen::Map<const Vector>(t.next_state.data(), s_dim);
      b.terminal(j) = t.terminal ? 1.0 : 0.0;
    }
    return b;
  }

 private:
  std::size_t capacity_;
  std::vector<Transition> data_;
  std::size_t head_ = 0;
};

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double alpha_init = 0.2;
  double target_entropy = std::numeric_limits<double>::quiet_NaN();  // NaN: -action_dim
  std::size_t batch_size = 256;
  std::size_t buffer_capacity = 1'000'000;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  double lr_alpha = 3e-4;
  std::size_t warmup_steps = 5000;
  std::size_t updates_per_step = 1;
  std::size_t total_steps = 200'000;
  std::size_t eval_interval = 10'000;
  std::vector<std::size_t> hidden = {256, 256};

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
    if (!(alpha_init > 0.0)) throw ConfigError("alpha_init must be > 0");
    if (batch_size == 0 || batch_size > buffer_capacity) throw ConfigError("batch_size must lie in [1, buffer_capacity]");
    if (!(lr_actor > 0.0 && lr_critic > 0.0 && lr_alpha > 0.0)) throw ConfigError("learning rates must be > 0");
    if (hidden.empty()) throw ConfigError("at least one hidden layer required");
  }

  double resolved_target_entropy(std::size_t action_dim) const noexcept {
    return std::isnan(target_entropy) ? -static_cast<double>(action_dim) : target_entropy;
  }
};

inline std::vector<std::size_t> layer_dims(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

struct Agent {
  DenseNet actor;
  DenseNet critic1;
  DenseNet critic2;
  DenseNet target1;
  DenseNet target2;
  double log_alpha = 0.0;
  Adam actor_opt;
  Adam critic1_opt;
  Adam critic2_opt;
  ScalarAdam alpha_opt;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;

  double alpha() const noexcept { return std::exp(log_alpha); }

  static Agent create(std::size_t state_dim, std::size_t action_dim, const SacConfig& cfg, CounterRng& rng) {
    Agent a;
    a.state_dim = state_dim;
    a.action_dim = action_dim;
    a.actor = DenseNet::create(layer_dims(state_dim, cfg.hidden, 2 * action_dim), rng);
    a.critic1 = DenseNet::create(layer_dims(state_dim + action_dim, cfg.hidden, 1), rng);
    a.critic2 = DenseNet::create(layer_dims(state_dim + action_dim, cfg.hidden, 1), rng);
    a.target1 = a.critic1;
    a.target2 = a.critic2;
    a.log_alpha = std::log(cfg.alpha_init);
    a.actor_opt = Adam(a.actor, {cfg.lr_actor});
    a.critic1_opt = Adam(a.critic1, {cfg.lr_critic});
    a.critic2_opt = Adam(a.critic2, {cfg.lr_critic});
    a.alpha_opt = ScalarAdam({cfg.lr_alpha});
    return a;
  }
};

inline Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  Matrix m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

/// Standard-normal noise matrix (rows x cols), drawn column by column.
inline Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

/// Soft Bellman target for one transition.
inline double soft_bellman_target(double reward, double gamma, bool terminal, double q1_next, double q2_next,
                                  double alpha, double log_prob_next) noexcept {
  if (terminal) return reward;
  return reward + gamma * (std::min(q1_next, q2_next) - alpha * log_prob_next);
}

/// y for a batch, with a' drawn from the current actor at s' using `noise`.
/// Pure function of its inputs; no gradients are produced.
inline RowVector target_value(const Batch& b, const Agent& agent, double gamma, double alpha, const Matrix& noise) {
  const PolicyBatch next = squash(forward(agent.actor, b.next_states).output(), noise);
  const Matrix sa = stack_rows(b.next_states, next.action);
  const Matrix q1 = forward(agent.target1, sa).output();
  const Matrix q2 = forward(agent.target2, sa).output();
  RowVector y(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j)
    y(j) = soft_bellman_target(b.rewards(j), gamma, b.terminal(j) != 0.0, q1(0, j), q2(0, j), alpha,
                               next.log_prob(j));
  return y;
}

struct LossAndGrads {
  double loss = 0.0;
  Gradients grads;
};

/// Mean squared error of Q(s, a) against fixed targets y.
inline LossAndGrads critic_loss(const DenseNet& critic, const Batch& b, const RowVector& y) {
  const ForwardTape tape = forward(critic, stack_rows(b.states, b.actions));
  const RowVector err = tape.output().row(0) - y;
  const double n = static_cast<double>(b.size());
  LossAndGrads r;
  r.loss = err.squaredNorm() / n;
  r.grads = backward(critic, tape, Matrix(2.0 * err / n)).grads;
  return r;
}

struct CriticLosses {
  double critic1 = 0.0;
  double critic2 = 0.0;
};

inline CriticLosses critic_update(const Batch& b, const RowVector& y, Agent& agent) {
  LossAndGrads l1 = critic_loss(agent.critic1, b, y);
  LossAndGrads l2 = critic_loss(agent.critic2, b, y);
  if (!std::isfinite(l1.loss) || !std::isfinite(l2.loss)) throw TrainingError("critic loss is not finite");
  agent.critic1_opt.step(agent.critic1, l1.grads);
  agent.critic2_opt.step(agent.critic2, l2.grads);
  return {l1.loss, l2.loss};
}

struct ActorLoss {
  double loss = 0.0;
  RowVector log_prob;  // of the fresh samples, reused by the temperature update
  Gradients grads;
};

/// mean_j [ alpha * log pi(a_j|s_j) - min_i Q_i(s_j, a_j) ] with a_j reparameterised by `noise`.
inline ActorLoss actor_loss(const Agent& agent, const Batch& b, const Matrix& noise) {
  const ForwardTape actor_tape = forward(agent.actor, b.states);
  const PolicyBatch p = squash(actor_tape.output(), noise);
  const Matrix sa = stack_rows(b.states, p.action);
  const ForwardTape t1 = forward(agent.critic1, sa);
  const ForwardTape t2 = forward(agent.critic2, sa);
  const double n = static_cast<double>(b.size());
  const double alpha = agent.alpha();

  Matrix dq1 = Matrix::Zero(1, b.size());
  Matrix dq2 = Matrix::Zero(1, b.size());
  ActorLoss r;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double q1 = t1.output()(0, j);
    const double q2 = t2.output()(0, j);
    r.loss += (alpha * p.log_prob(j) - std::min(q1, q2)) / n;
    (q1 <= q2 ? dq1 : dq2)(0, j) = -1.0 / n;
  }
  const auto a_dim = p.action.rows();
  const Matrix d_action = backward(agent.critic1, t1, dq1).input_grad.bottomRows(a_dim) +
                          backward(agent.critic2, t2, dq2).input_grad.bottomRows(a_dim);
  const RowVector d_log_prob = RowVector::Constant(b.size(), alpha / n);
  r.grads = backward(agent.actor, actor_tape, squash_backward(p, d_action, d_log_prob)).grads;
  r.log_prob = p.log_prob;
  return r;
}

inline ActorLoss actor_update(const Batch& b, Agent& agent, const Matrix& noise) {
  ActorLoss r = actor_loss(agent, b, noise);
  if (!std::isfinite(r.loss)) throw TrainingError("actor loss is not finite");
  agent.actor_opt.step(agent.actor, r.grads);
  return r;
}

/// Temperature objective -alpha * (mean log pi + H_target) and its gradient
/// with respect to log_alpha.
struct AlphaLoss {
  double loss = 0.0;
  double grad_log_alpha = 0.0;
};

inline AlphaLoss alpha_loss(double log_alpha, const RowVector& log_prob, double target_entropy) {
  const double alpha = std::exp(log_alpha);
  const double m = log_prob.mean() + target_entropy;
  return {-alpha * m, -alpha * m};
}

inline double alpha_update(const RowVector& log_prob, Agent& agent, double target_entropy) {
  const AlphaLoss l = alpha_loss(agent.log_alpha, log_prob, target_entropy);
  agent.log_alpha = agent.alpha_opt.step(agent.log_alpha, l.grad_log_alpha);
  return agent.alpha();
}

/// target <- tau * online + (1 - tau) * target, parameterwise.
inline void polyak_update(DenseNet& target, const DenseNet& online, double tau) {
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].weight = tau * online.layers[l].weight + (1.0 - tau) * target.layers[l].weight;
    target.layers[l].bias = tau * online.layers[l].bias + (1.0 - tau) * target.layers[l].bias;
  }
}

inline void polyak_update(Agent& agent, double tau) {
  polyak_update(agent.target1, agent.critic1, tau);
  polyak_update(agent.target2, agent.critic2, tau);
}

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double alpha = 0.0;
};

/// One full gradient cycle: critics, actor, temperature, targets.
inline UpdateStats sac_update(const Batch& b, Agent& agent, const SacConfig& cfg, CounterRng& noise_rng) {
  const auto a_dim = static_cast<Eigen::Index>(agent.action_dim);
  const Matrix next_noise = normal_matrix(a_dim, b.size(), noise_rng);
  const RowVector y = target_value(b, agent, cfg.gamma, agent.alpha(), next_noise);
  const CriticLosses cl = critic_update(b, y, agent);
  const Matrix noise = normal_matrix(a_dim, b.size(), noise_rng);
  const ActorLoss al = actor_update(b, agent, noise);
  alpha_update(al.log_prob, agent, cfg.resolved_target_entropy(agent.action_dim));
  polyak_update(agent, cfg.tau);
  return {0.5 * (cl.critic1 + cl.critic2), al.loss, agent.alpha()};
}

// --- training --------------------------------------------------------------

using EnvFactory = std::function<Environment(std::size_t episode)>;

struct EpisodeLog {
  std::size_t env_step = 0;  // cumulative env steps at episode end
  std::size_t episode = 0;
  double episode_return = 0.0;
  std::size_t length = 0;
  double total_time_s = 0.0;
  double energy_j = 0.0;
  double alpha = 0.0;
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  bool success = false;
};

inline const char* kTrainingLogHeader =
    "env_step,episode,return,episode_len,total_time_s,energy_J,alpha,critic_loss,actor_loss";

inline std::string training_log_row(const EpisodeLog& e) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g,%zu,%.17g,%.17g,%.17g,%.17g,%.17g", e.env_step, e.episode,
                e.episode_return, e.length, e.total_time_s, e.energy_j, e.alpha, e.critic_loss, e.actor_loss);
  return buf;
}

struct TrainHooks {
  std::function<void(const EpisodeLog&)> on_episode;
  std::function<void(std::size_t env_step, const Agent&)> on_checkpoint;
};

struct TrainResult {
  Agent agent;
  std::vector<EpisodeLog> log;
};

/// Random actions until warmup_steps, then policy samples; one gradient cycle
/// per updates_per_step once the buffer holds a full batch. Deterministic in seed.
inline TrainResult train(const EnvFactory& make_env, const SacConfig& cfg, std::uint64_t seed,
                         const TrainHooks& hooks = {}) {
  cfg.validate();
  CounterRng root(seed);
  CounterRng init_rng = root.fork(1);
  CounterRng act_rng = root.fork(2);
  CounterRng batch_rng = root.fork(3);
  CounterRng update_rng = root.fork(4);

  Environment env = make_env(0);
  TrainResult res;
  res.agent = Agent::create(env.state_dim(), env.action_dim(), cfg, init_rng);
  Agent& agent = res.agent;
  ReplayBuffer buffer(cfg.buffer_capacity);

  std::size_t episode = 0;
  EpisodeLog current;
  std::vector<double> obs = env.observation();
  UpdateStats last{};
  last.alpha = agent.alpha();
  std::vector<double> action(env.action_dim());
  std::vector<double> noise(env.action_dim());

  for (std::size_t t = 0; t < cfg.total_steps; ++t) {
    if (t < cfg.warmup_steps) {
      for (double& a : action) a = act_rng.uniform(-1.0, 1.0);
    } else {
      for (double& e : noise) e = act_rng.normal();
      action = sample_policy(agent.actor, obs, noise).normalized_action;
    }
    const StepOutcome out = env.step_normalized(action);
    std::vector<double> next_obs = env.observation();
    buffer.push({obs, action, out.reward, next_obs, out.info.terminal});
    current.episode_return += out.reward;

    if (buffer.size() >= cfg.batch_size) {
      for (std::size_t u = 0; u < cfg.updates_per_step; ++u)
        last = sac_update(buffer.sample(cfg.batch_size, batch_rng), agent, cfg, update_rng);
    }

    if (out.done) {
      const EpisodeSummary s = env.summarize();
      current.env_step = t + 1;
      current.episode = episode;
      current.length = s.steps;
      current.total_time_s = s.total_time_s;
      current.energy_j = s.total_energy_j;
      current.alpha = last.alpha;
      current.critic_loss = last.critic_loss;
      current.actor_loss = last.actor_loss;
      current.success = s.success;
      res.log.push_back(current);
      if (hooks.on_episode) hooks.on_episode(current);
      current = EpisodeLog{};
      env = make_env(++episode);
      obs = env.observation();
    } else {
      obs = std::move(next_obs);
    }
    if (hooks.on_checkpoint && cfg.eval_interval > 0 && (t + 1) % cfg.eval_interval == 0)
      hooks.on_checkpoint(t + 1, agent);
  }
  return res;
}

// --- evaluation --------------------------------------------------------------

struct EvalEpisode {
  EpisodeSummary summary;
  std::vector<StepInfo> history;
  Vec2 start;
};

struct EvalMetrics {
  std::vector<EvalEpisode> episodes;
  double mean_total_time_s = 0.0;
  double mean_energy_j = 0.0;
  double mean_flight_distance_m = 0.0;
  double success_rate = 0.0;
};

inline EvalMetrics aggregate(std::vector<EvalEpisode> episodes) {
  EvalMetrics m;
  m.episodes = std::move(episodes);
  if (m.episodes.empty()) return m;
  for (const EvalEpisode& e : m.episodes) {
    m.mean_total_time_s += e.summary.total_time_s;
    m.mean_energy_j += e.summary.total_energy_j;
    m.mean_flight_distance_m += e.summary.flight_distance_m;
    m.success_rate += e.summary.success ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(m.episodes.size());
  m.mean_total_time_s /= n;
  m.mean_energy_j /= n;
  m.mean_flight_distance_m /= n;
  m.success_rate /= n;
  return m;
}

/// Runs the deterministic mean action tanh(mu) until each episode ends.
inline EvalEpisode run_policy_episode(const DenseNet& actor, Environment env) {
  const std::vector<double> zero(env.action_dim(), 0.0);
  if (actor.input_dim() != env.state_dim() || actor.output_dim() != 2 * env.action_dim())
    throw UsageError("evaluate: policy dimensions do not match the environment");
  EvalEpisode ep;
  ep.start = env.state().uav;
  while (!env.done()) env.step_normalized(sample_policy(actor, env.observation(), zero).mean_action);
  ep.summary = env.summarize();
  ep.history = env.history();
  return ep;
}

inline EvalMetrics evaluate(const DenseNet& actor, const std::vector<Scenario>& scenarios, const EnvConfig& cfg,
                            std::size_t episodes) {
  if (scenarios.empty()) throw UsageError("evaluate: no scenarios");
  std::vector<EvalEpisode> eps;
  for (std::size_t e = 0; e < episodes; ++e)
    eps.push_back(run_policy_episode(actor, Environment(scenarios[e % scenarios.size()], cfg)));
  return aggregate(std::move(eps));
}

// --- one-step advantage actor-critic baseline --------------------------------

struct AcConfig {
  double gamma = 0.99;
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  std::size_t total_steps = 200'000;
  std::vector<std::size_t> hidden = {256, 256};
};

struct AcAgent {
  DenseNet actor;
  DenseNet value;
  Adam actor_opt;
  Adam value_opt;
  std::size_t state_dim = 0;
  std::size_t action_dim = 0;

  static AcAgent create(std::size_t state_dim, std::size_t action_dim, const AcConfig& cfg, CounterRng& rng) {
    AcAgent a;
    a.state_dim = state_dim;
    a.action_dim = action_dim;
    a.actor = DenseNet::create(layer_dims(state_dim, cfg.hidden, 2 * action_dim), rng);
    a.value = DenseNet::create(layer_dims(state_dim, cfg.hidden, 1), rng);
    a.actor_opt = Adam(a.actor, {cfg.lr_actor});
    a.value_opt = Adam(a.value, {cfg.lr_critic});
    return a;
  }
};

/// TD(0) critic step towards r + gamma * (1 - terminal) * V(s'); returns the TD error.
inline double value_update(AcAgent& agent, std::span<const double> s, double reward, std::span<const double> s_next,
                           bool terminal, double gamma) {
  const Vector sv = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
  const Vector nv = Eigen::Map<const Vector>(s_next.data(), static_cast<Eigen::Index>(s_next.size()));
  const double v_next = terminal ? 0.0 : forward(agent.value, nv)(0);
  const double y = reward + gamma * v_next;
  const ForwardTape tape = forward(agent.value, Matrix(sv));
  const double td = y - tape.output()(0, 0);
  if (!std::isfinite(td)) throw TrainingError("value target is not finite");
  agent.value_opt.step(agent.value, backward(agent.value, tape, Matrix::Constant(1, 1, -2.0 * td)).grads);
  return td;
}

/// Policy-gradient step on -advantage * log pi(a|s) for the executed pre-tanh action.
inline void policy_gradient_update(AcAgent& agent, std::span<const double> s, std::span<const double> pre_tanh,
                                   double advantage) {
  const Vector sv = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
  const Matrix u = Eigen::Map<const Matrix>(pre_tanh.data(), static_cast<Eigen::Index>(pre_tanh.size()), 1);
  const ForwardTape tape = forward(agent.actor, Matrix(sv));
  const FixedSampleLogProb lp = log_prob_of(tape.output(), u);
  agent.actor_opt.step(agent.actor, backward(agent.actor, tape, -advantage * lp.d_output).grads);
}

struct AcTrainResult {
  AcAgent agent;
  std::vector<EpisodeLog> log;
};

inline AcTrainResult train_ac_baseline(const EnvFactory& make_env, const AcConfig& cfg, std::uint64_t seed,
                                       const TrainHooks& hooks = {}) {
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  CounterRng root(seed);
  CounterRng init_rng = root.fork(1);
  CounterRng act_rng = root.fork(2);
  Environment env = make_env(0);
  AcTrainResult res;
  res.agent = AcAgent::create(env.state_dim(), env.action_dim(), cfg, init_rng);
  AcAgent& agent = res.agent;

  std::size_t episode = 0;
  EpisodeLog current;
  double last_td = 0.0;
  std::vector<double> obs = env.observation();
  std::vector<double> noise(env.action_dim());
  for (std::size_t t = 0; t < cfg.total_steps; ++t) {
    for (double& e : noise) e = act_rng.normal();
    const PolicySample sample = sample_policy(agent.actor, obs, noise);
    const StepOutcome out = env.step_normalized(sample.normalized_action);
    const std::vector<double> next_obs = env.observation();
    last_td = value_update(agent, obs, out.reward, next_obs, out.info.terminal, cfg.gamma);
    policy_gradient_update(agent, obs, sample.pre_tanh, last_td);
    current.episode_return += out.reward;
    if (out.done) {
      const EpisodeSummary s = env.summarize();
      current.env_step = t + 1;
      current.episode = episode;
      current.length = s.steps;
      current.total_time_s = s.total_time_s;
      current.energy_j = s.total_energy_j;
      current.critic_loss = last_td * last_td;
      current.success = s.success;
      res.log.push_back(current);
      if (hooks.on_episode) hooks.on_episode(current);
      current = EpisodeLog{};
      env = make_env(++episode);
      obs = env.observation();
    } else {
      obs = next_obs;
    }
  }
  return res;
}

// --- checkpoints -------------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "uavbc-checkpoint-1";

inline nlohmann::json checkpoint_json(const Agent& a, AntennaMode mode) {
  return {{"format", kCheckpointFormat},
          {"algorithm", "sac"},
          {"mode", to_string(mode)},
          {"state_dim", a.state_dim},
          {"action_dim", a.action_dim},
          {"log_alpha", a.log_alpha},
          {"networks",
           {{"actor", to_json(a.actor)},
            {"critic1", to_json(a.critic1)},
            {"critic2", to_json(a.critic2)},
            {"target1", to_json(a.target1)},
            {"target2", to_json(a.target2)}}},
          {"optimizers",
           {{"actor", a.actor_opt.to_json()},
            {"critic1", a.critic1_opt.to_json()},
            {"critic2", a.critic2_opt.to_json()},
            {"alpha", a.alpha_opt.to_json()}}}};
}

inline nlohmann::json checkpoint_json(const AcAgent& a, AntennaMode mode) {
  return {{"format", kCheckpointFormat},
          {"algorithm", "ac"},
          {"mode", to_string(mode)},
          {"state_dim", a.state_dim},
          {"action_dim", a.action_dim},
          {"networks", {{"actor", to_json(a.actor)}, {"value", to_json(a.value)}}},
          {"optimizers", {{"actor", a.actor_opt.to_json()}, {"value", a.value_opt.to_json()}}}};
}

inline Agent agent_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format") != kCheckpointFormat || j.at("algorithm") != "sac")
      throw UsageError("checkpoint: not a SAC checkpoint");
    Agent a;
    a.state_dim = j.at("state_dim").get<std::size_t>();
    a.action_dim = j.at("action_dim").get<std::size_t>();
    a.log_alpha = j.at("log_alpha").get<double>();
    const auto& n = j.at("networks");
    a.actor = dense_net_from_json(n.at("actor"));
    a.critic1 = dense_net_from_json(n.at("critic1"));
    a.critic2 = dense_net_from_json(n.at("critic2"));
    a.target1 = dense_net_from_json(n.at("target1"));
    a.target2 = dense_net_from_json(n.at("target2"));
    const auto& o = j.at("optimizers");
    a.actor_opt = Adam::from_json(o.at("actor"), a.actor);
    a.critic1_opt = Adam::from_json(o.at("critic1"), a.critic1);
    a.critic2_opt = Adam::from_json(o.at("critic2"), a.critic2);
    a.alpha_opt = ScalarAdam::from_json(o.at("alpha"));
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("checkpoint: ") + e.what());
  }
}

/// Actor network from any checkpoint (SAC or AC).
inline DenseNet actor_from_checkpoint(const nlohmann::json& j) {
  try {
    if (j.at("format") != kCheckpointFormat) throw UsageError("checkpoint: unknown format");
    return dense_net_from_json(j.at("networks").at("actor"));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace uavbc
