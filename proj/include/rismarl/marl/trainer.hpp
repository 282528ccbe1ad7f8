#pragma once

// MADDPG and fuzzy-logic MADDPG under centralized training / decentralized
// execution.
//
// Agents 0..n-1 form the AP-precoding layer (n = L physical agents for MADDPG,
// n = N_F fuzzy agents for FL-MADDPG); agent n is the RIS phase controller,
// which observes the stacked physical states of all APs. Every critic sees the
// stacked (fuzzy) precoder-layer states and the joint action.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rismarl/fuzzy.hpp"
#include "rismarl/marl/environment.hpp"
#include "rismarl/marl/replay.hpp"
#include "rismarl/mlp.hpp"

namespace rismarl::marl {

enum class Algorithm { maddpg, fl_maddpg };

inline std::string to_string(Algorithm a) { return a == Algorithm::maddpg ? "maddpg" : "fl_maddpg"; }

struct TrainerConfig {
  int episodes = 200;
  int steps = 20;
  int fuzzy_agents = 2;  // N_F
  double gamma_precoder = 0.99;
  double gamma_phase = 0.99;
  double tau_precoder = 1e-4;
  double tau_phase = 1e-3;
  bool swap_tau_convention = false;
  int batch = 32;
  int buffer_precoder = 4096;
  int buffer_phase = 2048;
  double noise_std = 0.2;
  double noise_decay = 0.999;  // per episode
  double lr_actor = 1e-3;
  double lr_critic = 1e-3;
  std::vector<int> hidden_precoder{512};
  std::vector<int> hidden_phase{256};
  int discrete_bits = 0;
  bool standardize_states = true;
  double reward_scale = 1.0;
  int updates_per_step = 1;
  double actor_preact_penalty = 0.0;
  double output_init = 3e-3;  // last-layer init range of actors and critics; 0 keeps He
  bool redeploy_each_episode = true;  // false: one deployment per run, fresh fading every episode
  double divergence_limit = 1e6;

  void validate() const {
    if (episodes < 1 || steps < 1) throw ConfigError("trainer: episodes and steps must be >= 1");
    if (fuzzy_agents < 1) throw ConfigError("trainer: fuzzy_agents must be >= 1");
    for (double g : {gamma_precoder, gamma_phase})
      if (!(g >= 0.0 && g < 1.0)) throw ConfigError("trainer: discount must lie in [0, 1)");
    for (double t : {tau_precoder, tau_phase})
      if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("trainer: tau must lie in [0, 1]");
    if (batch < 1 || batch > buffer_precoder || batch > buffer_phase)
      throw ConfigError("trainer: minibatch must be >= 1 and <= every buffer capacity");
    if (noise_std < 0.0 || noise_decay <= 0.0) throw ConfigError("trainer: invalid exploration noise");
    if (discrete_bits < 0) throw ConfigError("trainer: discrete_bits must be >= 0");
    if (updates_per_step < 1) throw ConfigError("trainer: updates_per_step must be >= 1");
    if (actor_preact_penalty < 0.0 || output_init < 0.0)
      throw ConfigError("trainer: actor_preact_penalty and output_init must be >= 0");
  }

  nn::SoftUpdateConvention convention() const {
    return swap_tau_convention ? nn::SoftUpdateConvention::blend_online : nn::SoftUpdateConvention::retain_target;
  }
};

struct Agent {
  nn::MlpParams actor, actor_target, critic, critic_target;
  nn::AdamState actor_opt, critic_opt;
  double gamma = 0.99;
  double tau = 1e-3;
  double preact_penalty = 0.0;  // weight of mean squared actor output pre-activation
};

// Where each piece lives inside the stacked critic input / joint action.
struct JointLayout {
  int num_precoder_agents = 0;  // n
  int state_dim = 0;            // d_s of one precoder agent
  int precoder_action_dim = 0;  // 2MK
  int phase_obs_dim = 0;
  int phase_action_dim = 0;     // RN

  int joint_state_dim() const { return num_precoder_agents * state_dim; }
  int joint_action_dim() const { return num_precoder_agents * precoder_action_dim + phase_action_dim; }
  int critic_input_dim() const { return joint_state_dim() + joint_action_dim(); }
  int action_offset(int agent) const { return agent * precoder_action_dim; }
  int action_dim(int agent) const { return agent < num_precoder_agents ? precoder_action_dim : phase_action_dim; }
  bool is_phase(int agent) const { return agent == num_precoder_agents; }
};

inline Matrix critic_input(const JointLayout& lay, const Matrix& states, const Matrix& actions) {
  Matrix x(lay.critic_input_dim(), states.cols());
  x.topRows(lay.joint_state_dim()) = states;
  x.bottomRows(lay.joint_action_dim()) = actions;
  return x;
}

inline Matrix agent_observation(const JointLayout& lay, int agent, const Matrix& states, const Matrix& phase_obs) {
  if (lay.is_phase(agent)) return phase_obs;
  return states.middleRows(agent * lay.state_dim, lay.state_dim);
}

// One Adam step on the squared TD error of agent i's critic toward
// y = r_i + gamma * Q'_i(s', pi'(s')). Returns the pre-update loss.
inline double critic_update(std::vector<Agent>& agents, const JointLayout& lay, const Batch& b, int i) {
  require(b.size() > 0, "critic_update: empty minibatch");
  const auto B = b.size();
  Matrix next_actions(lay.joint_action_dim(), B);
  for (int j = 0; j < static_cast<int>(agents.size()); ++j)
    next_actions.middleRows(lay.action_offset(j), lay.action_dim(j)) =
        nn::forward(agents[static_cast<std::size_t>(j)].actor_target,
                    agent_observation(lay, j, b.next_states, b.next_phase_obs));
  Agent& a = agents[static_cast<std::size_t>(i)];
  const Matrix q_next = nn::forward(a.critic_target, critic_input(lay, b.next_states, next_actions));
  const Matrix y = b.rewards.row(i) + a.gamma * q_next;

  nn::ForwardCache cache;
  const Matrix q = nn::forward(a.critic, critic_input(lay, b.states, b.actions), &cache);
  const Matrix err = q - y;
  const double loss = err.squaredNorm() / static_cast<double>(B);
  const auto grads = nn::backward(a.critic, cache, 2.0 * err / static_cast<double>(B));
  nn::adam_step(a.critic, grads, a.critic_opt);
  return loss;
}

struct ActorGradient {
  nn::MlpGrads grads;  // gradients of -mean Q (+ pre-activation penalty), ready for a descent step
  double objective = 0.0;
};

// Deterministic policy gradient for agent i: the other agents' actions come
// from the minibatch, agent i's from its current actor. The objective is the
// mean Q of the policy actions.
inline ActorGradient actor_gradient(const std::vector<Agent>& agents, const JointLayout& lay, const Batch& b, int i) {
  require(b.size() > 0, "actor_update: empty minibatch");
  const auto B = b.size();
  const Agent& a = agents[static_cast<std::size_t>(i)];
  nn::ForwardCache actor_cache;
  const Matrix own = nn::forward(a.actor, agent_observation(lay, i, b.states, b.phase_obs), &actor_cache);
  Matrix actions = b.actions;
  actions.middleRows(lay.action_offset(i), lay.action_dim(i)) = own;

  nn::ForwardCache critic_cache;
  const Matrix q = nn::forward(a.critic, critic_input(lay, b.states, actions), &critic_cache);
  const auto critic_grads =
      nn::backward(a.critic, critic_cache, Matrix::Constant(1, B, -1.0 / static_cast<double>(B)));
  const Matrix action_grad =
      critic_grads.input_grad.middleRows(lay.joint_state_dim() + lay.action_offset(i), lay.action_dim(i));
  if (a.preact_penalty > 0.0) {
    const Matrix& z = actor_cache.preacts.back();
    const Matrix pg = (2.0 * a.preact_penalty / static_cast<double>(B)) * z;
    return {nn::backward(a.actor, actor_cache, action_grad, &pg), q.mean()};
  }
  return {nn::backward(a.actor, actor_cache, action_grad), q.mean()};
}

// One Adam ascent step on the objective; returns its pre-update value.
inline double actor_update(std::vector<Agent>& agents, const JointLayout& lay, const Batch& b, int i) {
  const auto g = actor_gradient(agents, lay, b, i);
  Agent& a = agents[static_cast<std::size_t>(i)];
  nn::adam_step(a.actor, g.grads, a.actor_opt);
  return g.objective;
}

inline void soft_update_targets(std::vector<Agent>& agents, nn::SoftUpdateConvention conv) {
  for (auto& a : agents) {
    nn::soft_update(a.actor_target, a.actor, a.tau, conv);
    nn::soft_update(a.critic_target, a.critic, a.tau, conv);
  }
}

struct TraceRow {
  int episode = 0;
  int step = 0;
  double reward = 0.0;       // environment reward of the executed (exploring) action
  double sum_se = 0.0;       // sum-SE of the noise-free policy action in the same state
  double critic_loss = 0.0;  // mean over agents, 0 before updates start
  double actor_obj = 0.0;    // mean over agents
};

// Per-episode average of Xi_bar (fuzzy trainer only).
struct MembershipSummary {
  int episode = 0;
  Matrix mean_xi_bar;
};

struct StepActions {
  Matrix fuzzy;        // n x 2MK, after noise and clipping
  Matrix physical;     // L x 2MK
  Vector phase;        // RN
  Matrix greedy_physical;
  Vector greedy_phase;
};

// The deployment a trainer seeded with `seed` draws; lets evaluation build
// matching realizations without constructing a trainer.
inline Topology training_deployment(const SystemConfig& sys, std::uint64_t seed) {
  Rng rng = make_rng(seed, 2);
  return sample_topology(sys, rng);
}

class Trainer {
 public:
  using MembershipView = std::function<Matrix(const Matrix&)>;

  Trainer(Algorithm algo, SystemConfig sys, TrainerConfig cfg, std::uint64_t seed)
      : algo_(algo),
        sys_(std::move(sys)),
        cfg_(std::move(cfg)),
        seed_(seed),
        env_(sys_, cfg_.discrete_bits),
        rng_(make_rng(seed, 1)),
        env_rng_(make_rng(seed, 2)),
        fuzzy_rng_(make_rng(seed, 3)) {
    sys_.validate();
    cfg_.validate();
    deployment_ = sample_topology(sys_, env_rng_);
    if (sys_.ue_antennas != 1) throw ConfigError("trainer: only single-antenna UEs (U = 1) are supported");
    layout_.num_precoder_agents = algo_ == Algorithm::maddpg ? sys_.num_aps : cfg_.fuzzy_agents;
    layout_.state_dim = local_state_dim(sys_);
    layout_.precoder_action_dim = precoding_action_dim(sys_);
    layout_.phase_obs_dim = sys_.num_aps * layout_.state_dim;
    layout_.phase_action_dim = phase_action_dim(sys_);
    standardizer_ = RunningStandardizer(layout_.state_dim);

    const int n = layout_.num_precoder_agents;
    for (int i = 0; i <= n; ++i) {
      const bool phase = i == n;
      const auto& hidden = phase ? cfg_.hidden_phase : cfg_.hidden_precoder;
      std::vector<int> aw{phase ? layout_.phase_obs_dim : layout_.state_dim};
      aw.insert(aw.end(), hidden.begin(), hidden.end());
      aw.push_back(layout_.action_dim(i));
      std::vector<int> cw{layout_.critic_input_dim()};
      cw.insert(cw.end(), hidden.begin(), hidden.end());
      cw.push_back(1);
      Agent a;
      a.actor = nn::init_mlp(aw, nn::Activation::tanh, rng_);
      a.critic = nn::init_mlp(cw, nn::Activation::linear, rng_);
      if (cfg_.output_init > 0.0) {
        nn::reinit_output_layer(a.actor, cfg_.output_init, rng_);
        nn::reinit_output_layer(a.critic, cfg_.output_init, rng_);
      }
      a.actor_target = a.actor;
      a.critic_target = a.critic;
      a.actor_opt = nn::make_adam(a.actor, cfg_.lr_actor);
      a.critic_opt = nn::make_adam(a.critic, cfg_.lr_critic);
      a.gamma = phase ? cfg_.gamma_phase : cfg_.gamma_precoder;
      a.tau = phase ? cfg_.tau_phase : cfg_.tau_precoder;
      a.preact_penalty = cfg_.actor_preact_penalty;
      agents_.push_back(std::move(a));
      buffers_.emplace_back(static_cast<std::size_t>(phase ? cfg_.buffer_phase : cfg_.buffer_precoder));
    }
  }

  // Replaces the states used for membership computation (anchors and Xi) by
  // view(states); fuzzification itself still uses the standardized states.
  void set_membership_view(MembershipView view) { membership_view_ = std::move(view); }

  // Runs cfg.episodes x cfg.steps environment steps with learning.
  std::vector<TraceRow> train() {
    std::vector<TraceRow> trace;
    trace.reserve(static_cast<std::size_t>(cfg_.episodes) * static_cast<std::size_t>(cfg_.steps));
    for (int ep = 0; ep < cfg_.episodes; ++ep) run_episode(ep, trace);
    return trace;
  }

  // One learning episode on a fresh realization; rows appended to `trace`.
  void run_episode(int ep, std::vector<TraceRow>& trace) {
    if (cfg_.redeploy_each_episode) {
      env_.reset(env_rng_);
    } else {
      ChannelSet ch = sample_channels(sys_, deployment_, env_rng_);
      env_.load(deployment_, std::move(ch));
    }
    begin_episode();
    const double noise = cfg_.noise_std * std::pow(cfg_.noise_decay, ep);
    Matrix xi_acc;
    for (int t = 0; t < cfg_.steps; ++t) {
      if (is_fuzzy()) xi_acc = t == 0 ? fuzzy_.xi_bar : Matrix(xi_acc + fuzzy_.xi_bar);
      trace.push_back(learn_step(ep, t, noise));
      last_actions_log_.push_back(last_actions_.physical);
    }
    if (is_fuzzy()) membership_log_.push_back({ep, xi_acc / cfg_.steps});
  }

  // Noise-free rollout of `steps` steps on a given realization, without
  // learning or statistics updates. Returns the sum-SE after every step.
  std::vector<double> rollout(const Topology& topo, const ChannelSet& ch, int steps) {
    Environment env(sys_, cfg_.discrete_bits);
    env.load(topo, ch);
    Matrix S = standardize(env.local_states(), false);
    fuzzy::FuzzyMap fm = fuzzy_;
    if (is_fuzzy()) fuzzy::mapping_matrix(fm, membership_states(S));
    std::vector<double> out;
    for (int t = 0; t < steps; ++t) {
      const Matrix S_hat = is_fuzzy() ? fuzzy::fuzzify_state(fm, S) : S;
      Matrix fuzzy_act(layout_.num_precoder_agents, layout_.precoder_action_dim);
      for (int i = 0; i < layout_.num_precoder_agents; ++i)
        fuzzy_act.row(i) = nn::forward(agents_[static_cast<std::size_t>(i)].actor, Vector(S_hat.row(i).transpose())).transpose();
      const Matrix phys = is_fuzzy() ? fuzzy::defuzzify_action(fm, fuzzy_act) : fuzzy_act;
      const Vector phase = nn::forward(agents_.back().actor, flatten(S));
      out.push_back(env.step(phys, phase).sum_se);
      S = standardize(env.local_states(), false);
      if (is_fuzzy()) fuzzy::mapping_matrix(fm, membership_states(S));
    }
    return out;
  }

  Algorithm algorithm() const { return algo_; }
  const SystemConfig& system() const { return sys_; }
  const TrainerConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const JointLayout& layout() const { return layout_; }
  // The deployment used for every episode unless redeploy_each_episode is set.
  const Topology& deployment() const { return deployment_; }
  const Environment& environment() const { return env_; }
  const std::vector<Agent>& agents() const { return agents_; }
  const fuzzy::FuzzyMap& fuzzy_map() const { return fuzzy_; }
  const std::vector<MembershipSummary>& membership_log() const { return membership_log_; }
  // Physical precoding actions executed at every step so far (row per AP).
  const std::vector<Matrix>& action_log() const { return last_actions_log_; }
  const ReplayBuffer& buffer(int agent) const { return buffers_.at(static_cast<std::size_t>(agent)); }

 private:
  bool is_fuzzy() const { return algo_ == Algorithm::fl_maddpg; }

  Matrix standardize(const Matrix& raw, bool update) {
    if (!cfg_.standardize_states) return raw;
    if (update) standardizer_.update(raw);
    return standardizer_.apply(raw);
  }

  Matrix membership_states(const Matrix& S) const { return membership_view_ ? membership_view_(S) : S; }

  static Vector flatten(const Matrix& S) {
    const Matrix St = S.transpose();
    return Eigen::Map<const Vector>(St.data(), St.size());
  }

  void begin_episode() {
    S_ = standardize(env_.local_states(), true);
    if (!is_fuzzy()) return;
    if (!fuzzy_initialized_) {
      fuzzy_ = fuzzy::init_fuzzy_agents(membership_states(S_), cfg_.fuzzy_agents, layout_.precoder_action_dim,
                                        fuzzy_rng_);
      fuzzy_initialized_ = true;
    }
    fuzzy::mapping_matrix(fuzzy_, membership_states(S_));
  }

  StepActions select_actions(const Matrix& S_hat, const Matrix& S, double noise) {
    const int n = layout_.num_precoder_agents;
    StepActions act;
    Matrix greedy(n, layout_.precoder_action_dim);
    act.fuzzy.resize(n, layout_.precoder_action_dim);
    for (int i = 0; i < n; ++i) {
      const Vector a = nn::forward(agents_[static_cast<std::size_t>(i)].actor, Vector(S_hat.row(i).transpose()));
      greedy.row(i) = a.transpose();
      for (Eigen::Index d = 0; d < a.size(); ++d)
        act.fuzzy(i, d) = std::clamp(a(d) + (noise > 0.0 ? gaussian(rng_, noise) : 0.0), -1.0, 1.0);
    }
    act.greedy_phase = nn::forward(agents_.back().actor, flatten(S));
    act.phase.resize(act.greedy_phase.size());
    for (Eigen::Index d = 0; d < act.phase.size(); ++d)
      act.phase(d) = std::clamp(act.greedy_phase(d) + (noise > 0.0 ? gaussian(rng_, noise) : 0.0), -1.0, 1.0);
    if (is_fuzzy()) {
      act.physical = fuzzy::defuzzify_action(fuzzy_, act.fuzzy);
      act.greedy_physical = fuzzy::defuzzify_action(fuzzy_, greedy);
    } else {
      act.physical = act.fuzzy;
      act.greedy_physical = greedy;
    }
    return act;
  }

  TraceRow learn_step(int ep, int t, double noise) {
    const int n = layout_.num_precoder_agents;
    const Matrix S_hat = is_fuzzy() ? fuzzy::fuzzify_state(fuzzy_, S_) : S_;
    const Vector phase_obs = flatten(S_);

    StepActions act = select_actions(S_hat, S_, noise);
    TraceRow row;
    row.episode = ep;
    row.step = t;
    row.sum_se = env_.evaluate(act.greedy_physical, act.greedy_phase).sum_se;
    const StepOutcome out = env_.step(act.physical, act.phase);
    row.reward = out.sum_se;
    if (!std::isfinite(out.sum_se)) fail("non-finite reward", ep, t, -1, out.sum_se);

    const double r = out.sum_se * cfg_.reward_scale;
    Vector rewards(n + 1);
    if (is_fuzzy())
      rewards.head(n) = fuzzy::fuzzify_reward(fuzzy_, Vector::Constant(sys_.num_aps, r));
    else
      rewards.head(n).setConstant(r);
    rewards(n) = r;

    const Matrix S_next = standardize(env_.local_states(), true);
    Matrix S_hat_next = S_next;
    if (is_fuzzy()) {
      S_hat_next = fuzzy::fuzzify_state(fuzzy_, S_next);
      fuzzy::mapping_matrix(fuzzy_, membership_states(S_next));
    }

    Transition tr;
    tr.states = flatten(S_hat);
    tr.phase_obs = phase_obs;
    tr.actions.resize(layout_.joint_action_dim());
    tr.actions.head(n * layout_.precoder_action_dim) = flatten(act.fuzzy);
    tr.actions.tail(layout_.phase_action_dim) = act.phase;
    tr.rewards = rewards;
    tr.next_states = flatten(S_hat_next);
    tr.next_phase_obs = flatten(S_next);
    const auto shared = std::make_shared<const Transition>(std::move(tr));
    for (auto& buf : buffers_) buf.push(shared);
    S_ = S_next;
    last_actions_ = std::move(act);

    bool ready = true;
    for (const auto& buf : buffers_) ready = ready && buf.size() >= static_cast<std::size_t>(cfg_.batch);
    if (ready) {
      double closs = 0.0, aobj = 0.0;
      for (int u = 0; u < cfg_.updates_per_step; ++u) {
        for (int i = 0; i <= n; ++i) {
          const auto& buf = buffers_[static_cast<std::size_t>(i)];
          const Batch b = Batch::gather(buf, buf.sample_indices(static_cast<std::size_t>(cfg_.batch), rng_));
          const double l = critic_update(agents_, layout_, b, i);
          if (!std::isfinite(l) || l > cfg_.divergence_limit) fail("critic loss diverged", ep, t, i, l);
          closs += l;
          aobj += actor_update(agents_, layout_, b, i);
        }
        soft_update_targets(agents_, cfg_.convention());
      }
      const double count = static_cast<double>((n + 1) * cfg_.updates_per_step);
      row.critic_loss = closs / count;
      row.actor_obj = aobj / count;
      if (!std::isfinite(row.actor_obj)) fail("non-finite actor objective", ep, t, -1, row.actor_obj);
    }
    return row;
  }

  [[noreturn]] void fail(const std::string& what, int ep, int t, int agent, double value) const {
    std::ostringstream os;
    os << to_string(algo_) << " seed " << seed_ << ": " << what << " at episode " << ep << " step " << t;
    if (agent >= 0) os << " agent " << agent;
    os << " (value " << value << ")";
    for (std::size_t i = 0; i < agents_.size(); ++i)
      os << "; agent " << i << " actor finite=" << nn::all_finite(agents_[i].actor)
         << " critic finite=" << nn::all_finite(agents_[i].critic);
    throw NumericalError(os.str());
  }

  Algorithm algo_;
  SystemConfig sys_;
  TrainerConfig cfg_;
  std::uint64_t seed_;
  Environment env_;
  Rng rng_;
  Rng env_rng_;
  Rng fuzzy_rng_;
  Topology deployment_;
  JointLayout layout_;
  RunningStandardizer standardizer_;
  std::vector<Agent> agents_;
  std::vector<ReplayBuffer> buffers_;
  fuzzy::FuzzyMap fuzzy_;
  bool fuzzy_initialized_ = false;
  MembershipView membership_view_;
  Matrix S_;
  StepActions last_actions_;
  std::vector<Matrix> last_actions_log_;
  std::vector<MembershipSummary> membership_log_;
};

struct TrainResult {
  std::vector<TraceRow> trace;
  Trainer trainer;
};

inline TrainResult train_maddpg(const SystemConfig& sys, const TrainerConfig& cfg, std::uint64_t seed) {
  Trainer tr(Algorithm::maddpg, sys, cfg, seed);
  auto trace = tr.train();
  return {std::move(trace), std::move(tr)};
}

inline TrainResult train_fl_maddpg(const SystemConfig& sys, const TrainerConfig& cfg, std::uint64_t seed) {
  Trainer tr(Algorithm::fl_maddpg, sys, cfg, seed);
  auto trace = tr.train();
  return {std::move(trace), std::move(tr)};
}

}  // namespace rismarl::marl
