#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rismarl/marl/complexity.hpp"
#include "rismarl/marl/trainer.hpp"
#include "rismarl/reference.hpp"
#include "test_util.hpp"

using namespace rismarl;
using namespace rismarl::marl;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = gaussian(rng);
  return m;
}

struct Fixture {
  Topology topo;
  ChannelSet ch;
  SystemConfig cfg;
};

Fixture desk_realization(std::uint64_t seed) {
  Fixture f;
  f.cfg = SystemConfig::desk();
  Rng rng = make_rng(seed);
  f.topo = sample_topology(f.cfg, rng);
  f.ch = sample_channels(f.cfg, f.topo, rng);
  return f;
}

// One precoder agent (state 2, action 2) plus a phase agent (obs 3, action 1).
JointLayout small_layout() {
  JointLayout lay;
  lay.num_precoder_agents = 1;
  lay.state_dim = 2;
  lay.precoder_action_dim = 2;
  lay.phase_obs_dim = 3;
  lay.phase_action_dim = 1;
  return lay;
}

std::vector<Agent> small_agents(const JointLayout& lay, Rng& rng, double gamma) {
  std::vector<Agent> agents;
  for (int i = 0; i < 2; ++i) {
    Agent a;
    const int obs = i == 0 ? lay.state_dim : lay.phase_obs_dim;
    a.actor = nn::init_mlp({obs, 6, lay.action_dim(i)}, nn::Activation::tanh, rng);
    a.critic = nn::init_mlp({lay.critic_input_dim(), 7, 1}, nn::Activation::linear, rng);
    a.actor_target = nn::init_mlp({obs, 6, lay.action_dim(i)}, nn::Activation::tanh, rng);
    a.critic_target = nn::init_mlp({lay.critic_input_dim(), 7, 1}, nn::Activation::linear, rng);
    a.actor_opt = nn::make_adam(a.actor, 1e-3);
    a.critic_opt = nn::make_adam(a.critic, 1e-3);
    a.gamma = gamma;
    agents.push_back(std::move(a));
  }
  return agents;
}

Batch random_batch(const JointLayout& lay, int B, Rng& rng) {
  Batch b;
  b.states = random_matrix(lay.joint_state_dim(), B, rng);
  b.phase_obs = random_matrix(lay.phase_obs_dim, B, rng);
  b.actions = random_matrix(lay.joint_action_dim(), B, rng).array().tanh().matrix();
  b.rewards = random_matrix(2, B, rng);
  b.next_states = random_matrix(lay.joint_state_dim(), B, rng);
  b.next_phase_obs = random_matrix(lay.phase_obs_dim, B, rng);
  return b;
}

std::vector<double> col(const Matrix& m, Eigen::Index c) {
  return std::vector<double>(m.col(c).data(), m.col(c).data() + m.rows());
}

TrainerConfig quick_config() {
  TrainerConfig t;
  t.episodes = 3;
  t.steps = 8;
  t.batch = 4;
  t.hidden_precoder = {32};
  t.hidden_phase = {16};
  t.fuzzy_agents = 2;
  return t;
}

}  // namespace

TEST(EnvState, DimensionAndDeterminism) {
  const auto f = desk_realization(1);
  const auto prec = PrecodingSet::zeros(2, 2, 2);
  const auto ph = PhaseShiftConfig::unit(1, 4);
  const Vector g = Vector::Zero(2);
  EXPECT_EQ(local_state_dim(f.cfg), 60);
  const Vector s = build_env_state(f.ch, ph, prec, f.topo, g, 1);
  EXPECT_EQ(s.size(), 60);
  EXPECT_EQ(s, build_env_state(f.ch, ph, prec, f.topo, g, 1));
  EXPECT_EQ(local_state_dim(SystemConfig::paper()), 1800);
  // distances sit right after the three channel blocks
  const int off = 8 + 16 + 16;
  EXPECT_DOUBLE_EQ(s(off), f.topo.ap_ue(1, 0));
  EXPECT_DOUBLE_EQ(s(off + 1), f.topo.ap_ue(1, 1));
}

TEST(EnvState, OneChannelEntryMovesTwoCoordinates) {
  const auto f = desk_realization(2);
  const auto prec = PrecodingSet::zeros(2, 2, 2);
  const auto ph = PhaseShiftConfig::unit(1, 4);
  const Vector g = Vector::Zero(2);
  const Vector s0 = build_env_state(f.ch, ph, prec, f.topo, g, 0);
  auto ch = f.ch;
  ch.F(0, 1)(0, 2) += cdouble(0.5, -0.25);
  const Vector s1 = build_env_state(ch, ph, prec, f.topo, g, 0);
  std::vector<int> changed;
  for (Eigen::Index i = 0; i < s0.size(); ++i)
    if (s0(i) != s1(i)) changed.push_back(static_cast<int>(i));
  // F block starts at 2UMK = 8; F_{0,1} is the second U x N block, entry n = 2
  ASSERT_EQ(changed.size(), 2u);
  EXPECT_EQ(changed[0], 8 + 2 * 4 + 2 * 2);
  EXPECT_EQ(changed[1], changed[0] + 1);
  // another AP's observation of its own direct channel does not move
  EXPECT_EQ(build_env_state(ch, ph, prec, f.topo, g, 1).head(8), build_env_state(f.ch, ph, prec, f.topo, g, 1).head(8));
}

TEST(DecodePrecoding, ZeroFeasibleAndRoundTrip) {
  EXPECT_EQ(decode_precoding_action(Vector::Zero(8), 2, 2, 1e-3).norm(), 0.0);
  Rng rng = make_rng(3);
  for (int t = 0; t < 100; ++t) {
    const Vector a = random_matrix(8, 1, rng).array().tanh().matrix();
    EXPECT_LE(decode_precoding_action(a, 2, 2, 1e-3).squaredNorm(), 1e-3 * (1 + 1e-12));
  }
  CMatrix W(2, 2);
  for (int i = 0; i < 4; ++i) W(i) = complex_gaussian(rng);
  W *= std::sqrt(0.8e-3) / W.norm();
  const Vector a = encode_precoding_action(W, 1e-3);
  EXPECT_LE(a.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_LT((decode_precoding_action(a, 2, 2, 1e-3) - W).cwiseAbs().maxCoeff(), 1e-12 * std::sqrt(1e-3));
  EXPECT_THROW(decode_precoding_action(Vector::Zero(7), 2, 2, 1.0), ContractViolation);
}

TEST(DecodePhase, EndpointsAndQuantization) {
  Vector a(3);
  a << -1.0, 0.0, 1.0;
  const auto p = decode_phase_action(a, 1, 3);
  EXPECT_NEAR(std::abs(p.theta(0, 0) - cdouble(1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(p.theta(0, 1) - cdouble(-1.0, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(p.theta(0, 2) - cdouble(1.0, 0.0)), 0.0, 1e-15);
  Vector b(2);
  b << -0.3, 0.55;  // angles 0.7 pi, 1.55 pi
  const auto q = decode_phase_action(b, 2, 1, 2);
  EXPECT_EQ(q.bits, 2);
  EXPECT_NEAR(q.angles()(0, 0), kPi / 2, 1e-12);
  EXPECT_NEAR(q.angles()(1, 0), 1.5 * kPi, 1e-12);
}

TEST(Reward, SharedSumSe) {
  auto ch = ChannelSet::zeros(1, 1, 0, 1, 1, 1);
  ch.H(0, 0)(0, 0) = 0.5;
  auto prec = PrecodingSet::zeros(1, 1, 1);
  prec.per_ap[0](0, 0) = 1.0;
  PhaseShiftConfig none;
  none.theta.resize(0, 1);
  const Vector r = reward(ch, none, prec, 0.1, 3);
  ASSERT_EQ(r.size(), 3);
  EXPECT_NEAR(r(0), user_se(0.25 / 0.1), 1e-14);
  EXPECT_EQ(r(0), r(2));
  prec.per_ap[0](0, 0) = std::sqrt(2.0);
  EXPECT_GT(reward(ch, none, prec, 0.1, 1)(0), r(0));
}

TEST(EnvironmentStep, RewardMatchesSumSe) {
  const auto f = desk_realization(4);
  Environment env(f.cfg);
  env.load(f.topo, f.ch);
  Rng rng = make_rng(5);
  const Matrix A = random_matrix(2, 8, rng).array().tanh().matrix();
  const Vector P = random_matrix(4, 1, rng).array().tanh().matrix();
  const auto before = env.evaluate(A, P);
  const auto out = env.step(A, P);
  EXPECT_EQ(before.sum_se, out.sum_se);
  EXPECT_NEAR(out.sum_se, sum_se(f.ch, env.phases(), env.precoders(), f.cfg.noise_power), 1e-12);
  EXPECT_TRUE(power_feasible(env.precoders(), f.cfg.max_power));
  const Matrix S = env.local_states();
  EXPECT_NEAR(S(0, 59), std::log2(1.0 + out.sinr(1)), 1e-12);
}

TEST(Replay, CapacityAndSampling) {
  ReplayBuffer buf(5);
  EXPECT_THROW(ReplayBuffer(0), ConfigError);
  for (int i = 0; i < 12; ++i) {
    Transition t;
    t.rewards = Vector::Constant(1, i);
    buf.push(t);
    EXPECT_LE(buf.size(), 5u);
  }
  std::set<double> kept;
  for (std::size_t i = 0; i < buf.size(); ++i) kept.insert(buf.at(i).rewards(0));
  EXPECT_EQ(kept, (std::set<double>{7, 8, 9, 10, 11}));
  Rng rng = make_rng(6);
  EXPECT_THROW(buf.sample_indices(6, rng), ContractViolation);
  std::vector<int> hits(5, 0);
  for (int t = 0; t < 20000; ++t) {
    const auto idx = buf.sample_indices(3, rng);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    ASSERT_EQ(uniq.size(), 3u);
    for (auto i : idx) {
      ASSERT_LT(i, 5u);
      ++hits[i];
    }
  }
  for (int h : hits) EXPECT_NEAR(h / 60000.0, 0.2, 0.01);
}

TEST(Standardizer, ZScoreWithClipAndConstantDims) {
  RunningStandardizer st(2, 5.0);
  Matrix rows(4, 2);
  rows << 1, 3, 2, 3, 3, 3, 4, 3;
  st.update(rows);
  const Matrix z = st.apply(rows);
  const double sd = std::sqrt(5.0 / 3.0);
  EXPECT_NEAR(z(0, 0), -1.5 / sd, 1e-12);
  EXPECT_EQ(z(0, 1), 0.0);
  Matrix far(1, 2);
  far << 1000, 3;
  EXPECT_EQ(st.apply(far)(0, 0), 5.0);
}

TEST(CriticUpdate, LossMatchesHandTdTargets) {
  const auto lay = small_layout();
  for (double gamma : {0.0, 0.9}) {
    Rng rng = make_rng(7);
    auto agents = small_agents(lay, rng, gamma);
    const Batch b = random_batch(lay, 5, rng);
    for (int i = 0; i < 2; ++i) {
      const auto& a = agents[static_cast<std::size_t>(i)];
      double want = 0.0;
      for (int c = 0; c < 5; ++c) {
        const auto a0 = reference::mlp_forward(agents[0].actor_target, col(b.next_states, c));
        const auto a1 = reference::mlp_forward(agents[1].actor_target, col(b.next_phase_obs, c));
        std::vector<double> xn = col(b.next_states, c);
        xn.insert(xn.end(), a0.begin(), a0.end());
        xn.insert(xn.end(), a1.begin(), a1.end());
        const double y = b.rewards(i, c) + gamma * reference::mlp_forward(a.critic_target, xn)[0];
        std::vector<double> x = col(b.states, c);
        const auto act = col(b.actions, c);
        x.insert(x.end(), act.begin(), act.end());
        const double q = reference::mlp_forward(a.critic, x)[0];
        want += (q - y) * (q - y) / 5.0;
      }
      auto copy = agents;
      const double got = critic_update(copy, lay, b, i);
      EXPECT_LT(reference::relative_error(got, want), 1e-8) << "gamma " << gamma << " agent " << i;
    }
  }
}

TEST(CriticUpdate, OverfitsOneBatch) {
  const auto lay = small_layout();
  Rng rng = make_rng(8);
  auto agents = small_agents(lay, rng, 0.0);
  agents[0].critic_opt.lr = 1e-2;
  const Batch b = random_batch(lay, 8, rng);
  std::vector<double> losses;
  for (int t = 0; t < 300; ++t) losses.push_back(critic_update(agents, lay, b, 0));
  for (int t = 1; t < 10; ++t) EXPECT_LT(losses[t], losses[t - 1]);
  EXPECT_LT(losses.back(), 0.2 * losses.front());
}

TEST(ActorUpdate, ZeroActionGradientLeavesActor) {
  const auto lay = small_layout();
  Rng rng = make_rng(9);
  auto agents = small_agents(lay, rng, 0.9);
  agents[0].critic.layers.back().weight.setZero();
  agents[0].critic.touch();
  const auto before = agents[0].actor;
  actor_update(agents, lay, random_batch(lay, 4, rng), 0);
  EXPECT_EQ(nn::parameter_distance(before, agents[0].actor), 0.0);
}

TEST(ActorUpdate, GradientMatchesFiniteDifferences) {
  const auto lay = small_layout();
  Rng rng = make_rng(10);
  auto agents = small_agents(lay, rng, 0.9);
  for (auto& a : agents)
    for (auto& l : a.actor.layers)
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * gaussian(rng);
  for (auto& a : agents) a.actor.touch();
  const Batch b = random_batch(lay, 6, rng);
  for (int i = 0; i < 2; ++i) {
    const auto g = actor_gradient(agents, lay, b, i);
    auto objective = [&](const std::vector<Agent>& ag) { return actor_gradient(ag, lay, b, i).objective; };
    double worst = 0.0;
    const double h = 1e-6;
    auto probe = agents;
    auto& layers = probe[static_cast<std::size_t>(i)].actor.layers;
    for (std::size_t li = 0; li < layers.size(); ++li)
      for (Eigen::Index e = 0; e < layers[li].weight.size(); ++e) {
        const double keep = layers[li].weight(e);
        layers[li].weight(e) = keep + h;
        probe[static_cast<std::size_t>(i)].actor.touch();
        const double up = objective(probe);
        layers[li].weight(e) = keep - h;
        probe[static_cast<std::size_t>(i)].actor.touch();
        const double down = objective(probe);
        layers[li].weight(e) = keep;
        const double fd = -(up - down) / (2 * h);  // grads are of -J
        const double an = g.grads.layers[li].weight(e);
        worst = std::max(worst, std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6}));
      }
    EXPECT_LT(worst, 1e-3) << "agent " << i;
  }
}

TEST(ActorUpdate, PreactivationPenaltyGradient) {
  const auto lay = small_layout();
  Rng rng = make_rng(13);
  auto agents = small_agents(lay, rng, 0.9);
  agents[0].preact_penalty = 0.5;
  const Batch b = random_batch(lay, 5, rng);
  auto loss = [&](const std::vector<Agent>& ag) {
    nn::ForwardCache c;
    nn::forward(ag[0].actor, agent_observation(lay, 0, b.states, b.phase_obs), &c);
    return -actor_gradient(ag, lay, b, 0).objective + 0.5 * c.preacts.back().squaredNorm() / 5.0;
  };
  const auto g = actor_gradient(agents, lay, b, 0);
  auto probe = agents;
  auto& W = probe[0].actor.layers.back().weight;
  double worst = 0.0;
  for (Eigen::Index e = 0; e < W.size(); ++e) {
    const double keep = W(e), h = 1e-6;
    W(e) = keep + h;
    probe[0].actor.touch();
    const double up = loss(probe);
    W(e) = keep - h;
    probe[0].actor.touch();
    const double down = loss(probe);
    W(e) = keep;
    const double fd = (up - down) / (2 * h), an = g.grads.layers.back().weight(e);
    worst = std::max(worst, std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6}));
  }
  EXPECT_LT(worst, 1e-4);
  agents[0].preact_penalty = 0.0;
  EXPECT_GT((actor_gradient(agents, lay, b, 0).grads.layers.back().weight - g.grads.layers.back().weight).norm(), 0.0);
}

TEST(ActorUpdate, AscendsConcaveCritic) {
  // Q = -sum_j 0.99 |a_j - c_j| on agent 0's action, built from leaky units
  const auto lay = small_layout();
  Rng rng = make_rng(11);
  auto agents = small_agents(lay, rng, 0.9);
  const int in = lay.critic_input_dim();
  nn::MlpParams q;
  q.layers.push_back({Matrix::Zero(4, in), Vector::Zero(4)});
  q.layers.push_back({Matrix::Constant(1, 4, -1.0), Vector::Zero(1)});
  const double c[2] = {0.8, -0.7};
  for (int j = 0; j < 2; ++j) {
    const int col_a = lay.joint_state_dim() + j;
    q.layers[0].weight(2 * j, col_a) = 1.0;
    q.layers[0].bias(2 * j) = -c[j];
    q.layers[0].weight(2 * j + 1, col_a) = -1.0;
    q.layers[0].bias(2 * j + 1) = c[j];
  }
  q.touch();
  agents[0].critic = q;
  const Batch b = random_batch(lay, 8, rng);
  double prev = -1e300;
  for (int t = 0; t < 100; ++t) {
    const double obj = actor_update(agents, lay, b, 0);
    EXPECT_GE(obj, prev - 1e-12);
    prev = obj;
  }
}

TEST(Trainer, TraceShapeReproducibilityAndInvariants) {
  const auto sys = SystemConfig::desk();
  const auto cfg = quick_config();
  for (auto algo : {Algorithm::maddpg, Algorithm::fl_maddpg}) {
    Trainer a(algo, sys, cfg, 42), b(algo, sys, cfg, 42);
    const auto ta = a.train(), tb = b.train();
    ASSERT_EQ(ta.size(), static_cast<std::size_t>(cfg.episodes * cfg.steps));
    for (std::size_t i = 0; i < ta.size(); ++i) {
      EXPECT_EQ(ta[i].reward, tb[i].reward);
      EXPECT_EQ(ta[i].critic_loss, tb[i].critic_loss);
      EXPECT_GE(ta[i].reward, 0.0);
      EXPECT_TRUE(std::isfinite(ta[i].sum_se));
    }
    EXPECT_EQ(ta[5].episode, 0);
    EXPECT_EQ(ta[9].episode, 1);
    EXPECT_EQ(ta[9].step, 1);
    EXPECT_GT(ta.back().critic_loss, 0.0);
    for (const auto& A : a.action_log()) {
      EXPECT_LE(A.cwiseAbs().maxCoeff(), 1.0);
      Environment env(sys);
      Vector ph = Vector::Zero(4);
      auto [prec, phases] = env.decode(A, ph);
      EXPECT_TRUE(power_feasible(prec, sys.max_power));
      for (Eigen::Index i = 0; i < phases.theta.size(); ++i) EXPECT_NEAR(std::abs(phases.theta(i)), 1.0, 1e-12);
    }
    EXPECT_EQ(a.buffer(0).size(), static_cast<std::size_t>(cfg.episodes * cfg.steps));
  }
}

TEST(Trainer, FuzzyLayoutAndMembershipLog) {
  const auto sys = SystemConfig::desk();
  auto cfg = quick_config();
  cfg.fuzzy_agents = 1;
  Trainer tr(Algorithm::fl_maddpg, sys, cfg, 3);
  tr.train();
  EXPECT_EQ(tr.layout().num_precoder_agents, 1);
  EXPECT_EQ(tr.agents().size(), 2u);
  ASSERT_EQ(tr.membership_log().size(), 3u);
  EXPECT_LT((tr.membership_log()[0].mean_xi_bar - Matrix::Ones(1, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(tr.agents()[0].critic.input_dim(), tr.layout().critic_input_dim());
  EXPECT_EQ(tr.layout().critic_input_dim(), 60 + 8 + 4);
}

TEST(Trainer, RolloutIsDeterministicAndLeavesStateAlone) {
  const auto sys = SystemConfig::desk();
  Trainer tr(Algorithm::fl_maddpg, sys, quick_config(), 5);
  tr.train();
  const auto f = desk_realization(77);
  const auto r1 = tr.rollout(f.topo, f.ch, 5);
  const auto r2 = tr.rollout(f.topo, f.ch, 5);
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(r1.size(), 5u);
}

TEST(Trainer, FixedDeploymentRedrawsOnlyFading) {
  const auto sys = SystemConfig::desk();
  auto cfg = quick_config();
  cfg.redeploy_each_episode = false;
  Trainer tr(Algorithm::maddpg, sys, cfg, 9);
  const Topology want = training_deployment(sys, 9);
  std::vector<TraceRow> trace;
  Matrix prev_direct;
  for (int ep = 0; ep < 3; ++ep) {
    tr.run_episode(ep, trace);
    EXPECT_EQ(tr.environment().topology().ap_ue, want.ap_ue);
    const Matrix direct = tr.environment().channels().direct[0].real();
    if (ep > 0) {
      EXPECT_NE(direct, prev_direct);
    }
    prev_direct = direct;
  }

  cfg.redeploy_each_episode = true;
  Trainer moving(Algorithm::maddpg, sys, cfg, 9);
  moving.run_episode(0, trace);
  EXPECT_NE(moving.environment().topology().ap_ue, want.ap_ue);
}

TEST(Trainer, DegeneratePassThroughMatchesMaddpg) {
  const auto sys = SystemConfig::desk();
  auto cfg = quick_config();
  cfg.fuzzy_agents = sys.num_aps;
  Trainer plain(Algorithm::maddpg, sys, cfg, 9);
  Trainer fl(Algorithm::fl_maddpg, sys, cfg, 9);
  const double tag = 100.0 * precoding_action_dim(sys) * cfg.fuzzy_agents;
  fl.set_membership_view([tag](const Matrix& S) {
    Matrix out(S.rows(), S.cols() + 1);
    out << S, Vector::LinSpaced(S.rows(), 0.0, tag * (S.rows() - 1));
    return out;
  });
  const auto tp = plain.train();
  const auto tf = fl.train();
  ASSERT_EQ(plain.action_log().size(), fl.action_log().size());
  for (std::size_t i = 0; i < plain.action_log().size(); ++i)
    EXPECT_LT((plain.action_log()[i] - fl.action_log()[i]).cwiseAbs().maxCoeff(), 1e-6) << "step " << i;
  EXPECT_LT(fuzzy::off_diagonal_mass(fl.fuzzy_map()), 1e-12);
}

TEST(Trainer, TargetContractionPerSoftUpdate) {
  const auto lay = small_layout();
  Rng rng = make_rng(12);
  auto agents = small_agents(lay, rng, 0.9);
  for (auto& a : agents) a.tau = 0.3;
  std::vector<double> before;
  for (const auto& a : agents) before.push_back(nn::parameter_distance(a.actor_target, a.actor));
  soft_update_targets(agents, nn::SoftUpdateConvention::retain_target);
  for (std::size_t i = 0; i < agents.size(); ++i)
    EXPECT_NEAR(nn::parameter_distance(agents[i].actor_target, agents[i].actor), 0.3 * before[i], 1e-12);
}

TEST(Trainer, ConfigValidation) {
  auto cfg = quick_config();
  cfg.gamma_precoder = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = quick_config();
  cfg.batch = 5000;
  EXPECT_THROW(cfg.validate(), ConfigError);
  auto sys = SystemConfig::desk();
  sys.ue_antennas = 2;
  EXPECT_THROW(Trainer(Algorithm::maddpg, sys, quick_config(), 1), ConfigError);
}

TEST(Complexity, EqualWhenFuzzyMatchesAps) {
  const auto sys = SystemConfig::paper();
  const auto e = complexity_estimate(sys, 4, default_layer_sizes(sys, TrainerConfig{}));
  EXPECT_DOUBLE_EQ(e.ratio, 1.0);
  EXPECT_GT(e.maddpg, 0.0);
}

TEST(Complexity, PrintedProductsAndScaling) {
  auto sys = SystemConfig::paper();
  const LayerSizes sizes{{512, 32}, {512, 1}, {256, 16}, {256, 1}};
  const double sa_l = 512.0 * 512 + 32 * 32, sc_l = 512.0 * 512 + 1, sa_h = 256.0 * 256 + 16 * 16, sc_h = 256.0 * 256 + 1;
  const double L = 4, M = 8, K = 4, N = 16, NF = 2;
  const auto e = complexity_estimate(sys, 2, sizes);
  const double q = e.q_se;
  const double m1 = L * L * M * K * N * N * sa_l + L * L * M * K * sc_l;
  const double m2 = L * L * M * K * N * N * sa_h + L * N * sc_h + L * L * L * q;
  const double f1 = L * NF * M * K * N * N * sa_l + L * NF * M * K * sc_l;
  const double f2 = L * NF * M * K * N * N * sa_h + L * N * sc_h + L * L * NF * q;
  EXPECT_NEAR(e.maddpg / (m1 * m2), 1.0, 1e-12);
  EXPECT_NEAR(e.fl_maddpg / (f1 * f2), 1.0, 1e-12);
  EXPECT_NEAR(e.ratio, (f1 * f2) / (m1 * m2), 1e-12);

  for (auto [Lv, NFv] : {std::pair{4, 2}, std::pair{8, 2}, std::pair{16, 4}}) {
    sys.num_aps = Lv;
    const auto c = complexity_estimate(sys, NFv, sizes);
    const double r = static_cast<double>(NFv) / Lv;
    EXPECT_NEAR(c.fl_terms.first() / c.maddpg_terms.first(), r, 1e-12);
    EXPECT_NEAR((c.fl_terms.first_quadratic * c.fl_terms.second_quadratic) /
                    (c.maddpg_terms.first_quadratic * c.maddpg_terms.second_quadratic),
                r * r, 1e-12);
    EXPECT_NEAR(c.fl_terms.second_se / c.maddpg_terms.second_se, r, 1e-12);
  }
  // with fixed widths the second factor is dominated by the SE term as L grows
  sys.num_aps = 4096;
  const auto big = complexity_estimate(sys, 2, sizes);
  EXPECT_NEAR((big.fl_terms.second() / big.maddpg_terms.second()) / (2.0 / 4096), 1.0, 0.05);
  EXPECT_THROW(complexity_estimate(sys, 0, sizes), ConfigError);
}
