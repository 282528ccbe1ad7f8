#pragma once

// Order-of-magnitude cost model of one MADDPG / FL-MADDPG training iteration.
//
//   MADDPG  = {L^2 M K N^2 SA_L + L^2 M K SC_L} x {L^2 M K N^2 SA_H + L N SC_H + L^3 Q_SE}
//   FL      = {L NF M K N^2 SA_L + L NF M K SC_L} x {L NF M K N^2 SA_H + L N SC_H + L^2 NF Q_SE}
//
// SA_* / SC_* are sums of squared layer output widths of the actor / critic of
// the low (AP precoding) and high (RIS phase) layer; Q_SE is the flop count of
// one sum-SE evaluation.

#include <vector>

#include "rismarl/marl/environment.hpp"
#include "rismarl/marl/trainer.hpp"

namespace rismarl::marl {

struct LayerSizes {
  std::vector<int> actor_low;
  std::vector<int> critic_low;
  std::vector<int> actor_high;
  std::vector<int> critic_high;
};

// Output widths of every layer of the networks a trainer would build.
inline LayerSizes default_layer_sizes(const SystemConfig& sys, const TrainerConfig& cfg) {
  LayerSizes s;
  s.actor_low = cfg.hidden_precoder;
  s.actor_low.push_back(precoding_action_dim(sys));
  s.critic_low = cfg.hidden_precoder;
  s.critic_low.push_back(1);
  s.actor_high = cfg.hidden_phase;
  s.actor_high.push_back(phase_action_dim(sys));
  s.critic_high = cfg.hidden_phase;
  s.critic_high.push_back(1);
  return s;
}

inline double sum_of_squares(const std::vector<int>& q) {
  double s = 0.0;
  for (int v : q) s += static_cast<double>(v) * v;
  return s;
}

// Real flops of one sum-SE evaluation: effective channels (one complex
// multiply-add = 8 flops), the K x K coupling matrix, then K SINR/log terms.
inline double sum_se_flops(const SystemConfig& c) {
  const double L = c.num_aps, K = c.num_ues, R = c.num_ris, M = c.ap_antennas, U = c.ue_antennas,
               N = c.ris_elements;
  const double effective = L * K * R * (N * M + U * N * M);
  const double coupling = L * K * K * M * U;
  return 8.0 * (effective + coupling) + 10.0 * K * K;
}

struct ComplexityTerms {
  double first_quadratic = 0.0;   // L^2 / L*NF actor-low term of the first factor
  double first_critic = 0.0;
  double second_quadratic = 0.0;  // L^2 / L*NF actor-high term of the second factor
  double second_linear = 0.0;     // L N SC_H, identical for both methods
  double second_se = 0.0;         // L^3 / L^2*NF Q_SE
  double first() const { return first_quadratic + first_critic; }
  double second() const { return second_quadratic + second_linear + second_se; }
  double total() const { return first() * second(); }
};

struct ComplexityEstimate {
  ComplexityTerms maddpg_terms;
  ComplexityTerms fl_terms;
  double maddpg = 0.0;
  double fl_maddpg = 0.0;
  double ratio = 0.0;  // fl_maddpg / maddpg
  double q_se = 0.0;
};

inline ComplexityEstimate complexity_estimate(const SystemConfig& sys, int fuzzy_agents, const LayerSizes& sizes) {
  sys.validate();
  if (fuzzy_agents < 1) throw ConfigError("complexity_estimate: fuzzy_agents must be >= 1");
  const double L = sys.num_aps, K = sys.num_ues, M = sys.ap_antennas, N = sys.ris_elements;
  const double NF = fuzzy_agents;
  const double sa_l = sum_of_squares(sizes.actor_low), sc_l = sum_of_squares(sizes.critic_low);
  const double sa_h = sum_of_squares(sizes.actor_high), sc_h = sum_of_squares(sizes.critic_high);
  ComplexityEstimate e;
  e.q_se = sum_se_flops(sys);

  auto terms = [&](double agents_factor, double se_factor) {
    ComplexityTerms t;
    t.first_quadratic = agents_factor * M * K * N * N * sa_l;
    t.first_critic = agents_factor * M * K * sc_l;
    t.second_quadratic = agents_factor * M * K * N * N * sa_h;
    t.second_linear = L * N * sc_h;
    t.second_se = se_factor * e.q_se;
    return t;
  };
  e.maddpg_terms = terms(L * L, L * L * L);
  e.fl_terms = terms(L * NF, L * L * NF);
  e.maddpg = e.maddpg_terms.total();
  e.fl_maddpg = e.fl_terms.total();
  e.ratio = e.fl_maddpg / e.maddpg;
  return e;
}

inline ComplexityEstimate complexity_estimate(const SystemConfig& sys, const TrainerConfig& cfg) {
  return complexity_estimate(sys, cfg.fuzzy_agents, default_layer_sizes(sys, cfg));
}

}  // namespace rismarl::marl
