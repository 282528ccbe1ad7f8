#pragma once

// Fuzzy abstraction between P physical agents and n fuzzy agents.
//
// Each fuzzy agent i owns an anchor state s_hat_i. Per state dimension the
// membership of a value s is exp(-|s - s_hat_ij| / (d_a * n)); the mapping
// weight Xi(i, p) is the product over dimensions and Xi_bar normalizes each
// column (physical agent) over the fuzzy agents.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rismarl/common.hpp"

namespace rismarl::fuzzy {

struct FuzzyMap {
  int action_dim = 1;  // d_a
  Matrix anchors;      // n x d_s
  Matrix log_xi;       // n x P, log of the raw mapping weights
  Matrix xi;           // n x P
  Matrix xi_bar;       // n x P, columns sum to 1

  int num_fuzzy() const { return static_cast<int>(anchors.rows()); }
  int state_dim() const { return static_cast<int>(anchors.cols()); }
  int num_physical() const { return static_cast<int>(xi_bar.cols()); }
  double scale() const { return static_cast<double>(action_dim) * num_fuzzy(); }
};

inline double membership(double s, double anchor, int action_dim, int n) {
  const double scale = static_cast<double>(action_dim) * n;
  if (!(scale > 0.0)) throw ContractViolation("membership: d_a * n must be > 0");
  return std::exp(-std::abs(s - anchor) / scale);
}

// Recomputes Xi and Xi_bar for the given physical states (P x d_s).
// Normalization runs in the log domain, so Xi_bar stays exact even when the
// raw products underflow.
inline void mapping_matrix(FuzzyMap& fm, const Matrix& states) {
  require(states.cols() == fm.state_dim(), "mapping_matrix: state dimension does not match anchors");
  const int n = fm.num_fuzzy();
  const auto P = states.rows();
  const double scale = fm.scale();
  fm.log_xi.resize(n, P);
  for (Eigen::Index p = 0; p < P; ++p)
    for (int i = 0; i < n; ++i)
      fm.log_xi(i, p) = -(states.row(p) - fm.anchors.row(i)).cwiseAbs().sum() / scale;
  fm.xi = fm.log_xi.array().exp().matrix();
  fm.xi_bar.resize(n, P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const double top = fm.log_xi.col(p).maxCoeff();
    Vector e = (fm.log_xi.col(p).array() - top).exp().matrix();
    fm.xi_bar.col(p) = e / e.sum();
  }
}

inline FuzzyMap update_membership(FuzzyMap fm, const Matrix& new_states) {
  mapping_matrix(fm, new_states);
  return fm;
}

// Anchors are drawn from the observed rows, without replacement while n <= P.
inline FuzzyMap init_fuzzy_agents(const Matrix& observed, int n, int action_dim, Rng& rng) {
  if (observed.rows() == 0 || observed.cols() == 0) throw ContractViolation("init_fuzzy_agents: empty observation set");
  if (n < 1) throw ConfigError("init_fuzzy_agents: need n >= 1 fuzzy agents");
  if (action_dim < 1) throw ConfigError("init_fuzzy_agents: action dimension must be >= 1");
  const int P = static_cast<int>(observed.rows());
  std::vector<int> idx(static_cast<std::size_t>(P));
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<int> chosen;
  for (int i = 0; i < n; ++i) {
    if (i < P) {
      const int j = std::uniform_int_distribution<int>(i, P - 1)(rng);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      chosen.push_back(idx[static_cast<std::size_t>(i)]);
    } else {
      chosen.push_back(std::uniform_int_distribution<int>(0, P - 1)(rng));
    }
  }
  // labels follow the order of the source rows
  std::sort(chosen.begin(), chosen.end());
  FuzzyMap fm;
  fm.action_dim = action_dim;
  fm.anchors.resize(n, observed.cols());
  for (int i = 0; i < n; ++i) fm.anchors.row(i) = observed.row(chosen[static_cast<std::size_t>(i)]);
  mapping_matrix(fm, observed);
  return fm;
}

// A_p = sum_i Xi_bar(i, p) * A_hat_i. Fuzzy actions are n x d_a.
inline Matrix defuzzify_action(const FuzzyMap& fm, const Matrix& fuzzy_actions) {
  require(fuzzy_actions.rows() == fm.num_fuzzy(), "defuzzify_action: need one action row per fuzzy agent");
  return fm.xi_bar.transpose() * fuzzy_actions;
}

inline Vector fuzzify_reward(const FuzzyMap& fm, const Vector& rewards) {
  require(rewards.size() == fm.num_physical(), "fuzzify_reward: need one reward per physical agent");
  return fm.xi_bar * rewards;
}

inline Matrix fuzzify_state(const FuzzyMap& fm, const Matrix& states) {
  require(states.rows() == fm.num_physical(), "fuzzify_state: need one state row per physical agent");
  return fm.xi_bar * states;
}

// Off-diagonal mass of Xi_bar when n == P; 0 means a pure pass-through.
inline double off_diagonal_mass(const FuzzyMap& fm) {
  require(fm.num_fuzzy() == fm.num_physical(), "off_diagonal_mass: requires n == P");
  return fm.xi_bar.sum() - fm.xi_bar.diagonal().sum();
}

}  // namespace rismarl::fuzzy
