#pragma once

// Quick oracle checks run by `rismarl selftest`: matrix code paths against the
// loop implementations, ZF against the normal equations, and backprop against
// central differences.

#include <cmath>
#include <string>
#include <vector>

#include "rismarl/baselines.hpp"
#include "rismarl/fuzzy.hpp"
#include "rismarl/harness/csv.hpp"
#include "rismarl/mlp.hpp"
#include "rismarl/reference.hpp"
#include "rismarl/system_model.hpp"

namespace rismarl::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;
  double tolerance = 0.0;
};

inline std::vector<CheckResult> run_selftest(std::uint64_t seed = 0, int instances = 100) {
  Rng rng = make_rng(seed, 7);
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name, double worst, double tol) {
    out.push_back({name, std::isfinite(worst) && worst <= tol, worst, tol});
  };
  auto random_channels = [&](int L, int K, int R, int M, int N) {
    auto ch = ChannelSet::zeros(L, K, R, M, 1, N);
    for (auto* group : {&ch.direct, &ch.ap_ris, &ch.ris_ue})
      for (auto& m : *group)
        for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = complex_gaussian(rng);
    return ch;
  };

  double heff = 0.0, gamma = 0.0, se = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int L = 1 + t % 3, K = 1 + t % 4, R = t % 3, M = 1 + t % 2, N = 1 + t % 5;
    const auto ch = random_channels(L, K, R, M, N);
    Matrix ang(R, N);
    for (Eigen::Index i = 0; i < ang.size(); ++i) ang(i) = uniform(rng, 0.0, kTwoPi);
    const auto ph = PhaseShiftConfig::from_angles(ang);
    auto prec = PrecodingSet::zeros(L, M, K);
    for (auto& W : prec.per_ap)
      for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = complex_gaussian(rng);
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k)
        heff = std::max(heff, reference::max_relative_error(effective_channel(ch, ph, l, k),
                                                            reference::effective_channel(ch, ph, l, k)));
    for (int k = 0; k < K; ++k)
      gamma = std::max(gamma, reference::relative_error(sinr(ch, ph, prec, k, 0.5), reference::sinr(ch, ph, prec, k, 0.5)));
    se = std::max(se, reference::relative_error(sum_se(ch, ph, prec, 0.5), reference::sum_se(ch, ph, prec, 0.5)));
  }
  add("effective_channel vs loop oracle", heff, 1e-12);
  add("sinr vs loop oracle", gamma, 1e-12);
  add("sum_se vs loop oracle", se, 1e-12);

  double map = 0.0, defuzz = 0.0, conserve = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int P = 1 + t % 5, n = 1 + t % 4, ds = 1 + t % 6, da = 1 + t % 3;
    Matrix obs(P, ds);
    for (Eigen::Index i = 0; i < obs.size(); ++i) obs(i) = gaussian(rng);
    auto fm = fuzzy::init_fuzzy_agents(obs, n, da, rng);
    Matrix states(P, ds);
    for (Eigen::Index i = 0; i < states.size(); ++i) states(i) = gaussian(rng);
    fuzzy::mapping_matrix(fm, states);
    map = std::max(map, reference::max_relative_error(fm.xi_bar, reference::mapping_matrix(fm.anchors, states, da)));
    Matrix A(n, da);
    for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = gaussian(rng);
    defuzz = std::max(defuzz, reference::max_relative_error(fuzzy::defuzzify_action(fm, A), reference::defuzzify(fm.xi_bar, A)));
    Vector r(P);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = gaussian(rng);
    conserve = std::max(conserve, std::fabs(fuzzy::fuzzify_reward(fm, r).sum() - r.sum()));
  }
  add("mapping_matrix vs product oracle", map, 1e-12);
  add("defuzzify_action vs weighted-sum oracle", defuzz, 1e-12);
  add("fuzzy reward conservation", conserve, 1e-9);

  double zf = 0.0;
  for (int t = 0; t < 20; ++t) {
    AggregatedChannel agg;
    agg.num_aps = 2;
    agg.ap_antennas = 4;
    agg.rows.resize(4, 8);
    for (Eigen::Index i = 0; i < agg.rows.size(); ++i) agg.rows(i) = complex_gaussian(rng);
    zf = std::max(zf, reference::max_relative_error(baselines::zf_direction(agg), reference::zf_normal_equations(agg.rows)));
  }
  add("zf vs normal equations", zf, 1e-8);

  double grad = 0.0;
  {
    auto p = nn::init_mlp({5, 7, 3}, nn::Activation::tanh, rng);
    for (auto& l : p.layers)
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.1 * gaussian(rng);
    p.touch();
    Matrix x(5, 2), g(3, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gaussian(rng);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = gaussian(rng);
    nn::ForwardCache cache;
    nn::forward(p, x, &cache);
    const auto an = nn::backward(p, cache, g);
    auto f = [&]() { return (nn::forward(p, x).array() * g.array()).sum(); };
    const double h = 1e-5;
    for (std::size_t li = 0; li < p.layers.size(); ++li)
      for (Eigen::Index i = 0; i < p.layers[li].weight.size(); ++i) {
        double& w = p.layers[li].weight(i);
        const double keep = w;
        w = keep + h;
        const double up = f();
        w = keep - h;
        const double down = f();
        w = keep;
        const double fd = (up - down) / (2 * h), a = an.layers[li].weight(i);
        grad = std::max(grad, std::fabs(fd - a) / std::max({std::fabs(fd), std::fabs(a), 1e-6}));
      }
  }
  add("mlp backward vs finite differences", grad, 1e-4);
  return out;
}

}  // namespace rismarl::harness
