#pragma once

// Centralized reference designs: MRT / ZF / MMSE precoding over the aggregated
// effective channel, random RIS phases, and an alternating-optimization joint
// design (MMSE precoding + grid coordinate descent over RIS elements).

#include <optional>
#include <vector>

#include <Eigen/QR>

#include "rismarl/system_model.hpp"

namespace rismarl::baselines {

// Largest common scaling of W that keeps every AP within the budget, followed
// by the per-AP projection. A common factor preserves the beam directions.
inline PrecodingSet scale_to_budget(const CMatrix& W, int L, int M, double max_power) {
  double worst = 0.0;
  for (int l = 0; l < L; ++l) worst = std::max(worst, W.middleRows(l * M, M).squaredNorm());
  if (worst == 0.0) return PrecodingSet::zeros(L, M, static_cast<int>(W.cols()));
  return project_power(unstack_precoders(W * std::sqrt(max_power / worst), L, M), max_power);
}

inline CMatrix mrt_direction(const AggregatedChannel& agg) { return agg.rows.adjoint(); }

// Right pseudo-inverse of the aggregated channel; H * W = I on full row rank.
inline CMatrix zf_direction(const AggregatedChannel& agg) {
  const auto K = agg.rows.rows();
  if (agg.rows.cols() < K) throw NumericalError("zf_precoder: needs L*M >= K");
  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(agg.rows);
  if (cod.rank() < K) throw NumericalError("zf_precoder: aggregated channel is rank deficient, cannot null interference");
  return cod.pseudoInverse();
}

// H^H (H H^H + reg I)^-1 with reg = K * noise / total_power.
inline CMatrix mmse_direction(const AggregatedChannel& agg, double total_power, double noise_power) {
  const auto K = agg.rows.rows();
  const double reg = static_cast<double>(K) * noise_power / total_power;
  CMatrix gram = agg.rows * agg.rows.adjoint();
  gram.diagonal().array() += reg;
  return agg.rows.adjoint() * gram.ldlt().solve(CMatrix::Identity(K, K));
}

inline PrecodingSet mrt_precoder(const AggregatedChannel& agg, double max_power) {
  return scale_to_budget(mrt_direction(agg), agg.num_aps, agg.ap_antennas, max_power);
}

inline PrecodingSet zf_precoder(const AggregatedChannel& agg, double max_power) {
  return scale_to_budget(zf_direction(agg), agg.num_aps, agg.ap_antennas, max_power);
}

inline PrecodingSet mmse_precoder(const AggregatedChannel& agg, double max_power, double noise_power) {
  if (!(noise_power > 0.0)) throw ConfigError("mmse_precoder: noise power must be > 0");
  const double total = max_power * agg.num_aps;
  return scale_to_budget(mmse_direction(agg, total, noise_power), agg.num_aps, agg.ap_antennas, max_power);
}

inline PhaseShiftConfig random_phases(const SystemConfig& cfg, Rng& rng) {
  Matrix a(cfg.num_ris, cfg.ris_elements);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = uniform(rng, 0.0, kTwoPi);
  return PhaseShiftConfig::from_angles(a);
}

struct AoResult {
  PrecodingSet precoders;
  PhaseShiftConfig phases;
  std::vector<double> trace;  // objective after every coordinate visit, trace[0] = start
  int rounds = 0;
};

// Alternating optimization. The precoder step is MMSE for the current phases;
// the phase step visits every RIS element and tries `grid_size` uniformly
// spaced angles with all other elements fixed, keeping a candidate only if the
// sum-SE of (MMSE precoder, phases) strictly improves. Stops after `iters`
// rounds or when a round gains less than 1e-4 relative.
inline AoResult ao_optimize(const ChannelSet& ch, const SystemConfig& cfg, int iters, int grid_size,
                            std::optional<PhaseShiftConfig> initial = std::nullopt) {
  if (iters < 1) throw ContractViolation("ao_optimize: iters must be >= 1");
  if (grid_size < 2) throw ContractViolation("ao_optimize: grid_size must be >= 2");
  cfg.validate();
  const int L = ch.num_aps, K = ch.num_ues, M = ch.ap_antennas, R = ch.num_ris, N = ch.ris_elements;
  PhaseShiftConfig phases = initial ? *initial : PhaseShiftConfig::unit(R, N);
  require(phases.num_ris() == R && phases.num_elements() == N, "ao_optimize: initial phases have wrong shape");

  AggregatedChannel agg = aggregate_channel(ch, phases);
  auto objective = [&](const AggregatedChannel& a) {
    return sum_se(a, mmse_precoder(a, cfg.max_power, cfg.noise_power), cfg.noise_power);
  };

  AoResult res;
  double current = objective(agg);
  res.trace.push_back(current);

  std::vector<cdouble> grid;
  grid.reserve(static_cast<std::size_t>(grid_size));
  for (int q = 0; q < grid_size; ++q) grid.push_back(std::polar(1.0, kTwoPi * q / grid_size));

  CMatrix contrib(K, L * M);
  AggregatedChannel cand = agg;
  for (int round = 0; round < iters; ++round) {
    const double round_start = current;
    for (int r = 0; r < R; ++r) {
      for (int n = 0; n < N; ++n) {
        // heff rows are affine in theta_{r,n}: rest + theta * contrib
        for (int k = 0; k < K; ++k)
          for (int l = 0; l < L; ++l)
            contrib.block(k, l * M, 1, M) = ch.F(r, k)(0, n) * ch.G(l, r).row(n);
        const cdouble theta_now = phases.theta(r, n);
        const CMatrix rest = agg.rows - theta_now * contrib;
        cdouble best_theta = theta_now;
        for (const cdouble& t : grid) {
          cand.rows = rest + t * contrib;
          const double v = objective(cand);
          if (v > current) {
            current = v;
            best_theta = t;
          }
        }
        if (best_theta != theta_now) {
          phases.theta(r, n) = best_theta;
          agg.rows = rest + best_theta * contrib;
        }
        res.trace.push_back(current);
      }
    }
    res.rounds = round + 1;
    if (round_start > 0.0 && (current - round_start) / round_start < 1e-4) break;
  }
  // resync against accumulated rounding in the incremental updates
  agg = aggregate_channel(ch, phases);
  res.phases = phases;
  res.precoders = mmse_precoder(agg, cfg.max_power, cfg.noise_power);
  return res;
}

}  // namespace rismarl::baselines
