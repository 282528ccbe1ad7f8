#pragma once

// RL view of the downlink: per-AP observations, action decoding and the
// shared sum-SE reward.
//
// Local observation of AP l, in order (complex entries interleaved re, im;
// matrices column-major):
//   H_{l,k}^H for k = 1..K              2*U*M*K
//   F_{r,k}^H for r = 1..R, k = 1..K    2*R*K*U*N
//   G_{l,r}   for r = 1..R              2*R*N*M
//   distances AP l -> UE k              K
//   w_{l,k} (M x K)                     2*M*K
//   theta_{r,n}, r-major                2*R*N
//   log2(1 + gamma_k) of the last step  K

#include <vector>

#include "rismarl/system_model.hpp"

namespace rismarl::marl {

inline int local_state_dim(const SystemConfig& c) {
  const int K = c.num_ues, R = c.num_ris, M = c.ap_antennas, U = c.ue_antennas, N = c.ris_elements;
  return 2 * U * M * K + 2 * R * K * U * N + 2 * R * N * M + K + 2 * M * K + 2 * R * N + K;
}

inline int precoding_action_dim(const SystemConfig& c) { return 2 * c.ap_antennas * c.num_ues; }
inline int phase_action_dim(const SystemConfig& c) { return c.num_ris * c.ris_elements; }

namespace detail {
inline void put_complex(Vector& v, Eigen::Index& at, const CMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      v(at++) = m(i, j).real();
      v(at++) = m(i, j).imag();
    }
}
}  // namespace detail

inline Vector build_env_state(const ChannelSet& ch, const PhaseShiftConfig& phases, const PrecodingSet& prec,
                              const Topology& topo, const Vector& last_sinr, int l) {
  const int K = ch.num_ues, R = ch.num_ris, M = ch.ap_antennas, U = ch.ue_antennas, N = ch.ris_elements;
  require(l >= 0 && l < ch.num_aps, "build_env_state: AP index out of range");
  require(last_sinr.size() == K, "build_env_state: need one SINR per UE");
  require(prec.num_aps() == ch.num_aps && prec.ap_antennas() == M && prec.num_ues() == K,
          "build_env_state: precoder shape mismatch");
  const int dim = 2 * U * M * K + 2 * R * K * U * N + 2 * R * N * M + K + 2 * M * K + 2 * R * N + K;
  Vector s(dim);
  Eigen::Index at = 0;
  for (int k = 0; k < K; ++k) detail::put_complex(s, at, ch.H(l, k));
  for (int r = 0; r < R; ++r)
    for (int k = 0; k < K; ++k) detail::put_complex(s, at, ch.F(r, k));
  for (int r = 0; r < R; ++r) detail::put_complex(s, at, ch.G(l, r));
  for (int k = 0; k < K; ++k) s(at++) = topo.ap_ue(l, k);
  detail::put_complex(s, at, prec.per_ap[static_cast<std::size_t>(l)]);
  for (int r = 0; r < R; ++r)
    for (int n = 0; n < N; ++n) {
      s(at++) = phases.theta(r, n).real();
      s(at++) = phases.theta(r, n).imag();
    }
  for (int k = 0; k < K; ++k) s(at++) = std::log2(1.0 + last_sinr(k));
  return s;
}

// a in [-1, 1]^(2MK), interleaved (re, im) over the column-major M x K matrix,
// scaled by sqrt(P_max) and projected onto the AP power budget.
inline CMatrix decode_precoding_action(const Vector& a, int M, int K, double max_power) {
  require(a.size() == 2 * M * K, "decode_precoding_action: action must have length 2*M*K");
  const double s = std::sqrt(max_power);
  CMatrix W(M, K);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      const auto i = 2 * (k * M + m);
      W(m, k) = cdouble(s * a(i), s * a(i + 1));
    }
  const double p = W.squaredNorm();
  if (p > max_power) W *= std::sqrt(max_power / p);
  return W;
}

inline Vector encode_precoding_action(const CMatrix& W, double max_power) {
  const auto M = W.rows(), K = W.cols();
  const double s = std::sqrt(max_power);
  Vector a(2 * M * K);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index m = 0; m < M; ++m) {
      const auto i = 2 * (k * M + m);
      a(i) = W(m, k).real() / s;
      a(i + 1) = W(m, k).imag() / s;
    }
  return a;
}

// angle = pi * (a + 1) in [0, 2*pi], element (r, n) at index r*N + n.
inline PhaseShiftConfig decode_phase_action(const Vector& a, int R, int N, int bits = 0) {
  require(a.size() == R * N, "decode_phase_action: action must have length R*N");
  Matrix angles(R, N);
  for (int r = 0; r < R; ++r)
    for (int n = 0; n < N; ++n) angles(r, n) = kPi * (a(r * N + n) + 1.0);
  auto p = PhaseShiftConfig::from_angles(angles);
  return bits > 0 ? quantize_phases(p, bits) : p;
}

// Cooperative game: every agent receives the network sum-SE.
inline Vector reward(const ChannelSet& ch, const PhaseShiftConfig& phases, const PrecodingSet& prec,
                     double noise_power, int num_agents) {
  return Vector::Constant(num_agents, sum_se(ch, phases, prec, noise_power));
}

struct StepOutcome {
  double sum_se = 0.0;
  Vector sinr;
};

// One channel realization; precoders and phases evolve with the agents' actions.
class Environment {
 public:
  explicit Environment(SystemConfig cfg, int discrete_bits = 0) : cfg_(std::move(cfg)), bits_(discrete_bits) {
    cfg_.validate();
  }

  void reset(Rng& rng) {
    Topology topo = sample_topology(cfg_, rng);
    ChannelSet ch = sample_channels(cfg_, topo, rng);
    load(std::move(topo), std::move(ch));
  }

  // Starts an episode on a given realization (zero precoders, unit phases).
  void load(Topology topo, ChannelSet ch) {
    topo_ = std::move(topo);
    ch_ = std::move(ch);
    prec_ = PrecodingSet::zeros(cfg_.num_aps, cfg_.ap_antennas, cfg_.num_ues);
    phases_ = PhaseShiftConfig::unit(cfg_.num_ris, cfg_.ris_elements);
    last_sinr_ = Vector::Zero(cfg_.num_ues);
  }

  // L x d_s raw observations.
  Matrix local_states() const {
    Matrix S(cfg_.num_aps, local_state_dim(cfg_));
    for (int l = 0; l < cfg_.num_aps; ++l)
      S.row(l) = build_env_state(ch_, phases_, prec_, topo_, last_sinr_, l).transpose();
    return S;
  }

  std::pair<PrecodingSet, PhaseShiftConfig> decode(const Matrix& precoding_actions, const Vector& phase_action) const {
    require(precoding_actions.rows() == cfg_.num_aps && precoding_actions.cols() == precoding_action_dim(cfg_),
            "Environment: precoding actions must be L x 2MK");
    PrecodingSet prec;
    for (int l = 0; l < cfg_.num_aps; ++l)
      prec.per_ap.push_back(decode_precoding_action(precoding_actions.row(l).transpose(), cfg_.ap_antennas,
                                                    cfg_.num_ues, cfg_.max_power));
    auto phases = decode_phase_action(phase_action, cfg_.num_ris, cfg_.ris_elements, bits_);
    return {std::move(prec), std::move(phases)};
  }

  StepOutcome evaluate(const Matrix& precoding_actions, const Vector& phase_action) const {
    auto [prec, phases] = decode(precoding_actions, phase_action);
    StepOutcome out;
    out.sinr = sinr_all(ch_, phases, prec, cfg_.noise_power);
    out.sum_se = sum_se_from_sinr(out.sinr);
    return out;
  }

  StepOutcome step(const Matrix& precoding_actions, const Vector& phase_action) {
    auto [prec, phases] = decode(precoding_actions, phase_action);
    StepOutcome out;
    out.sinr = sinr_all(ch_, phases, prec, cfg_.noise_power);
    out.sum_se = sum_se_from_sinr(out.sinr);
    prec_ = std::move(prec);
    phases_ = std::move(phases);
    last_sinr_ = out.sinr;
    return out;
  }

  const SystemConfig& config() const { return cfg_; }
  const Topology& topology() const { return topo_; }
  const ChannelSet& channels() const { return ch_; }
  const PrecodingSet& precoders() const { return prec_; }
  const PhaseShiftConfig& phases() const { return phases_; }

 private:
  SystemConfig cfg_;
  int bits_ = 0;
  Topology topo_;
  ChannelSet ch_;
  PrecodingSet prec_;
  PhaseShiftConfig phases_;
  Vector last_sinr_;
};

}  // namespace rismarl::marl
