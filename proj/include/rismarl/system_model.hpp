#pragma once

// Network geometry, channel generation, RIS-cascaded effective channels and
// the downlink signal / SINR / spectral-efficiency evaluation.
//
// Conventions: every stored channel is already in the orientation used by the
// received-signal equation, i.e. `direct` holds H_{l,k}^H (U x M), `ris_ue`
// holds F_{r,k}^H (U x N) and `ap_ris` holds G_{l,r} (N x M). The RIS phase
// matrix entering the product is diag(theta_{r,1..N}).

#include <algorithm>
#include <cmath>
#include <vector>

#include "rismarl/common.hpp"

namespace rismarl {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// beta(dB) = intercept - slope * log10(d / 1 m)
struct PathLossModel {
  double intercept_db = -30.5;
  double slope = 36.7;
  double min_distance = 1.0;
};

struct SystemConfig {
  int num_aps = 4;       // L
  int num_ues = 4;       // K
  int num_ris = 4;       // R (0 disables the RIS paths)
  int ap_antennas = 8;   // M
  int ue_antennas = 1;   // U
  int ris_elements = 16; // N
  double max_power = dbm_to_watts(0.0);      // per AP, watts
  double noise_power = dbm_to_watts(-96.0);  // watts
  double area_side = 50.0;                   // meters
  PathLossModel path_loss{};
  std::uint64_t rng_seed = 1;

  void validate() const {
    if (num_aps < 1 || num_ues < 1 || num_ris < 0 || ap_antennas < 1 || ue_antennas < 1 ||
        ris_elements < 1)
      throw ConfigError("system config: counts must be >= 1 (num_ris >= 0)");
    if (!(max_power > 0.0)) throw ConfigError("system config: max_power must be > 0");
    if (!(noise_power > 0.0)) throw ConfigError("system config: noise_power must be > 0");
    if (!(area_side > 0.0)) throw ConfigError("system config: area_side must be > 0");
    if (!(path_loss.min_distance > 0.0)) throw ConfigError("system config: min_distance must be > 0");
  }

  // Full-size network: L = 4, K = 4, R = 4, M = 8, U = 1, N = 16.
  static SystemConfig paper() { return SystemConfig{}; }

  // Small network used for fast training runs and CI.
  static SystemConfig desk() {
    SystemConfig c;
    c.num_aps = 2;
    c.num_ues = 2;
    c.num_ris = 1;
    c.ap_antennas = 2;
    c.ris_elements = 4;
    return c;
  }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Link distances are max(euclidean, min_distance), so co-located AP/RIS pairs
// still have a finite path loss.
struct Topology {
  std::vector<Point> aps;
  std::vector<Point> ues;
  std::vector<Point> ris;
  Matrix ap_ue;   // L x K
  Matrix ap_ris;  // L x R
  Matrix ris_ue;  // R x K
};

inline double link_distance(const Point& a, const Point& b, double min_distance) {
  return std::max(distance(a, b), min_distance);
}

inline void compute_distances(Topology& topo, double min_distance) {
  const auto L = static_cast<Eigen::Index>(topo.aps.size());
  const auto K = static_cast<Eigen::Index>(topo.ues.size());
  const auto R = static_cast<Eigen::Index>(topo.ris.size());
  topo.ap_ue.resize(L, K);
  topo.ap_ris.resize(L, R);
  topo.ris_ue.resize(R, K);
  for (Eigen::Index l = 0; l < L; ++l) {
    for (Eigen::Index k = 0; k < K; ++k) topo.ap_ue(l, k) = link_distance(topo.aps[l], topo.ues[k], min_distance);
    for (Eigen::Index r = 0; r < R; ++r) topo.ap_ris(l, r) = link_distance(topo.aps[l], topo.ris[r], min_distance);
  }
  for (Eigen::Index r = 0; r < R; ++r)
    for (Eigen::Index k = 0; k < K; ++k) topo.ris_ue(r, k) = link_distance(topo.ris[r], topo.ues[k], min_distance);
}

// Centers of a g x g partition of the square, x-major, truncated to `count`.
inline std::vector<Point> grid_centers(int count, double side) {
  const int g = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count)) - 1e-12));
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(count));
  const double cell = side / g;
  for (int i = 0; i < g && static_cast<int>(pts.size()) < count; ++i)
    for (int j = 0; j < g && static_cast<int>(pts.size()) < count; ++j)
      pts.push_back({(i + 0.5) * cell, (j + 0.5) * cell});
  return pts;
}

inline Topology sample_topology(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  constexpr int kMaxRejections = 1000;
  Topology topo;
  topo.aps = grid_centers(cfg.num_aps, cfg.area_side);
  const auto quadrants = grid_centers(4, cfg.area_side);
  for (int r = 0; r < cfg.num_ris; ++r) topo.ris.push_back(quadrants[static_cast<std::size_t>(r % 4)]);

  const double dmin = cfg.path_loss.min_distance;
  auto far_enough = [&](const Point& p) {
    for (const auto& a : topo.aps)
      if (distance(a, p) < dmin) return false;
    for (const auto& s : topo.ris)
      if (distance(s, p) < dmin) return false;
    return true;
  };
  for (int k = 0; k < cfg.num_ues; ++k) {
    int rejections = 0;
    for (;;) {
      Point p{uniform(rng, 0.0, cfg.area_side), uniform(rng, 0.0, cfg.area_side)};
      if (far_enough(p)) {
        topo.ues.push_back(p);
        break;
      }
      if (++rejections > kMaxRejections)
        throw ConfigError("sample_topology: cannot place UE at minimum separation (degenerate geometry)");
    }
  }
  compute_distances(topo, dmin);
  return topo;
}

inline double large_scale_fading(double d, const PathLossModel& model = {}) {
  if (!(d > 0.0)) throw DomainError("large_scale_fading: distance must be > 0");
  const double db = model.intercept_db - model.slope * std::log10(d);
  return std::pow(10.0, db / 10.0);
}

struct ChannelSet {
  int num_aps = 0;
  int num_ues = 0;
  int num_ris = 0;
  int ap_antennas = 0;
  int ue_antennas = 0;
  int ris_elements = 0;
  std::vector<CMatrix> direct;  // [l*K + k]  U x M
  std::vector<CMatrix> ap_ris;  // [l*R + r]  N x M
  std::vector<CMatrix> ris_ue;  // [r*K + k]  U x N
  Matrix beta_direct;           // L x K
  Matrix beta_ap_ris;           // L x R
  Matrix beta_ris_ue;           // R x K

  const CMatrix& H(int l, int k) const { return direct[static_cast<std::size_t>(l * num_ues + k)]; }
  const CMatrix& G(int l, int r) const { return ap_ris[static_cast<std::size_t>(l * num_ris + r)]; }
  const CMatrix& F(int r, int k) const { return ris_ue[static_cast<std::size_t>(r * num_ues + k)]; }
  CMatrix& H(int l, int k) { return direct[static_cast<std::size_t>(l * num_ues + k)]; }
  CMatrix& G(int l, int r) { return ap_ris[static_cast<std::size_t>(l * num_ris + r)]; }
  CMatrix& F(int r, int k) { return ris_ue[static_cast<std::size_t>(r * num_ues + k)]; }

  // Zero-filled set with the given dimensions.
  static ChannelSet zeros(int L, int K, int R, int M, int U, int N) {
    ChannelSet ch;
    ch.num_aps = L;
    ch.num_ues = K;
    ch.num_ris = R;
    ch.ap_antennas = M;
    ch.ue_antennas = U;
    ch.ris_elements = N;
    ch.direct.assign(static_cast<std::size_t>(L * K), CMatrix::Zero(U, M));
    ch.ap_ris.assign(static_cast<std::size_t>(L * R), CMatrix::Zero(N, M));
    ch.ris_ue.assign(static_cast<std::size_t>(R * K), CMatrix::Zero(U, N));
    ch.beta_direct = Matrix::Zero(L, K);
    ch.beta_ap_ris = Matrix::Zero(L, R);
    ch.beta_ris_ue = Matrix::Zero(R, K);
    return ch;
  }
};

namespace detail {
inline void fill_rayleigh(CMatrix& m, double beta, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = complex_gaussian(rng, beta);
}
}  // namespace detail

// Every entry is sqrt(beta) * g with g ~ CN(0, 1), beta from the link distance.
inline ChannelSet sample_channels(const SystemConfig& cfg, const Topology& topo, Rng& rng) {
  cfg.validate();
  const int L = cfg.num_aps, K = cfg.num_ues, R = cfg.num_ris;
  require(static_cast<int>(topo.aps.size()) == L && static_cast<int>(topo.ues.size()) == K &&
              static_cast<int>(topo.ris.size()) == R,
          "sample_channels: topology does not match config");
  auto ch = ChannelSet::zeros(L, K, R, cfg.ap_antennas, cfg.ue_antennas, cfg.ris_elements);
  for (int l = 0; l < L; ++l)
    for (int k = 0; k < K; ++k) {
      ch.beta_direct(l, k) = large_scale_fading(topo.ap_ue(l, k), cfg.path_loss);
      detail::fill_rayleigh(ch.H(l, k), ch.beta_direct(l, k), rng);
    }
  for (int l = 0; l < L; ++l)
    for (int r = 0; r < R; ++r) {
      ch.beta_ap_ris(l, r) = large_scale_fading(topo.ap_ris(l, r), cfg.path_loss);
      detail::fill_rayleigh(ch.G(l, r), ch.beta_ap_ris(l, r), rng);
    }
  for (int r = 0; r < R; ++r)
    for (int k = 0; k < K; ++k) {
      ch.beta_ris_ue(r, k) = large_scale_fading(topo.ris_ue(r, k), cfg.path_loss);
      detail::fill_rayleigh(ch.F(r, k), ch.beta_ris_ue(r, k), rng);
    }
  return ch;
}

struct PhaseShiftConfig {
  CMatrix theta;  // R x N reflection coefficients
  int bits = 0;   // 0: continuous, b > 0: angles on the 2^b-point grid

  int num_ris() const { return static_cast<int>(theta.rows()); }
  int num_elements() const { return static_cast<int>(theta.cols()); }

  // Angles wrapped into [0, 2*pi).
  Matrix angles() const {
    Matrix a(theta.rows(), theta.cols());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      double x = std::arg(theta(i));
      if (x < 0.0) x += kTwoPi;
      if (x >= kTwoPi) x -= kTwoPi;
      a(i) = x;
    }
    return a;
  }

  static PhaseShiftConfig from_angles(const Matrix& angles, int bits = 0) {
    PhaseShiftConfig p;
    p.bits = bits;
    p.theta.resize(angles.rows(), angles.cols());
    for (Eigen::Index i = 0; i < angles.size(); ++i) p.theta(i) = std::polar(1.0, angles(i));
    return p;
  }

  static PhaseShiftConfig unit(int R, int N) {
    PhaseShiftConfig p;
    p.theta = CMatrix::Ones(R, N);
    return p;
  }
};

// Per-AP precoders: per_ap[l] is M x K and its column k is w_{l,k}.
struct PrecodingSet {
  std::vector<CMatrix> per_ap;

  int num_aps() const { return static_cast<int>(per_ap.size()); }
  int num_ues() const { return per_ap.empty() ? 0 : static_cast<int>(per_ap.front().cols()); }
  int ap_antennas() const { return per_ap.empty() ? 0 : static_cast<int>(per_ap.front().rows()); }

  auto w(int l, int k) const { return per_ap[static_cast<std::size_t>(l)].col(k); }
  double ap_power(int l) const { return per_ap[static_cast<std::size_t>(l)].squaredNorm(); }

  static PrecodingSet zeros(int L, int M, int K) {
    PrecodingSet p;
    p.per_ap.assign(static_cast<std::size_t>(L), CMatrix::Zero(M, K));
    return p;
  }
};

inline CMatrix effective_channel(const ChannelSet& ch, const PhaseShiftConfig& phases, int l, int k) {
  require(l >= 0 && l < ch.num_aps && k >= 0 && k < ch.num_ues, "effective_channel: index out of range");
  require(ch.num_ris == 0 || (phases.num_ris() == ch.num_ris && phases.num_elements() == ch.ris_elements),
          "effective_channel: phase configuration does not match channel set");
  CMatrix h = ch.H(l, k);
  for (int r = 0; r < ch.num_ris; ++r) {
    const CMatrix& F = ch.F(r, k);
    const CMatrix& G = ch.G(l, r);
    require(F.cols() == G.rows() && F.rows() == h.rows() && G.cols() == h.cols(),
            "effective_channel: dimension mismatch");
    h.noalias() += F * phases.theta.row(r).transpose().asDiagonal() * G;
  }
  return h;
}

// Rows k = 1..K, column block l = effective_channel(l, k); single-antenna UEs.
struct AggregatedChannel {
  CMatrix rows;  // K x (L*M)
  int num_aps = 0;
  int ap_antennas = 0;

  int num_ues() const { return static_cast<int>(rows.rows()); }
};

inline AggregatedChannel aggregate_channel(const ChannelSet& ch, const PhaseShiftConfig& phases) {
  require(ch.ue_antennas == 1, "aggregate_channel: requires single-antenna UEs (U = 1)");
  AggregatedChannel agg;
  agg.num_aps = ch.num_aps;
  agg.ap_antennas = ch.ap_antennas;
  agg.rows.resize(ch.num_ues, ch.num_aps * ch.ap_antennas);
  for (int k = 0; k < ch.num_ues; ++k)
    for (int l = 0; l < ch.num_aps; ++l)
      agg.rows.block(k, l * ch.ap_antennas, 1, ch.ap_antennas) = effective_channel(ch, phases, l, k);
  return agg;
}

// (L*M) x K with AP l occupying rows [l*M, (l+1)*M).
inline CMatrix stack_precoders(const PrecodingSet& prec) {
  const int L = prec.num_aps(), M = prec.ap_antennas(), K = prec.num_ues();
  CMatrix W(L * M, K);
  for (int l = 0; l < L; ++l) W.middleRows(l * M, M) = prec.per_ap[static_cast<std::size_t>(l)];
  return W;
}

inline PrecodingSet unstack_precoders(const CMatrix& W, int L, int M) {
  require(W.rows() == L * M, "unstack_precoders: row count must be L*M");
  PrecodingSet p;
  p.per_ap.reserve(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) p.per_ap.emplace_back(W.middleRows(l * M, M));
  return p;
}

inline CVector transmit_signal(const PrecodingSet& prec, const CVector& symbols, int l) {
  require(symbols.size() == prec.num_ues(), "transmit_signal: symbol vector must have length K");
  require(l >= 0 && l < prec.num_aps(), "transmit_signal: AP index out of range");
  return prec.per_ap[static_cast<std::size_t>(l)] * symbols;
}

// y_k = sum_l heff_{l,k} x_l + z_k for every UE.
inline std::vector<CVector> received_signal(const ChannelSet& ch, const PhaseShiftConfig& phases,
                                            const PrecodingSet& prec, const CVector& symbols,
                                            const std::vector<CVector>& noise) {
  require(static_cast<int>(noise.size()) == ch.num_ues, "received_signal: need one noise vector per UE");
  require(prec.num_aps() == ch.num_aps, "received_signal: precoder/channel AP count mismatch");
  std::vector<CVector> x;
  x.reserve(static_cast<std::size_t>(ch.num_aps));
  for (int l = 0; l < ch.num_aps; ++l) x.push_back(transmit_signal(prec, symbols, l));
  std::vector<CVector> y;
  y.reserve(static_cast<std::size_t>(ch.num_ues));
  for (int k = 0; k < ch.num_ues; ++k) {
    require(noise[static_cast<std::size_t>(k)].size() == ch.ue_antennas, "received_signal: noise length must be U");
    CVector yk = noise[static_cast<std::size_t>(k)];
    for (int l = 0; l < ch.num_aps; ++l) yk.noalias() += effective_channel(ch, phases, l, k) * x[static_cast<std::size_t>(l)];
    y.push_back(std::move(yk));
  }
  return y;
}

// A(k, j) = sum_l heff_{l,k} w_{l,j}: the complex gain of stream j at UE k.
inline CMatrix coupling_matrix(const AggregatedChannel& agg, const PrecodingSet& prec) {
  require(prec.num_aps() == agg.num_aps && prec.ap_antennas() == agg.ap_antennas &&
              prec.num_ues() == agg.num_ues(),
          "coupling_matrix: precoder dimensions do not match channel");
  return agg.rows * stack_precoders(prec);
}

inline Vector sinr_from_coupling(const CMatrix& A, double noise_power) {
  if (!(noise_power > 0.0)) throw ConfigError("sinr: noise power must be > 0");
  const auto K = A.rows();
  Vector g(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double desired = std::norm(A(k, k));
    double interference = 0.0;
    for (Eigen::Index j = 0; j < K; ++j)
      if (j != k) interference += std::norm(A(k, j));
    g(k) = desired / (interference + noise_power);
  }
  return g;
}

inline Vector sinr_all(const AggregatedChannel& agg, const PrecodingSet& prec, double noise_power) {
  return sinr_from_coupling(coupling_matrix(agg, prec), noise_power);
}

inline Vector sinr_all(const ChannelSet& ch, const PhaseShiftConfig& phases, const PrecodingSet& prec,
                       double noise_power) {
  if (ch.ue_antennas != 1) throw ContractViolation("sinr: only single-antenna UEs (U = 1) are supported");
  if (!(noise_power > 0.0)) throw ConfigError("sinr: noise power must be > 0");
  return sinr_all(aggregate_channel(ch, phases), prec, noise_power);
}

inline double sinr(const ChannelSet& ch, const PhaseShiftConfig& phases, const PrecodingSet& prec, int k,
                   double noise_power) {
  require(k >= 0 && k < ch.num_ues, "sinr: UE index out of range");
  return sinr_all(ch, phases, prec, noise_power)(k);
}

inline double user_se(double gamma) {
  if (!(gamma >= 0.0)) throw ContractViolation("user_se: SINR must be >= 0");
  return std::log2(1.0 + gamma);
}

inline double sum_se_from_sinr(const Vector& gamma) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < gamma.size(); ++k) s += user_se(gamma(k));
  return s;
}

inline double sum_se(const AggregatedChannel& agg, const PrecodingSet& prec, double noise_power) {
  return sum_se_from_sinr(sinr_all(agg, prec, noise_power));
}

inline double sum_se(const ChannelSet& ch, const PhaseShiftConfig& phases, const PrecodingSet& prec,
                     double noise_power) {
  return sum_se_from_sinr(sinr_all(ch, phases, prec, noise_power));
}

// Scales every AP that exceeds the budget back onto it; feasible APs untouched.
inline PrecodingSet project_power(PrecodingSet prec, double max_power) {
  for (auto& W : prec.per_ap) {
    const double p = W.squaredNorm();
    if (p > max_power) W *= std::sqrt(max_power / p);
  }
  return prec;
}

inline bool power_feasible(const PrecodingSet& prec, double max_power, double tol = 1e-12) {
  for (int l = 0; l < prec.num_aps(); ++l)
    if (prec.ap_power(l) > max_power * (1.0 + tol)) return false;
  return true;
}

inline double quantize_angle(double angle, int bits) {
  if (bits < 1) throw ContractViolation("quantize_phases: bits must be >= 1");
  const double levels = std::ldexp(1.0, bits);
  const double step = kTwoPi / levels;
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // nearest grid point, ties resolved toward the smaller angle
  double q = std::ceil(a / step - 0.5);
  if (q >= levels) q -= levels;
  return q * step;
}

inline PhaseShiftConfig quantize_phases(const PhaseShiftConfig& phases, int bits) {
  if (bits < 1) throw ContractViolation("quantize_phases: bits must be >= 1");
  PhaseShiftConfig out;
  out.bits = bits;
  out.theta.resize(phases.theta.rows(), phases.theta.cols());
  for (Eigen::Index i = 0; i < phases.theta.size(); ++i)
    out.theta(i) = std::polar(std::abs(phases.theta(i)), quantize_angle(std::arg(phases.theta(i)), bits));
  return out;
}

}  // namespace rismarl
