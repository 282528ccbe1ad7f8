#include <gtest/gtest.h>

#include <cmath>

#include "rismarl/reference.hpp"
#include "rismarl/serialization.hpp"
#include "rismarl/system_model.hpp"
#include "test_util.hpp"

using namespace rismarl;
using rismarl::testing::random_channels;
using rismarl::testing::random_precoders;
using rismarl::testing::random_unit_phases;

namespace {

bool same_channels(const ChannelSet& a, const ChannelSet& b) {
  if (a.direct.size() != b.direct.size() || a.ap_ris.size() != b.ap_ris.size() || a.ris_ue.size() != b.ris_ue.size())
    return false;
  for (std::size_t i = 0; i < a.direct.size(); ++i)
    if (a.direct[i] != b.direct[i]) return false;
  for (std::size_t i = 0; i < a.ap_ris.size(); ++i)
    if (a.ap_ris[i] != b.ap_ris[i]) return false;
  for (std::size_t i = 0; i < a.ris_ue.size(); ++i)
    if (a.ris_ue[i] != b.ris_ue[i]) return false;
  return a.beta_direct == b.beta_direct && a.beta_ap_ris == b.beta_ap_ris && a.beta_ris_ue == b.beta_ris_ue;
}

}  // namespace

TEST(Topology, ApGridAtSubSquareCenters) {
  auto cfg = SystemConfig::paper();
  Rng rng = make_rng(7);
  const auto topo = sample_topology(cfg, rng);
  ASSERT_EQ(topo.aps.size(), 4u);
  const double want[4][2] = {{12.5, 12.5}, {12.5, 37.5}, {37.5, 12.5}, {37.5, 37.5}};
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(topo.aps[i].x, want[i][0]);
    EXPECT_DOUBLE_EQ(topo.aps[i].y, want[i][1]);
    EXPECT_DOUBLE_EQ(topo.ris[i].x, want[i][0]);
    EXPECT_DOUBLE_EQ(topo.ris[i].y, want[i][1]);
  }
}

TEST(Topology, GeneralGridAndCycledRis) {
  auto cfg = SystemConfig::paper();
  cfg.num_aps = 5;
  cfg.num_ris = 6;
  cfg.area_side = 30.0;
  Rng rng = make_rng(1);
  const auto topo = sample_topology(cfg, rng);
  // 3 x 3 grid of 10 m cells truncated to 5 points
  ASSERT_EQ(topo.aps.size(), 5u);
  EXPECT_DOUBLE_EQ(topo.aps[3].x, 15.0);
  EXPECT_DOUBLE_EQ(topo.aps[3].y, 5.0);
  EXPECT_DOUBLE_EQ(topo.ris[4].x, topo.ris[0].x);
  EXPECT_DOUBLE_EQ(topo.ris[5].y, topo.ris[1].y);
}

TEST(Topology, UesInsideAreaAndSeparated) {
  auto cfg = SystemConfig::paper();
  cfg.num_ues = 50;
  Rng rng = make_rng(3);
  const auto topo = sample_topology(cfg, rng);
  for (const auto& u : topo.ues) {
    EXPECT_GE(u.x, 0.0);
    EXPECT_LE(u.x, cfg.area_side);
    EXPECT_GE(u.y, 0.0);
    EXPECT_LE(u.y, cfg.area_side);
    for (const auto& a : topo.aps) EXPECT_GE(distance(a, u), cfg.path_loss.min_distance);
  }
  for (Eigen::Index i = 0; i < topo.ap_ue.size(); ++i) EXPECT_GT(topo.ap_ue(i), 0.0);
  for (Eigen::Index i = 0; i < topo.ap_ris.size(); ++i) EXPECT_GT(topo.ap_ris(i), 0.0);
  EXPECT_NEAR(topo.ap_ue(1, 4), distance(topo.aps[1], topo.ues[4]), 1e-12);
}

TEST(Topology, DegenerateGeometryIsRejected) {
  auto cfg = SystemConfig::paper();
  cfg.area_side = 0.5;  // every point is within 1 m of an AP
  Rng rng = make_rng(3);
  EXPECT_THROW(sample_topology(cfg, rng), ConfigError);
}

TEST(Topology, DeterministicUnderSeed) {
  auto cfg = SystemConfig::paper();
  Rng a = make_rng(11), b = make_rng(11);
  const auto t1 = sample_topology(cfg, a), t2 = sample_topology(cfg, b);
  for (std::size_t k = 0; k < t1.ues.size(); ++k) {
    EXPECT_EQ(t1.ues[k].x, t2.ues[k].x);
    EXPECT_EQ(t1.ues[k].y, t2.ues[k].y);
  }
}

TEST(PathLoss, HandValues) {
  EXPECT_NEAR(large_scale_fading(1.0), std::pow(10.0, -3.05), 1e-18);
  EXPECT_NEAR(large_scale_fading(1.0), 8.912509381337459e-4, 1e-15);
  EXPECT_NEAR(large_scale_fading(10.0), std::pow(10.0, -6.72), 1e-20);
  EXPECT_GT(large_scale_fading(3.0), large_scale_fading(3.5));
  EXPECT_THROW(large_scale_fading(0.0), DomainError);
  EXPECT_THROW(large_scale_fading(-2.0), DomainError);
}

TEST(Channels, SecondMomentMatchesBeta) {
  auto cfg = SystemConfig::desk();
  Rng rng = make_rng(5);
  const auto topo = sample_topology(cfg, rng);
  const double beta = large_scale_fading(topo.ap_ue(0, 1), cfg.path_loss);
  double ms = 0.0;
  cdouble mean = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto ch = sample_channels(cfg, topo, rng);
    const cdouble h = ch.H(0, 1)(0, 1);
    ms += std::norm(h);
    mean += h;
  }
  ms /= draws;
  mean /= static_cast<double>(draws);
  EXPECT_LT(std::fabs(ms / beta - 1.0), 0.03);
  EXPECT_LT(std::abs(mean) / std::sqrt(beta), 0.02);
}

TEST(Channels, ShapesAndDeterminism) {
  auto cfg = SystemConfig::paper();
  Rng r0 = make_rng(9);
  const auto topo = sample_topology(cfg, r0);
  Rng a = make_rng(4), b = make_rng(4);
  const auto c1 = sample_channels(cfg, topo, a), c2 = sample_channels(cfg, topo, b);
  EXPECT_TRUE(same_channels(c1, c2));
  for (const auto& m : c1.direct) {
    EXPECT_EQ(m.rows(), cfg.ue_antennas);
    EXPECT_EQ(m.cols(), cfg.ap_antennas);
    EXPECT_TRUE(m.allFinite());
  }
  for (const auto& m : c1.ap_ris) {
    EXPECT_EQ(m.rows(), cfg.ris_elements);
    EXPECT_EQ(m.cols(), cfg.ap_antennas);
  }
  for (const auto& m : c1.ris_ue) {
    EXPECT_EQ(m.rows(), cfg.ue_antennas);
    EXPECT_EQ(m.cols(), cfg.ris_elements);
  }
}

TEST(Channels, JsonRoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto cfg = SystemConfig::desk();
    cfg.num_ris = static_cast<int>(seed % 3);
    Rng rng = make_rng(seed);
    const auto topo = sample_topology(cfg, rng);
    const auto ch = sample_channels(cfg, topo, rng);
    const auto ch2 = io::channels_from_json(io::json::parse(io::to_json(ch).dump()));
    EXPECT_TRUE(same_channels(ch, ch2));
    const auto t2 = io::topology_from_json(io::json::parse(io::to_json(topo).dump()));
    EXPECT_EQ(topo.ap_ue, t2.ap_ue);
    EXPECT_EQ(topo.ues.back().x, t2.ues.back().x);
  }
}

TEST(EffectiveChannel, NoRisEqualsDirect) {
  Rng rng = make_rng(1);
  const auto ch = random_channels(2, 3, 0, 4, 2, 5, rng);
  PhaseShiftConfig none;
  none.theta.resize(0, 5);
  EXPECT_EQ(effective_channel(ch, none, 1, 2), ch.H(1, 2));
}

TEST(EffectiveChannel, ScalarCancellation) {
  auto ch = ChannelSet::zeros(1, 1, 1, 1, 1, 1);
  ch.H(0, 0)(0, 0) = 1.0;
  ch.F(0, 0)(0, 0) = 1.0;
  ch.G(0, 0)(0, 0) = 1.0;
  const auto ph = PhaseShiftConfig::from_angles(Matrix::Constant(1, 1, kPi));
  EXPECT_NEAR(std::abs(effective_channel(ch, ph, 0, 0)(0, 0)), 0.0, 1e-15);
}

TEST(EffectiveChannel, MatchesLoopOracle) {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ch = random_channels(2, 3, 2, 3, 2, 4, rng);
    const auto ph = random_unit_phases(2, 4, rng);
    for (int l = 0; l < 2; ++l)
      for (int k = 0; k < 3; ++k)
        EXPECT_LT(reference::max_relative_error(effective_channel(ch, ph, l, k),
                                                reference::effective_channel(ch, ph, l, k)),
                  1e-12);
  }
}

TEST(EffectiveChannel, LinearInEachChannel) {
  Rng rng = make_rng(3);
  const auto a = random_channels(1, 1, 2, 3, 1, 4, rng);
  auto b = random_channels(1, 1, 2, 3, 1, 4, rng);
  const auto ph = random_unit_phases(2, 4, rng);
  // scaling F by 2 scales only the cascaded part by 2
  b = a;
  for (auto& F : b.ris_ue) F *= 2.0;
  const CMatrix direct = a.H(0, 0);
  const CMatrix ha = effective_channel(a, ph, 0, 0) - direct;
  const CMatrix hb = effective_channel(b, ph, 0, 0) - direct;
  EXPECT_LT((hb - 2.0 * ha).cwiseAbs().maxCoeff(), 1e-12);
  auto c = a;
  for (auto& G : c.ap_ris) G *= cdouble(0.0, 3.0);
  const CMatrix hc = effective_channel(c, ph, 0, 0) - direct;
  EXPECT_LT((hc - cdouble(0.0, 3.0) * ha).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EffectiveChannel, ShapeMismatchIsContractViolation) {
  Rng rng = make_rng(3);
  const auto ch = random_channels(1, 1, 2, 3, 1, 4, rng);
  const auto ph = random_unit_phases(2, 3, rng);
  EXPECT_THROW(effective_channel(ch, ph, 0, 0), ContractViolation);
}

TEST(Signals, TransmitSignal) {
  Rng rng = make_rng(4);
  const auto prec = random_precoders(2, 3, 3, rng);
  CVector e = CVector::Zero(3);
  e(1) = 1.0;
  EXPECT_EQ(transmit_signal(prec, e, 1), prec.per_ap[1].col(1));
  EXPECT_EQ(transmit_signal(prec, CVector::Zero(3), 0), CVector::Zero(3));
  CVector s(3);
  for (int k = 0; k < 3; ++k) s(k) = complex_gaussian(rng);
  const CVector x = transmit_signal(prec, s, 0);
  for (int m = 0; m < 3; ++m) {
    cdouble acc = 0.0;
    for (int k = 0; k < 3; ++k) acc += prec.per_ap[0](m, k) * s(k);
    EXPECT_LT(std::abs(x(m) - acc), 1e-14);
  }
}

TEST(Signals, ReceivedSignal) {
  Rng rng = make_rng(5);
  const int L = 2, K = 3, R = 1, M = 2, U = 2, N = 3;
  const auto ch = random_channels(L, K, R, M, U, N, rng);
  const auto ph = random_unit_phases(R, N, rng);
  const auto prec = random_precoders(L, M, K, rng);
  CVector s(K);
  for (int k = 0; k < K; ++k) s(k) = complex_gaussian(rng);
  std::vector<CVector> z(K, CVector::Zero(U));
  for (auto& v : z) v(0) = complex_gaussian(rng);
  const auto y = received_signal(ch, ph, prec, s, z);
  for (int k = 0; k < K; ++k) {
    // stacked oracle: [heff_1 ... heff_L] (U x LM) * [x_1; ...; x_L]
    CMatrix Hk(U, L * M);
    CVector X(L * M);
    for (int l = 0; l < L; ++l) {
      Hk.middleCols(l * M, M) = reference::effective_channel(ch, ph, l, k);
      for (int m = 0; m < M; ++m) {
        cdouble acc = 0.0;
        for (int j = 0; j < K; ++j) acc += prec.per_ap[l](m, j) * s(j);
        X(l * M + m) = acc;
      }
    }
    const CVector want = Hk * X + z[k];
    EXPECT_LT((y[k] - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff(), 1e-12);
  }
  const auto y0 = received_signal(ch, ph, PrecodingSet::zeros(L, M, K), s, z);
  for (int k = 0; k < K; ++k) EXPECT_EQ(y0[k], z[k]);
}

TEST(Sinr, SingleUserNoInterference) {
  auto ch = ChannelSet::zeros(1, 1, 0, 1, 1, 1);
  ch.H(0, 0)(0, 0) = cdouble(0.3, -0.4);
  auto prec = PrecodingSet::zeros(1, 1, 1);
  prec.per_ap[0](0, 0) = cdouble(2.0, 1.0);
  PhaseShiftConfig none;
  none.theta.resize(0, 1);
  const double noise = 0.1;
  EXPECT_NEAR(sinr(ch, none, prec, 0, noise), std::norm(cdouble(0.3, -0.4) * cdouble(2.0, 1.0)) / noise, 1e-12);
  prec.per_ap[0].setZero();
  EXPECT_EQ(sinr(ch, none, prec, 0, noise), 0.0);
}

TEST(Sinr, MatchesLoopOracle) {
  Rng rng = make_rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ch = random_channels(2, 2, 2, 3, 1, 4, rng);
    const auto ph = random_unit_phases(2, 4, rng);
    const auto prec = random_precoders(2, 3, 2, rng);
    for (int k = 0; k < 2; ++k)
      EXPECT_LT(reference::relative_error(sinr(ch, ph, prec, k, 0.3), reference::sinr(ch, ph, prec, k, 0.3)), 1e-12);
    EXPECT_LT(reference::relative_error(sum_se(ch, ph, prec, 0.3), reference::sum_se(ch, ph, prec, 0.3)), 1e-12);
  }
}

TEST(Sinr, CommonPhaseRotationInvariance) {
  Rng rng = make_rng(7);
  const auto ch = random_channels(3, 3, 1, 2, 1, 4, rng);
  const auto ph = random_unit_phases(1, 4, rng);
  auto prec = random_precoders(3, 2, 3, rng);
  const Vector g0 = sinr_all(ch, ph, prec, 0.5);
  for (auto& W : prec.per_ap) W *= std::polar(1.0, 1.234);
  const Vector g1 = sinr_all(ch, ph, prec, 0.5);
  EXPECT_LT((g0 - g1).cwiseAbs().maxCoeff() / g0.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sinr, Errors) {
  Rng rng = make_rng(8);
  const auto ch = random_channels(1, 2, 1, 2, 1, 2, rng);
  const auto ph = random_unit_phases(1, 2, rng);
  const auto prec = random_precoders(1, 2, 2, rng);
  EXPECT_THROW(sinr(ch, ph, prec, 0, 0.0), ConfigError);
  EXPECT_THROW(sinr(ch, ph, prec, 0, -1.0), ConfigError);
  const auto multi = random_channels(1, 2, 1, 2, 2, 2, rng);
  EXPECT_THROW(sinr(multi, ph, prec, 0, 1.0), ContractViolation);
}

TEST(SpectralEfficiency, UserSe) {
  EXPECT_DOUBLE_EQ(user_se(1.0), 1.0);
  EXPECT_DOUBLE_EQ(user_se(3.0), 2.0);
  EXPECT_DOUBLE_EQ(user_se(0.0), 0.0);
  EXPECT_THROW(user_se(-0.5), ContractViolation);
}

TEST(SpectralEfficiency, SumSeSingleUserAndAdditivity) {
  Rng rng = make_rng(9);
  const auto ch = random_channels(2, 1, 1, 2, 1, 3, rng);
  const auto ph = random_unit_phases(1, 3, rng);
  const auto prec = random_precoders(2, 2, 1, rng);
  EXPECT_NEAR(sum_se(ch, ph, prec, 0.2), user_se(sinr(ch, ph, prec, 0, 0.2)), 1e-14);

  // two users whose cross channels are zero behave like two independent cells
  auto ch2 = ChannelSet::zeros(2, 2, 0, 1, 1, 1);
  ch2.H(0, 0)(0, 0) = 1.5;
  ch2.H(1, 1)(0, 0) = cdouble(0.0, 0.7);
  auto p2 = PrecodingSet::zeros(2, 1, 2);
  p2.per_ap[0](0, 0) = 1.0;
  p2.per_ap[1](0, 1) = 2.0;
  PhaseShiftConfig none;
  none.theta.resize(0, 1);
  const double want = std::log2(1.0 + 2.25 / 0.2) + std::log2(1.0 + 0.49 * 4.0 / 0.2);
  EXPECT_NEAR(sum_se(ch2, none, p2, 0.2), want, 1e-12);
}

TEST(SpectralEfficiency, NondecreasingInPowerForSingleUser) {
  Rng rng = make_rng(10);
  const auto ch = random_channels(2, 1, 1, 2, 1, 3, rng);
  const auto ph = random_unit_phases(1, 3, rng);
  auto shape = random_precoders(2, 2, 1, rng);
  double prev = -1.0;
  for (double pmax : {0.01, 0.1, 1.0, 10.0}) {
    auto p = shape;
    for (auto& W : p.per_ap) W *= std::sqrt(pmax) / std::sqrt(stack_precoders(shape).squaredNorm());
    const double se = sum_se(ch, ph, p, 1.0);
    EXPECT_GE(se, prev);
    prev = se;
  }
}

TEST(PowerProjection, Contract) {
  Rng rng = make_rng(11);
  auto feasible = random_precoders(2, 2, 2, rng, 0.1);
  const auto same = project_power(feasible, 10.0);
  EXPECT_EQ(stack_precoders(same), stack_precoders(feasible));

  auto p = PrecodingSet::zeros(1, 2, 1);
  p.per_ap[0](0, 0) = 2.0;  // power 4 = 4 * P_max
  const auto half = project_power(p, 1.0);
  EXPECT_NEAR(half.per_ap[0](0, 0).real(), 1.0, 1e-15);

  for (int trial = 0; trial < 20; ++trial) {
    const auto big = random_precoders(3, 4, 2, rng, 5.0);
    const auto q = project_power(big, 0.7);
    for (int l = 0; l < 3; ++l) EXPECT_LE(q.ap_power(l), 0.7 * (1 + 1e-12));
    const auto qq = project_power(q, 0.7);
    EXPECT_LT((stack_precoders(qq) - stack_precoders(q)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Quantization, NearestGridPoint) {
  EXPECT_DOUBLE_EQ(quantize_angle(0.4 * kPi, 1), 0.0);
  EXPECT_DOUBLE_EQ(quantize_angle(0.6 * kPi, 1), kPi);
  EXPECT_DOUBLE_EQ(quantize_angle(0.5 * kPi, 1), 0.0);  // tie to the smaller angle
  EXPECT_DOUBLE_EQ(quantize_angle(1.9 * kPi, 2), 0.0);
  EXPECT_DOUBLE_EQ(quantize_angle(kPi / 2, 2), kPi / 2);
  EXPECT_THROW(quantize_angle(1.0, 0), ContractViolation);
}

TEST(Quantization, IdempotentBoundedAndUnitModulus) {
  Rng rng = make_rng(12);
  for (int bits = 1; bits <= 6; ++bits) {
    const auto ph = random_unit_phases(3, 8, rng);
    const auto q = quantize_phases(ph, bits);
    const auto qq = quantize_phases(q, bits);
    EXPECT_EQ(q.bits, bits);
    const Matrix a = ph.angles(), aq = q.angles();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      double d = std::fabs(a(i) - aq(i));
      d = std::min(d, kTwoPi - d);
      EXPECT_LE(d, kPi / std::ldexp(1.0, bits) + 1e-12);
      EXPECT_NEAR(std::abs(q.theta(i)), 1.0, 1e-15);
      EXPECT_LT(std::abs(qq.theta(i) - q.theta(i)), 1e-12);
      const double level = aq(i) / (kTwoPi / std::ldexp(1.0, bits));
      EXPECT_NEAR(level, std::round(level), 1e-9);
    }
  }
}

TEST(Purity, IdenticalInputsIdenticalOutputs) {
  Rng rng = make_rng(13);
  const auto ch = random_channels(2, 2, 2, 2, 1, 3, rng);
  const auto ph = random_unit_phases(2, 3, rng);
  const auto prec = random_precoders(2, 2, 2, rng);
  EXPECT_EQ(sum_se(ch, ph, prec, 0.1), sum_se(ch, ph, prec, 0.1));
  EXPECT_EQ(effective_channel(ch, ph, 1, 0), effective_channel(ch, ph, 1, 0));
}
