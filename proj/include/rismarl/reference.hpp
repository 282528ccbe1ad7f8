#pragma once

// Literal loop implementations used as independent oracles by the test
// suites and `rismarl selftest`. Nothing here shares code with the
// matrix-based paths it checks; keep it that way.

#include <cmath>
#include <complex>
#include <vector>

#include "rismarl/common.hpp"
#include "rismarl/fuzzy.hpp"
#include "rismarl/mlp.hpp"
#include "rismarl/system_model.hpp"

namespace rismarl::reference {

inline CMatrix effective_channel(const ChannelSet& ch, const PhaseShiftConfig& ph, int l, int k) {
  const int U = ch.ue_antennas, M = ch.ap_antennas, N = ch.ris_elements;
  CMatrix out(U, M);
  for (int u = 0; u < U; ++u)
    for (int m = 0; m < M; ++m) {
      cdouble acc = ch.direct[static_cast<std::size_t>(l * ch.num_ues + k)](u, m);
      for (int r = 0; r < ch.num_ris; ++r)
        for (int n = 0; n < N; ++n)
          acc += ch.ris_ue[static_cast<std::size_t>(r * ch.num_ues + k)](u, n) * ph.theta(r, n) *
                 ch.ap_ris[static_cast<std::size_t>(l * ch.num_ris + r)](n, m);
      out(u, m) = acc;
    }
  return out;
}

// |sum_l sum_m heff_{l,k}[m] w_{l,j}[m]|^2
inline double stream_power(const ChannelSet& ch, const PhaseShiftConfig& ph, const PrecodingSet& prec, int k,
                           int j) {
  cdouble acc = 0.0;
  for (int l = 0; l < ch.num_aps; ++l) {
    const CMatrix h = reference::effective_channel(ch, ph, l, k);
    for (int m = 0; m < ch.ap_antennas; ++m) acc += h(0, m) * prec.per_ap[static_cast<std::size_t>(l)](m, j);
  }
  return std::norm(acc);
}

inline double sinr(const ChannelSet& ch, const PhaseShiftConfig& ph, const PrecodingSet& prec, int k,
                   double noise) {
  const double num = stream_power(ch, ph, prec, k, k);
  double den = noise;
  for (int j = 0; j < ch.num_ues; ++j)
    if (j != k) den += stream_power(ch, ph, prec, k, j);
  return num / den;
}

inline double sum_se(const ChannelSet& ch, const PhaseShiftConfig& ph, const PrecodingSet& prec, double noise) {
  double s = 0.0;
  for (int k = 0; k < ch.num_ues; ++k) s += std::log(1.0 + reference::sinr(ch, ph, prec, k, noise)) / std::log(2.0);
  return s;
}

inline std::vector<double> mlp_forward(const nn::MlpParams& p, const std::vector<double>& x) {
  std::vector<double> a = x;
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const auto& layer = p.layers[li];
    std::vector<double> z(static_cast<std::size_t>(layer.weight.rows()));
    for (Eigen::Index o = 0; o < layer.weight.rows(); ++o) {
      double acc = layer.bias(o);
      for (Eigen::Index i = 0; i < layer.weight.cols(); ++i) acc += layer.weight(o, i) * a[static_cast<std::size_t>(i)];
      const bool last = li + 1 == p.layers.size();
      if (!last)
        acc = acc >= 0.0 ? acc : p.leaky_slope * acc;
      else if (p.output == nn::Activation::tanh)
        acc = std::tanh(acc);
      z[static_cast<std::size_t>(o)] = acc;
    }
    a = std::move(z);
  }
  return a;
}

// Xi_bar by the literal product of per-dimension memberships.
inline Matrix mapping_matrix(const Matrix& anchors, const Matrix& states, int action_dim) {
  const int n = static_cast<int>(anchors.rows());
  const auto P = states.rows();
  Matrix xi(n, P);
  for (int i = 0; i < n; ++i)
    for (Eigen::Index p = 0; p < P; ++p) {
      double prod = 1.0;
      for (Eigen::Index j = 0; j < states.cols(); ++j)
        prod *= std::exp(-std::fabs(states(p, j) - anchors(i, j)) / (static_cast<double>(action_dim) * n));
      xi(i, p) = prod;
    }
  Matrix bar(n, P);
  for (Eigen::Index p = 0; p < P; ++p) {
    double col = 0.0;
    for (int i = 0; i < n; ++i) col += xi(i, p);
    for (int i = 0; i < n; ++i) bar(i, p) = xi(i, p) / col;
  }
  return bar;
}

inline Matrix defuzzify(const Matrix& xi_bar, const Matrix& fuzzy_actions) {
  Matrix out = Matrix::Zero(xi_bar.cols(), fuzzy_actions.cols());
  for (Eigen::Index p = 0; p < xi_bar.cols(); ++p)
    for (Eigen::Index d = 0; d < fuzzy_actions.cols(); ++d)
      for (Eigen::Index i = 0; i < xi_bar.rows(); ++i) out(p, d) += xi_bar(i, p) * fuzzy_actions(i, d);
  return out;
}

inline Vector fuzzify_reward(const Matrix& xi_bar, const Vector& r) {
  Vector out = Vector::Zero(xi_bar.rows());
  for (Eigen::Index i = 0; i < xi_bar.rows(); ++i)
    for (Eigen::Index k = 0; k < xi_bar.cols(); ++k) out(i) += xi_bar(i, k) * r(k);
  return out;
}

inline Matrix fuzzify_state(const Matrix& xi_bar, const Matrix& S) {
  Matrix out = Matrix::Zero(xi_bar.rows(), S.cols());
  for (Eigen::Index i = 0; i < xi_bar.rows(); ++i)
    for (Eigen::Index j = 0; j < S.cols(); ++j)
      for (Eigen::Index k = 0; k < xi_bar.cols(); ++k) out(i, j) += xi_bar(i, k) * S(k, j);
  return out;
}

// Solves A X = B by Gaussian elimination with partial pivoting.
inline CMatrix gauss_solve(CMatrix A, CMatrix B) {
  const auto n = A.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (std::abs(A(r, c)) > std::abs(A(piv, c))) piv = r;
    if (std::abs(A(piv, c)) == 0.0) throw NumericalError("gauss_solve: singular matrix");
    A.row(c).swap(A.row(piv));
    B.row(c).swap(B.row(piv));
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const cdouble f = A(r, c) / A(c, c);
      for (Eigen::Index j = c; j < n; ++j) A(r, j) -= f * A(c, j);
      for (Eigen::Index j = 0; j < B.cols(); ++j) B(r, j) -= f * B(c, j);
    }
  }
  CMatrix X(n, B.cols());
  for (Eigen::Index r = n; r-- > 0;)
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      cdouble acc = B(r, j);
      for (Eigen::Index c = r + 1; c < n; ++c) acc -= A(r, c) * X(c, j);
      X(r, j) = acc / A(r, r);
    }
  return X;
}

// ZF by the normal equations: W = H^H (H H^H)^-1, solved element by element.
inline CMatrix zf_normal_equations(const CMatrix& H) {
  const auto K = H.rows(), D = H.cols();
  CMatrix gram(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j) {
      cdouble acc = 0.0;
      for (Eigen::Index d = 0; d < D; ++d) acc += H(i, d) * std::conj(H(j, d));
      gram(i, j) = acc;
    }
  // W^T gram^T = conj(H): solve gram^T X = conj(H) for X = W^T
  CMatrix rhs(K, D);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index d = 0; d < D; ++d) rhs(i, d) = std::conj(H(i, d));
  CMatrix gt(K, K);
  for (Eigen::Index i = 0; i < K; ++i)
    for (Eigen::Index j = 0; j < K; ++j) gt(i, j) = gram(j, i);
  const CMatrix X = gauss_solve(gt, rhs);
  CMatrix W(D, K);
  for (Eigen::Index d = 0; d < D; ++d)
    for (Eigen::Index k = 0; k < K; ++k) W(d, k) = X(k, d);
  return W;
}

inline double relative_error(double got, double want) {
  const double scale = std::max({std::fabs(got), std::fabs(want), 1e-300});
  return std::fabs(got - want) / scale;
}

inline double max_relative_error(const CMatrix& got, const CMatrix& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

inline double max_relative_error(const Matrix& got, const Matrix& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-300);
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

}  // namespace rismarl::reference
