#pragma once

// Dense feed-forward network with leaky-ReLU hidden layers, analytic
// backpropagation, Adam and soft target updates. Batches are column-major:
// an input batch is (input_dim x batch_size).

#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include "rismarl/common.hpp"

namespace rismarl::nn {

enum class Activation { linear, tanh };

inline std::string to_string(Activation a) { return a == Activation::tanh ? "tanh" : "linear"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "linear") return Activation::linear;
  throw ConfigError("unknown activation: " + s);
}

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

namespace detail {
inline std::uint64_t next_revision() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

struct MlpParams {
  std::vector<DenseLayer> layers;
  Activation output = Activation::linear;
  double leaky_slope = 0.01;
  // Changes whenever parameters are mutated; ties forward caches to a version.
  std::uint64_t revision = detail::next_revision();

  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }

  std::vector<int> widths() const {
    std::vector<int> w;
    if (layers.empty()) return w;
    w.push_back(input_dim());
    for (const auto& l : layers) w.push_back(static_cast<int>(l.weight.rows()));
    return w;
  }

  void touch() { revision = detail::next_revision(); }
};

inline bool same_shape(const MlpParams& a, const MlpParams& b) { return a.widths() == b.widths(); }

// He-uniform weights, zero biases.
inline MlpParams init_mlp(const std::vector<int>& widths, Activation output, Rng& rng) {
  if (widths.size() < 2) throw ConfigError("init_mlp: need at least input and output widths");
  for (int w : widths)
    if (w < 1) throw ConfigError("init_mlp: widths must be >= 1");
  MlpParams p;
  p.output = output;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i], out = widths[i + 1];
    const double limit = std::sqrt(6.0 / in);
    DenseLayer layer{Matrix(out, in), Vector::Zero(out)};
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  p.touch();
  return p;
}

// Redraws the last layer uniformly in [-limit, limit] (small-output start).
inline void reinit_output_layer(MlpParams& p, double limit, Rng& rng) {
  if (!(limit > 0.0)) throw ConfigError("reinit_output_layer: limit must be > 0");
  auto& last = p.layers.back();
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index c = 0; c < last.weight.cols(); ++c)
    for (Eigen::Index r = 0; r < last.weight.rows(); ++r) last.weight(r, c) = dist(rng);
  p.touch();
}

struct ForwardCache {
  std::vector<Matrix> inputs;   // input to each layer
  std::vector<Matrix> preacts;  // pre-activation of each layer
  Matrix output;
  std::uint64_t revision = 0;
};

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

inline Matrix forward(const MlpParams& p, const Matrix& x, ForwardCache* cache = nullptr) {
  if (p.layers.empty()) throw ContractViolation("forward: empty network");
  if (x.rows() != p.input_dim())
    throw ContractViolation("forward: input width " + std::to_string(x.rows()) + " != " +
                            std::to_string(p.input_dim()));
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
    cache->revision = p.revision;
  }
  Matrix a = x;
  const std::size_t n = p.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& layer = p.layers[i];
    Matrix z = layer.weight * a;
    z.colwise() += layer.bias;
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->preacts.push_back(z);
    }
    if (i + 1 < n) {
      const double s = p.leaky_slope;
      a = z.unaryExpr([s](double v) { return leaky_relu(v, s); });
    } else if (p.output == Activation::tanh) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  if (cache) cache->output = a;
  return a;
}

inline Vector forward(const MlpParams& p, const Vector& x) {
  return forward(p, Matrix(x), nullptr).col(0);
}

struct MlpGrads {
  std::vector<DenseLayer> layers;
  Matrix input_grad;  // input_dim x batch
};

inline MlpGrads zero_grads(const MlpParams& p) {
  MlpGrads g;
  for (const auto& l : p.layers)
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  return g;
}

// Gradients of sum_b <output_grad_b, f(x_b)> (plus <preact_grad_b, z_b> for
// the last layer's pre-activation z when given) with respect to every
// parameter and to the inputs.
inline MlpGrads backward(const MlpParams& p, const ForwardCache& cache, const Matrix& output_grad,
                         const Matrix* preact_grad = nullptr) {
  if (cache.revision != p.revision || cache.inputs.size() != p.layers.size())
    throw ContractViolation("backward: cache does not belong to these parameters (stale forward)");
  if (output_grad.rows() != p.output_dim() || output_grad.cols() != cache.output.cols())
    throw ContractViolation("backward: output gradient shape mismatch");
  const std::size_t n = p.layers.size();
  MlpGrads g;
  g.layers.resize(n);
  Matrix delta;
  if (p.output == Activation::tanh)
    delta = output_grad.array() * (1.0 - cache.output.array().square());
  else
    delta = output_grad;
  if (preact_grad) {
    if (preact_grad->rows() != delta.rows() || preact_grad->cols() != delta.cols())
      throw ContractViolation("backward: pre-activation gradient shape mismatch");
    delta += *preact_grad;
  }
  for (std::size_t i = n; i-- > 0;) {
    g.layers[i].weight.noalias() = delta * cache.inputs[i].transpose();
    g.layers[i].bias = delta.rowwise().sum();
    Matrix upstream = p.layers[i].weight.transpose() * delta;
    if (i > 0) {
      const double s = p.leaky_slope;
      const Matrix& z = cache.preacts[i - 1];
      delta = upstream.array() * z.unaryExpr([s](double v) { return v > 0.0 ? 1.0 : s; }).array();
    } else {
      g.input_grad = std::move(upstream);
    }
  }
  return g;
}

struct AdamState {
  std::vector<DenseLayer> m;
  std::vector<DenseLayer> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam(const MlpParams& p, double lr) {
  AdamState s;
  s.lr = lr;
  s.m = zero_grads(p).layers;
  s.v = s.m;
  return s;
}

// Descent step with bias-corrected moments.
inline void adam_step(MlpParams& p, const MlpGrads& g, AdamState& s) {
  if (g.layers.size() != p.layers.size() || s.m.size() != p.layers.size())
    throw ContractViolation("adam_step: shape mismatch");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = s.beta1 * m + (1.0 - s.beta1) * grad;
    v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
    param.array() -= s.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
  };
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    update(p.layers[i].weight, g.layers[i].weight, s.m[i].weight, s.v[i].weight);
    update(p.layers[i].bias, g.layers[i].bias, s.m[i].bias, s.v[i].bias);
  }
  p.touch();
}

enum class SoftUpdateConvention {
  retain_target,  // target <- tau * target + (1 - tau) * online
  blend_online,   // target <- tau * online + (1 - tau) * target
};

inline void soft_update(MlpParams& target, const MlpParams& online, double tau,
                        SoftUpdateConvention conv = SoftUpdateConvention::retain_target) {
  if (!same_shape(target, online)) throw ContractViolation("soft_update: shape mismatch");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ContractViolation("soft_update: tau must lie in [0, 1]");
  const double keep = conv == SoftUpdateConvention::retain_target ? tau : 1.0 - tau;
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    target.layers[i].weight = keep * target.layers[i].weight + (1.0 - keep) * online.layers[i].weight;
    target.layers[i].bias = keep * target.layers[i].bias + (1.0 - keep) * online.layers[i].bias;
  }
  target.touch();
}

inline double parameter_distance(const MlpParams& a, const MlpParams& b) {
  if (!same_shape(a, b)) throw ContractViolation("parameter_distance: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.layers.size(); ++i)
    s += (a.layers[i].weight - b.layers[i].weight).squaredNorm() + (a.layers[i].bias - b.layers[i].bias).squaredNorm();
  return std::sqrt(s);
}

inline bool all_finite(const MlpParams& p) {
  for (const auto& l : p.layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

}  // namespace rismarl::nn
