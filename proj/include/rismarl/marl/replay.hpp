#pragma once

#include <algorithm>
#include <memory>
#include <unordered_set>
#include <vector>

#include "rismarl/common.hpp"

namespace rismarl::marl {

// Joint transition seen by every agent of one trainer. `states` holds the
// (fuzzy) precoder-agent states stacked, `phase_obs` the phase controller's
// observation, `actions` every agent's action stacked, `rewards` one entry
// per agent.
struct Transition {
  Vector states;
  Vector phase_obs;
  Vector actions;
  Vector rewards;
  Vector next_states;
  Vector next_phase_obs;
};

// Fixed-capacity FIFO ring with uniform sampling. Items are shared so one
// joint transition can sit in every agent's buffer without copies.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("ReplayBuffer: capacity must be >= 1");
    items_.reserve(std::min<std::size_t>(capacity, 1024));
  }

  void push(std::shared_ptr<const Transition> t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  void push(Transition t) { push(std::make_shared<const Transition>(std::move(t))); }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Transition& at(std::size_t i) const { return *items_.at(i); }

  // Distinct indices (Floyd's algorithm), uniform over the stored items.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const {
    if (batch > items_.size()) throw ContractViolation("ReplayBuffer: minibatch larger than buffer");
    const std::size_t n = items_.size();
    std::vector<std::size_t> out;
    out.reserve(batch);
    std::unordered_set<std::size_t> taken;
    for (std::size_t j = n - batch; j < n; ++j) {
      const auto t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
      if (taken.insert(t).second) {
        out.push_back(t);
      } else {
        taken.insert(j);
        out.push_back(j);
      }
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<std::shared_ptr<const Transition>> items_;
};

// Column-stacked minibatch.
struct Batch {
  Matrix states, phase_obs, actions, rewards, next_states, next_phase_obs;

  Eigen::Index size() const { return states.cols(); }

  static Batch gather(const ReplayBuffer& buf, const std::vector<std::size_t>& idx) {
    require(!idx.empty(), "Batch: empty index set");
    const Transition& first = buf.at(idx.front());
    const auto B = static_cast<Eigen::Index>(idx.size());
    Batch b;
    b.states.resize(first.states.size(), B);
    b.phase_obs.resize(first.phase_obs.size(), B);
    b.actions.resize(first.actions.size(), B);
    b.rewards.resize(first.rewards.size(), B);
    b.next_states.resize(first.next_states.size(), B);
    b.next_phase_obs.resize(first.next_phase_obs.size(), B);
    for (Eigen::Index c = 0; c < B; ++c) {
      const Transition& t = buf.at(idx[static_cast<std::size_t>(c)]);
      b.states.col(c) = t.states;
      b.phase_obs.col(c) = t.phase_obs;
      b.actions.col(c) = t.actions;
      b.rewards.col(c) = t.rewards;
      b.next_states.col(c) = t.next_states;
      b.next_phase_obs.col(c) = t.next_phase_obs;
    }
    return b;
  }
};

// Per-dimension running mean / variance (Welford), applied as a clipped z-score.
class RunningStandardizer {
 public:
  RunningStandardizer() = default;
  explicit RunningStandardizer(int dim, double clip = 5.0)
      : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)), clip_(clip) {}

  void update(const Matrix& rows) {
    require(rows.cols() == mean_.size(), "RunningStandardizer: dimension mismatch");
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      ++count_;
      const Vector x = rows.row(r).transpose();
      const Vector delta = x - mean_;
      mean_ += delta / static_cast<double>(count_);
      m2_ += delta.cwiseProduct(x - mean_);
    }
  }

  Matrix apply(const Matrix& rows) const {
    require(rows.cols() == mean_.size(), "RunningStandardizer: dimension mismatch");
    Matrix out(rows.rows(), rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      const double var = count_ > 1 ? m2_(j) / static_cast<double>(count_ - 1) : 0.0;
      const double sd = std::sqrt(std::max(var, 0.0));
      for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const double z = sd > 1e-300 ? (rows(r, j) - mean_(j)) / sd : 0.0;
        out(r, j) = std::clamp(z, -clip_, clip_);
      }
    }
    return out;
  }

  long count() const { return count_; }

 private:
  Vector mean_;
  Vector m2_;
  long count_ = 0;
  double clip_ = 5.0;
};

}  // namespace rismarl::marl
