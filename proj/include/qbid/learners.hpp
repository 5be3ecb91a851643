#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qbid/errors.hpp"
#include "qbid/quantile.hpp"

namespace qbid {

// Euclidean projection onto the probability simplex by sort-and-threshold:
// the unique nearest point has coordinates max(y_i - theta, 0) with theta
// chosen so they sum to 1.
inline std::vector<double> project_to_simplex(std::span<const double> y) {
  for (double v : y) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("project_to_simplex: non-finite input");
    }
  }
  std::vector<double> u(y.begin(), y.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = std::max(y[i] - theta, 0.0);
  }
  return out;
}

enum class LearnerKind { kMwu, kAgileOgd, kLazyOgd };

inline const char* learner_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::kMwu: return "mwu";
    case LearnerKind::kAgileOgd: return "agile_ogd";
    case LearnerKind::kLazyOgd: return "lazy_ogd";
  }
  return "?";
}

// Textbook tunings for rewards in [-1, 1] over a horizon T.
inline double auto_eta(LearnerKind kind, int K, long long horizon) {
  const double T = static_cast<double>(std::max<long long>(horizon, 1));
  if (kind == LearnerKind::kMwu) return std::sqrt(std::log(K + 1.0) / T);
  return std::sqrt(2.0 / ((K + 1.0) * T));
}

// A no-regret learner over K+1 actions fed reward vectors in [-1,1]^{K+1}.
//
//   mwu        log-weights L += eta * r; plays the max-shifted softmax of L
//              (raw multiplicative weights overflow over 1e6 rounds)
//   agile_ogd  iterate <- project_to_simplex(iterate + eta * r); plays the
//              iterate (starts uniform)
//   lazy_ogd   unconstrained iterate z += eta * r; plays project(z)
//
// Rewards outside [-1, 1] abort the run: the quantile-utility gradient is
// guaranteed in range for valid formats, so a violation is a correctness bug
// that must surface, not be clipped.
class Learner {
 public:
  static Learner mwu(int K, double eta) {
    return Learner(LearnerKind::kMwu, K, eta,
                   std::vector<double>(K + 1, 0.0));
  }
  static Learner agile_ogd(int K, double eta) {
    return Learner(LearnerKind::kAgileOgd, K, eta,
                   std::vector<double>(K + 1, 1.0 / (K + 1)));
  }
  static Learner lazy_ogd(int K, double eta) {
    return Learner(LearnerKind::kLazyOgd, K, eta,
                   std::vector<double>(K + 1, 1.0 / (K + 1)));
  }
  static Learner make(LearnerKind kind, int K, double eta) {
    switch (kind) {
      case LearnerKind::kMwu: return mwu(K, eta);
      case LearnerKind::kAgileOgd: return agile_ogd(K, eta);
      case LearnerKind::kLazyOgd: return lazy_ogd(K, eta);
    }
    throw std::invalid_argument("unknown learner kind");
  }

  LearnerKind kind() const { return kind_; }
  int grid_k() const { return static_cast<int>(state_.size()) - 1; }
  double eta() const { return eta_; }
  long long round() const { return round_; }
  const std::vector<double>& raw_state() const { return state_; }

  QuantileStrategy next() const {
    switch (kind_) {
      case LearnerKind::kMwu: {
        const double shift = *std::max_element(state_.begin(), state_.end());
        std::vector<double> w(state_.size());
        double sum = 0.0;
        for (std::size_t k = 0; k < state_.size(); ++k) {
          w[k] = std::exp(state_[k] - shift);
          sum += w[k];
        }
        for (double& v : w) v /= sum;
        return QuantileStrategy(std::move(w));
      }
      case LearnerKind::kAgileOgd:
        return QuantileStrategy(state_);
      case LearnerKind::kLazyOgd:
        return QuantileStrategy(project_to_simplex(state_));
    }
    throw std::logic_error("unreachable");
  }

  void update(std::span<const double> reward) {
    if (reward.size() != state_.size()) {
      throw std::invalid_argument("reward vector has wrong dimension");
    }
    for (double r : reward) {
      if (!std::isfinite(r) || r < -1.0 - kRewardSlack ||
          r > 1.0 + kRewardSlack) {
        throw RewardRangeError(
            "reward coordinate " + std::to_string(r) +
            " outside [-1,1]; format validation should have prevented this");
      }
    }
    switch (kind_) {
      case LearnerKind::kMwu:
      case LearnerKind::kLazyOgd:
        for (std::size_t k = 0; k < state_.size(); ++k) {
          state_[k] += eta_ * reward[k];
        }
        break;
      case LearnerKind::kAgileOgd: {
        std::vector<double> y(state_.size());
        for (std::size_t k = 0; k < state_.size(); ++k) {
          y[k] = state_[k] + eta_ * reward[k];
        }
        state_ = project_to_simplex(y);
        break;
      }
    }
    ++round_;
  }

 private:
  // Absorbs float rounding in gradients that are mathematically in range.
  static constexpr double kRewardSlack = 1e-9;

  Learner(LearnerKind kind, int K, double eta, std::vector<double> state)
      : kind_(kind), eta_(eta), state_(std::move(state)) {
    if (K < 1) throw std::invalid_argument("learner: need K >= 1");
    if (!(eta > 0.0) || !std::isfinite(eta)) {
      throw std::invalid_argument("learner: need eta > 0");
    }
  }

  LearnerKind kind_;
  double eta_;
  std::vector<double> state_;
  long long round_ = 0;
};

// A bidder running the quantile-space wrapper: each round the inner learner
// emits a quantile strategy, the bidder bids via the induced monotone
// strategy, and the gradient of the quantile utility at the emitted strategy
// is fed back as the reward vector.
class MetaBidder {
 public:
  MetaBidder(Learner inner, ValueDistribution dist)
      : inner_(std::move(inner)),
        dist_(std::move(dist)),
        pi_(QuantileStrategy::uniform(inner_.grid_k())),
        strategy_(induce_strategy(pi_, dist_)) {}

  // Queries the learner and caches the emitted pair for this round.
  const MonotoneBiddingStrategy& step() {
    pi_ = inner_.next();
    strategy_ = induce_strategy(pi_, dist_);
    stepped_ = true;
    return strategy_;
  }

  // Realized feedback: the gradient at the cached strategy against the
  // opponents' realized bids.
  void feed(const AuctionFormat& format, int bidder,
            std::span<const int> opp_bids) {
    feed_reward(quantile_gradient(pi_, dist_, format, bidder, opp_bids));
  }

  // Expected feedback: the caller supplies an averaged reward vector (the
  // gradient is linear in the per-level allocations and payments, so the
  // opponent-weighted average gradient is a valid reward).
  void feed_reward(std::span<const double> reward) {
    if (!stepped_) {
      throw std::logic_error("meta bidder: feed before step");
    }
    inner_.update(reward);
    stepped_ = false;
  }
  void feed_reward(const std::vector<double>& reward) {
    feed_reward(std::span<const double>(reward));
  }

  const QuantileStrategy& pi() const { return pi_; }
  const MonotoneBiddingStrategy& strategy() const { return strategy_; }
  const ValueDistribution& dist() const { return dist_; }
  const Learner& inner() const { return inner_; }

 private:
  Learner inner_;
  ValueDistribution dist_;
  QuantileStrategy pi_;
  MonotoneBiddingStrategy strategy_;
  bool stepped_ = false;
};

}  // namespace qbid
