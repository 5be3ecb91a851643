#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qbid/auction.hpp"
#include "qbid/distributions.hpp"

namespace qbid {

// A point of the probability simplex over the K+1 bid levels: weight k is
// the prior mass of the value interval that bids level (k-1)/K (components
// are 0-indexed in code, so weights_[k] covers bid index k).
//
// Construction renormalizes inputs that are within 1e-9 of the simplex, the
// drift learners accumulate; anything farther off is rejected.
class QuantileStrategy {
 public:
  explicit QuantileStrategy(std::vector<double> weights)
      : weights_(std::move(weights)) {
    if (weights_.empty()) {
      throw std::invalid_argument("quantile strategy: empty weight vector");
    }
    double sum = 0.0;
    for (double& w : weights_) {
      if (!std::isfinite(w) || w < -1e-9) {
        throw std::invalid_argument(
            "quantile strategy: negative or non-finite weight");
      }
      w = std::max(w, 0.0);
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("quantile strategy: weights must sum to 1");
    }
    for (double& w : weights_) w /= sum;
  }

  static QuantileStrategy uniform(int K) {
    return QuantileStrategy(
        std::vector<double>(K + 1, 1.0 / (K + 1)));
  }

  // The all-mass-on-bid-zero vertex e = (1, 0, ..., 0).
  static QuantileStrategy basis_e(int K) {
    std::vector<double> w(K + 1, 0.0);
    w[0] = 1.0;
    return QuantileStrategy(std::move(w));
  }

  int grid_k() const { return static_cast<int>(weights_.size()) - 1; }
  const std::vector<double>& weights() const { return weights_; }
  double operator[](int k) const { return weights_[k]; }

  // Partial sums tau_j = sum_{l <= j} pi_l, with the last forced to exactly
  // 1 so the induced top threshold is the support maximum.
  std::vector<double> partial_sums() const {
    std::vector<double> tau(weights_.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < weights_.size(); ++j) {
      acc += weights_[j];
      tau[j] = std::min(acc, 1.0);
    }
    tau.back() = 1.0;
    return tau;
  }

 private:
  std::vector<double> weights_;
};

using StrategyProfile = std::vector<QuantileStrategy>;

// A non-decreasing map from values to bid indices, stored as the K+1 value
// thresholds theta_j = F^{-1}(tau_j): bid 0 on [0, theta_1] and bid j on
// (theta_j, theta_{j+1}] (0-indexed thresholds; the closed-left interval
// belongs to bid zero).
struct MonotoneBiddingStrategy {
  int K = 1;
  std::vector<double> thresholds;  // size K+1, non-decreasing

  // Index of the interval containing v; non-decreasing in v.
  int bid_of(double v) const {
    const auto it =
        std::lower_bound(thresholds.begin(), thresholds.end(), v);
    if (it == thresholds.end()) return K;
    return static_cast<int>(it - thresholds.begin());
  }
};

inline MonotoneBiddingStrategy induce_strategy(const QuantileStrategy& pi,
                                               const ValueDistribution& dist) {
  MonotoneBiddingStrategy s;
  s.K = pi.grid_k();
  const auto tau = pi.partial_sums();
  s.thresholds.resize(tau.size());
  for (std::size_t j = 0; j < tau.size(); ++j) {
    s.thresholds[j] = dist.quantile(tau[j]);
  }
  return s;
}

// Inverse of induce_strategy up to measure-zero boundary points: weight k is
// the CDF increment between consecutive thresholds.
inline QuantileStrategy strategy_to_quantile(const MonotoneBiddingStrategy& s,
                                             const ValueDistribution& dist) {
  std::vector<double> w(s.thresholds.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < s.thresholds.size(); ++k) {
    const double cum = dist.cdf(s.thresholds[k]);
    w[k] = cum - prev;
    prev = cum;
  }
  // Mass above the recorded top threshold belongs to the highest bid.
  w.back() += 1.0 - prev;
  return QuantileStrategy(std::move(w));
}

namespace detail {

inline void check_levels(const QuantileStrategy& pi,
                         std::span<const double> x,
                         std::span<const double> p) {
  const std::size_t m = pi.weights().size();
  if (x.size() != m || p.size() != m) {
    throw std::invalid_argument("per-level slice has wrong dimension");
  }
}

// Fills x[k] = x_i(k, opp), p[k] = p_i(k, opp) for every own bid index k.
inline void fill_levels(const AuctionFormat& format, int bidder,
                        std::span<const int> opp_bids, std::span<double> x,
                        std::span<double> p) {
  for (int k = 0; k <= format.grid_k(); ++k) {
    x[k] = format.allocation_of(bidder, k, opp_bids);
    p[k] = format.payment_of(bidder, k, opp_bids);
  }
}

}  // namespace detail

// Expected utility of bidding via the strategy induced by pi, against fixed
// per-level allocations and payments:
//   q(pi) = sum_j [ x_j * int_{tau_{j-1}}^{tau_j} F^{-1}(z) dz - p_j * pi_j ].
// Each interval integral is evaluated in closed form, so identities that
// demand 1e-9 agreement hold without quadrature error.
inline double quantile_utility_levels(const QuantileStrategy& pi,
                                      const ValueDistribution& dist,
                                      std::span<const double> x,
                                      std::span<const double> p) {
  detail::check_levels(pi, x, p);
  const auto tau = pi.partial_sums();
  double q = 0.0, lo = 0.0;
  for (std::size_t j = 0; j < tau.size(); ++j) {
    q += x[j] * dist.partial_expectation(lo, tau[j]) - p[j] * pi[j];
    lo = tau[j];
  }
  return q;
}

// Gradient of the quantile utility. Coordinate k (0-indexed) is
//   sum_{j=k+1}^{K} (x_{j-1} - x_j) * F^{-1}(tau_j)  +  x_K  -  p_k
// in bid-index terms, accumulated right to left; every coordinate lies in
// [-1, 1] whenever the format passes validation.
inline std::vector<double> quantile_gradient_levels(
    const QuantileStrategy& pi, const ValueDistribution& dist,
    std::span<const double> x, std::span<const double> p) {
  detail::check_levels(pi, x, p);
  const auto tau = pi.partial_sums();
  const int K = pi.grid_k();
  std::vector<double> g(K + 1);
  double telescoped = 0.0;
  g[K] = x[K] - p[K];
  for (int k = K - 1; k >= 0; --k) {
    telescoped += (x[k] - x[k + 1]) * dist.quantile(tau[k]);
    g[k] = telescoped + x[K] - p[k];
  }
  return g;
}

inline double quantile_utility(const QuantileStrategy& pi,
                               const ValueDistribution& dist,
                               const AuctionFormat& format, int bidder,
                               std::span<const int> opp_bids) {
  std::vector<double> x(format.grid_k() + 1), p(format.grid_k() + 1);
  detail::fill_levels(format, bidder, opp_bids, x, p);
  return quantile_utility_levels(pi, dist, x, p);
}

inline std::vector<double> quantile_gradient(const QuantileStrategy& pi,
                                             const ValueDistribution& dist,
                                             const AuctionFormat& format,
                                             int bidder,
                                             std::span<const int> opp_bids) {
  std::vector<double> x(format.grid_k() + 1), p(format.grid_k() + 1);
  detail::fill_levels(format, bidder, opp_bids, x, p);
  return quantile_gradient_levels(pi, dist, x, p);
}

}  // namespace qbid
