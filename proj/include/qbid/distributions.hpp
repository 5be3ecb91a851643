#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qbid/errors.hpp"
#include "qbid/rng.hpp"

namespace qbid {

// A continuous value prior on a closed subinterval of [0, 1]. The CDF is
// continuous and strictly increasing on the support, so the generalized
// inverse quantile(q) = inf{v : F(v) >= q} is a true inverse there.
//
// Three families are supported:
//   uniform(lo, hi)                 F(v) = (v - lo) / (hi - lo)
//   truncated_exponential(rate)     F(v) = (1 - e^{-rate v}) / (1 - e^{-rate})
//                                   on [0, 1]
//   piecewise_linear_cdf(knots)     F interpolates (value, cumulative) knots;
//                                   all segment slopes must be positive
class ValueDistribution {
 public:
  enum class Kind { kUniform, kTruncatedExponential, kPiecewiseLinearCdf };

  static ValueDistribution uniform(double lo, double hi) {
    if (!(0.0 <= lo && lo < hi && hi <= 1.0)) {
      throw std::invalid_argument("uniform: need 0 <= lo < hi <= 1");
    }
    ValueDistribution d;
    d.kind_ = Kind::kUniform;
    d.lo_ = lo;
    d.hi_ = hi;
    return d;
  }

  static ValueDistribution truncated_exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      throw std::invalid_argument("truncated_exponential: need rate > 0");
    }
    ValueDistribution d;
    d.kind_ = Kind::kTruncatedExponential;
    d.rate_ = rate;
    d.lo_ = 0.0;
    d.hi_ = 1.0;
    return d;
  }

  // Knots are (value, cumulative probability) pairs, strictly increasing in
  // both coordinates, starting at cumulative 0 and ending at cumulative 1.
  static ValueDistribution piecewise_linear_cdf(
      std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) {
      throw std::invalid_argument("piecewise_linear_cdf: need >= 2 knots");
    }
    if (knots.front().second != 0.0 || knots.back().second != 1.0) {
      throw std::invalid_argument(
          "piecewise_linear_cdf: cumulative must run from 0 to 1");
    }
    for (std::size_t i = 0; i < knots.size(); ++i) {
      const auto [v, q] = knots[i];
      if (!(0.0 <= v && v <= 1.0) || !std::isfinite(q)) {
        throw std::invalid_argument("piecewise_linear_cdf: knot out of range");
      }
      if (i > 0 && !(v > knots[i - 1].first && q > knots[i - 1].second)) {
        throw std::invalid_argument(
            "piecewise_linear_cdf: knots must be strictly increasing "
            "(positive slopes only)");
      }
    }
    ValueDistribution d;
    d.kind_ = Kind::kPiecewiseLinearCdf;
    d.knots_ = std::move(knots);
    d.lo_ = d.knots_.front().first;
    d.hi_ = d.knots_.back().first;
    return d;
  }

  Kind kind() const { return kind_; }
  double support_min() const { return lo_; }
  double support_max() const { return hi_; }

  double cdf(double v) const {
    if (v <= lo_) return 0.0;
    if (v >= hi_) return 1.0;
    switch (kind_) {
      case Kind::kUniform:
        return (v - lo_) / (hi_ - lo_);
      case Kind::kTruncatedExponential:
        return -std::expm1(-rate_ * v) / -std::expm1(-rate_);
      case Kind::kPiecewiseLinearCdf: {
        const auto [a, b] = segment_by_value(v);
        return a.second +
               (v - a.first) * (b.second - a.second) / (b.first - a.first);
      }
    }
    return 0.0;  // unreachable
  }

  // Generalized inverse CDF, inf{v : F(v) >= q}; maps 0 to the support
  // minimum and 1 to the support maximum.
  double quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) {
      throw std::invalid_argument("quantile: q must lie in [0, 1]");
    }
    if (q <= 0.0) return lo_;
    if (q >= 1.0) return hi_;
    switch (kind_) {
      case Kind::kUniform:
        return lo_ + q * (hi_ - lo_);
      case Kind::kTruncatedExponential:
        return -std::log1p(q * std::expm1(-rate_)) / rate_;
      case Kind::kPiecewiseLinearCdf: {
        const auto [a, b] = segment_by_cumulative(q);
        return a.first +
               (q - a.second) * (b.first - a.first) / (b.second - a.second);
      }
    }
    return 0.0;  // unreachable
  }

  // Density, defined and positive on the support interior. At an interior
  // piecewise-linear knot the right-segment slope is used.
  double pdf(double v) const {
    if (v < lo_ || v > hi_) return 0.0;
    switch (kind_) {
      case Kind::kUniform:
        return 1.0 / (hi_ - lo_);
      case Kind::kTruncatedExponential:
        return rate_ * std::exp(-rate_ * v) / -std::expm1(-rate_);
      case Kind::kPiecewiseLinearCdf: {
        const auto [a, b] = segment_by_value(v);
        return (b.second - a.second) / (b.first - a.first);
      }
    }
    return 0.0;  // unreachable
  }

  // v - (1 - F(v)) / f(v). Requires a positive density at v; at the top of
  // the support the (1 - F)/f term vanishes and the virtual value equals v.
  double virtual_value(double v) const {
    const double f = pdf(v);
    if (f <= 0.0) throw std::domain_error("virtual_value: zero density at v");
    return v - (1.0 - cdf(v)) / f;
  }

  // Integral of the inverse CDF over a quantile interval,
  //   partial_expectation(qa, qb) = int_{qa}^{qb} F^{-1}(z) dz,
  // in closed form per family. This is mass * conditional mean of the value
  // on that quantile interval, and it is the single integration primitive
  // behind utilities, revenues and envelope integrals.
  double partial_expectation(double qa, double qb) const {
    if (!(qa >= 0.0 && qb <= 1.0 && qa <= qb)) {
      throw std::invalid_argument("partial_expectation: need 0<=qa<=qb<=1");
    }
    if (qa == qb) return 0.0;
    switch (kind_) {
      case Kind::kUniform:
        return lo_ * (qb - qa) + 0.5 * (hi_ - lo_) * (qb * qb - qa * qa);
      case Kind::kTruncatedExponential: {
        // int v f(v) dv = [-v e^{-rv} - e^{-rv}/r] / (1 - e^{-r})
        const auto prim = [this](double q) {
          const double v = quantile(q);
          const double e = std::exp(-rate_ * v);
          return (-v * e - e / rate_) / -std::expm1(-rate_);
        };
        return prim(qb) - prim(qa);
      }
      case Kind::kPiecewiseLinearCdf: {
        // F^{-1} is piecewise linear in z; sum exact trapezoids.
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
          const double a = std::max(qa, knots_[i].second);
          const double b = std::min(qb, knots_[i + 1].second);
          if (b <= a) continue;
          total += (b - a) * 0.5 * (quantile(a) + quantile(b));
        }
        return total;
      }
    }
    return 0.0;  // unreachable
  }

  double mean() const { return partial_expectation(0.0, 1.0); }

  double sample(Rng& rng) const { return quantile(rng.next_double()); }

  // Regularity check: the virtual value must be non-decreasing over an
  // interior grid. Irregular priors are refused by revenue benchmarks
  // rather than ironed.
  bool is_regular(int grid_points = 1000) const {
    double prev = -2.0;
    for (int i = 1; i < grid_points; ++i) {
      const double v =
          lo_ + (hi_ - lo_) * static_cast<double>(i) / grid_points;
      const double phi = virtual_value(v);
      if (phi < prev - 1e-12) return false;
      prev = phi;
    }
    return true;
  }

  // Parameter accessors for serialization.
  double uniform_lo() const { return lo_; }
  double uniform_hi() const { return hi_; }
  double exponential_rate() const { return rate_; }
  const std::vector<std::pair<double, double>>& knots() const {
    return knots_;
  }

 private:
  ValueDistribution() = default;

  std::pair<std::pair<double, double>, std::pair<double, double>>
  segment_by_value(double v) const {
    std::size_t i = 1;
    while (i + 1 < knots_.size() && knots_[i].first < v) ++i;
    return {knots_[i - 1], knots_[i]};
  }

  std::pair<std::pair<double, double>, std::pair<double, double>>
  segment_by_cumulative(double q) const {
    std::size_t i = 1;
    while (i + 1 < knots_.size() && knots_[i].second < q) ++i;
    return {knots_[i - 1], knots_[i]};
  }

  Kind kind_ = Kind::kUniform;
  double lo_ = 0.0;
  double hi_ = 1.0;
  double rate_ = 1.0;
  std::vector<std::pair<double, double>> knots_;
};

}  // namespace qbid
