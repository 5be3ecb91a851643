#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qbid/auction.hpp"
#include "qbid/distributions.hpp"
#include "qbid/learners.hpp"
#include "qbid/quantile.hpp"

namespace qbid {

// ---------------------------------------------------------------------------
// Auxiliary auctions
// ---------------------------------------------------------------------------

// The continuous-bid auction obtained by composing a round's format with the
// bidders' monotone strategies and re-deriving payments by Myerson's rule
//   p~_i(v) = x~_i(v) v_i - int_0^{v_i} x~_i(z, v_-i) dz.
// Its allocation in the own value is a non-decreasing step function with
// jumps only at the bidder's thresholds, so it is IC and IR by construction.
class AuxiliaryAuction {
 public:
  AuxiliaryAuction(AuctionFormat format,
                   std::vector<MonotoneBiddingStrategy> strategies)
      : format_(std::move(format)), strategies_(std::move(strategies)) {
    if (static_cast<int>(strategies_.size()) != format_.bidders()) {
      throw std::invalid_argument("auxiliary auction: one strategy per bidder");
    }
  }

  AuxiliaryAuction(const AuctionFormat& format, const StrategyProfile& profile,
                   std::span<const ValueDistribution> dists)
      : format_(format) {
    if (static_cast<int>(profile.size()) != format.bidders() ||
        dists.size() != profile.size()) {
      throw std::invalid_argument("auxiliary auction: profile/dists mismatch");
    }
    strategies_.reserve(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
      strategies_.push_back(induce_strategy(profile[i], dists[i]));
    }
  }

  int bidder_count() const { return format_.bidders(); }
  const AuctionFormat& base() const { return format_; }
  const std::vector<double>& thresholds(int i) const {
    return strategies_[i].thresholds;
  }

  double allocation(int i, std::span<const double> values) const {
    const auto opp = opp_bids(i, values);
    return format_.allocation_of(i, strategies_[i].bid_of(values[i]), opp);
  }

  double payment(int i, std::span<const double> values) const {
    const auto opp = opp_bids(i, values);
    const int own_bid = strategies_[i].bid_of(values[i]);
    const double x_here = format_.allocation_of(i, own_bid, opp);
    // The allocation is a step function of the own value, so the Myerson
    // integral is a finite sum over threshold segments.
    const double v = values[i];
    const auto& theta = strategies_[i].thresholds;
    double integral = 0.0;
    double lo = 0.0;
    for (int j = 0; j <= format_.grid_k(); ++j) {
      const double hi = std::min(theta[j], v);
      if (hi > lo) {
        integral += format_.allocation_of(i, j, opp) * (hi - lo);
        lo = hi;
      }
      if (theta[j] >= v) break;
    }
    if (v > theta.back()) {
      integral += x_here * (v - std::max(lo, theta.back()));
    }
    return x_here * v - integral;
  }

  std::vector<double> aux_allocation(std::span<const double> values) const {
    std::vector<double> out(bidder_count());
    for (int i = 0; i < bidder_count(); ++i) out[i] = allocation(i, values);
    return out;
  }

  std::vector<double> aux_payment(std::span<const double> values) const {
    std::vector<double> out(bidder_count());
    for (int i = 0; i < bidder_count(); ++i) out[i] = payment(i, values);
    return out;
  }

 private:
  std::vector<int> opp_bids(int i, std::span<const double> values) const {
    std::vector<int> opp;
    opp.reserve(values.size() - 1);
    for (std::size_t m = 0; m < values.size(); ++m) {
      if (static_cast<int>(m) != i) {
        opp.push_back(strategies_[m].bid_of(values[m]));
      }
    }
    return opp;
  }

  AuctionFormat format_;
  std::vector<MonotoneBiddingStrategy> strategies_;
};

// ---------------------------------------------------------------------------
// Exact revenue functionals and the main identity
// ---------------------------------------------------------------------------

namespace detail {

// Enumerates the opponents' bid profiles of bidder i with their probability
// weights: opponent m bids index b with probability pi^{(m)}[b].
template <class F>
void for_each_opponent_profile(const StrategyProfile& profile, int bidder,
                               int K, F&& visit) {
  const int n = static_cast<int>(profile.size());
  if (profile_count(n - 1, K) > kEnumerationBudget) {
    throw BudgetError("opponent enumeration exceeds the budget");
  }
  if (n == 1) {
    visit(std::span<const int>{}, 1.0);
    return;
  }
  for_each_profile(n - 1, K, [&](std::span<const int> opp) {
    double w = 1.0;
    for (int m = 0, o = 0; m < n; ++m) {
      if (m == bidder) continue;
      w *= profile[m][opp[o++]];
    }
    if (w > 0.0) visit(opp, w);
  });
}

}  // namespace detail

// Fills x[k] = E_opp[x_i(k, b_-i)] and p[k] = E_opp[p_i(k, b_-i)] under the
// committed profile. The quantile gradient and utility are linear in the
// per-level allocations and payments, so these averages feed directly into
// quantile_*_levels for expected-feedback computations.
inline void expected_levels(const AuctionFormat& format,
                            const StrategyProfile& profile, int bidder,
                            std::span<double> x, std::span<double> p) {
  std::fill(x.begin(), x.end(), 0.0);
  std::fill(p.begin(), p.end(), 0.0);
  detail::for_each_opponent_profile(
      profile, bidder, format.grid_k(),
      [&](std::span<const int> opp, double w) {
        for (int k = 0; k <= format.grid_k(); ++k) {
          x[k] += w * format.allocation_of(bidder, k, opp);
          p[k] += w * format.payment_of(bidder, k, opp);
        }
      });
}

// Expected revenue of the round's format conditioned on the committed
// profile: each bidder's bid is categorical with her quantile weights.
inline double conditional_revenue(const AuctionFormat& format,
                                  const StrategyProfile& profile) {
  const int K = format.grid_k();
  double total = 0.0;
  for (int i = 0; i < format.bidders(); ++i) {
    detail::for_each_opponent_profile(
        profile, i, K, [&](std::span<const int> opp, double w) {
          double inner = 0.0;
          for (int k = 0; k <= K; ++k) {
            inner += profile[i][k] * format.payment_of(i, k, opp);
          }
          total += w * inner;
        });
  }
  return total;
}

// Expected revenue of the auxiliary auction, evaluated through the exact
// double sum: per bidder and opponent profile,
//   sum_j (1 - tau_j) (x_i(j) - x_i(j-1)) F_i^{-1}(tau_j).
inline double aux_revenue(const AuctionFormat& format,
                          const StrategyProfile& profile,
                          std::span<const ValueDistribution> dists) {
  const int K = format.grid_k();
  double total = 0.0;
  for (int i = 0; i < format.bidders(); ++i) {
    const auto tau = profile[i].partial_sums();
    detail::for_each_opponent_profile(
        profile, i, K, [&](std::span<const int> opp, double w) {
          double inner = 0.0;
          double x_prev = format.allocation_of(i, 0, opp);
          for (int j = 0; j < K; ++j) {
            const double x_next = format.allocation_of(i, j + 1, opp);
            inner += (1.0 - tau[j]) * (x_next - x_prev) *
                     dists[i].quantile(tau[j]);
            x_prev = x_next;
          }
          total += w * inner;
        });
  }
  return total;
}

struct LemmaCheck {
  double lhs = 0.0;  // sum_i E[grad q_i(pi_i) . (e - pi_i)]
  double rhs = 0.0;  // conditional revenue - auxiliary revenue
  double diff = 0.0;
  double revenue_conditional = 0.0;
  double revenue_auxiliary = 0.0;
  std::string format_digest;
};

// Verifies the gradient/revenue identity
//   sum_i E[grad q_i(pi_i)^T (e - pi_i)] = Rev_M(D | Q) - Rev_M~(D)
// by evaluating both sides independently: the left through per-opponent
// gradients of the quantile utility, the right through the two revenue
// functionals above.
inline LemmaCheck check_identity(const AuctionFormat& format,
                                 const StrategyProfile& profile,
                                 std::span<const ValueDistribution> dists) {
  const int K = format.grid_k();
  LemmaCheck out;
  out.format_digest = format.digest();
  for (int i = 0; i < format.bidders(); ++i) {
    detail::for_each_opponent_profile(
        profile, i, K, [&](std::span<const int> opp, double w) {
          const auto g = quantile_gradient(profile[i], dists[i], format, i,
                                           opp);
          double dot = g[0];
          for (int k = 0; k <= K; ++k) dot -= g[k] * profile[i][k];
          out.lhs += w * dot;
        });
  }
  out.revenue_conditional = conditional_revenue(format, profile);
  out.revenue_auxiliary = aux_revenue(format, profile, dists);
  out.rhs = out.revenue_conditional - out.revenue_auxiliary;
  out.diff = std::abs(out.lhs - out.rhs);
  return out;
}

struct RevenueReport {
  double conditional = 0.0;
  double auxiliary = 0.0;
  std::string format_digest;
};

inline RevenueReport revenue_report(const AuctionFormat& format,
                                    const StrategyProfile& profile,
                                    std::span<const ValueDistribution> dists) {
  return RevenueReport{conditional_revenue(format, profile),
                       aux_revenue(format, profile, dists),
                       format.digest()};
}

// ---------------------------------------------------------------------------
// IC / IR grid check
// ---------------------------------------------------------------------------

struct IcIrReport {
  bool ic_ok = true;
  bool ir_ok = true;
  double worst_ic_violation = 0.0;  // positive means a violation was found
  double worst_ir_violation = 0.0;
  int witness_bidder = -1;
  double witness_value = 0.0;
  double witness_misreport = 0.0;

  bool passed() const { return ic_ok && ir_ok; }
};

// Checks IC and IR for any auction over continuous values exposing
// bidder_count(), thresholds(i), allocation(i, values), payment(i, values).
// The report grid includes every threshold and straddle points at +-1e-6
// around it, plus at least ten points per threshold gap; opponents range
// over the midpoints of their threshold intervals (which cover all their
// distinct bids).
template <class Auction>
IcIrReport check_ic_ir(const Auction& aux, int resolution = 256,
                       double tolerance = 1e-9) {
  const int n = aux.bidder_count();
  IcIrReport rep;

  const auto own_grid = [&](int i) {
    std::vector<double> g;
    const auto& theta = aux.thresholds(i);
    std::vector<double> cuts{0.0, 1.0};
    cuts.insert(cuts.end(), theta.begin(), theta.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c], b = cuts[c + 1];
      const int steps = std::max(10, static_cast<int>(
          std::ceil((b - a) * resolution)));
      for (int s = 0; s <= steps; ++s) {
        g.push_back(a + (b - a) * s / steps);
      }
      if (b - a > 2e-6) {
        g.push_back(a + 1e-6);
        g.push_back(b - 1e-6);
      }
    }
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  };

  const auto opp_reps = [&](int i) {
    // One representative value per threshold interval of bidder i.
    std::vector<double> reps;
    const auto& theta = aux.thresholds(i);
    double lo = 0.0;
    for (double t : theta) {
      if (t > lo) reps.push_back(0.5 * (lo + t));
      lo = t;
    }
    if (lo < 1.0) reps.push_back(0.5 * (lo + 1.0));
    if (reps.empty()) reps.push_back(0.5);
    return reps;
  };

  for (int i = 0; i < n; ++i) {
    const auto grid = own_grid(i);

    // Cartesian product over the opponents' representatives.
    std::vector<std::vector<double>> reps;
    std::int64_t combos = 1;
    for (int m = 0; m < n; ++m) {
      if (m == i) continue;
      reps.push_back(opp_reps(m));
      combos *= static_cast<std::int64_t>(reps.back().size());
    }
    if (combos * static_cast<std::int64_t>(grid.size()) *
            static_cast<std::int64_t>(grid.size()) >
        200'000'000) {
      throw BudgetError("check_ic_ir: grid too large");
    }

    std::vector<std::size_t> idx(reps.size(), 0);
    std::vector<double> values(n, 0.0);
    bool done = false;
    while (!done) {
      for (std::size_t m = 0, o = 0; m < static_cast<std::size_t>(n); ++m) {
        if (static_cast<int>(m) != i) values[m] = reps[o][idx[o]], ++o;
      }
      // Precompute allocation/payment per report on the grid.
      std::vector<double> xs(grid.size()), ps(grid.size());
      for (std::size_t r = 0; r < grid.size(); ++r) {
        values[i] = grid[r];
        xs[r] = aux.allocation(i, values);
        ps[r] = aux.payment(i, values);
      }
      for (std::size_t a = 0; a < grid.size(); ++a) {
        const double v = grid[a];
        const double truthful = xs[a] * v - ps[a];
        if (truthful < -tolerance) {
          rep.ir_ok = false;
          if (-truthful > rep.worst_ir_violation) {
            rep.worst_ir_violation = -truthful;
            rep.witness_bidder = i;
            rep.witness_value = v;
            rep.witness_misreport = v;
          }
        }
        for (std::size_t b = 0; b < grid.size(); ++b) {
          const double gain = xs[b] * v - ps[b] - truthful;
          if (gain > tolerance) {
            rep.ic_ok = false;
            if (gain > rep.worst_ic_violation) {
              rep.worst_ic_violation = gain;
              rep.witness_bidder = i;
              rep.witness_value = v;
              rep.witness_misreport = grid[b];
            }
          }
        }
      }
      // Next opponent combination.
      done = true;
      for (std::size_t o = 0; o < idx.size(); ++o) {
        if (++idx[o] < reps[o].size()) {
          done = false;
          break;
        }
        idx[o] = 0;
      }
      if (idx.empty()) done = true;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Myerson's optimal revenue
// ---------------------------------------------------------------------------

// Mye(D) = E[max(0, max_i phi_i(v_i))] for independent regular priors.
// Irregular priors (non-monotone virtual value on a grid) are refused.
// n = 1 uses the monopoly price directly; n = 2 and n = 3 use deterministic
// product-grid quadrature with exact per-cell masses and midpoint virtual
// values (error is O(grid^-2) away from the kink and O(grid^-2) on it, well
// inside 1e-4 at the defaults).
inline double myerson_revenue(std::span<const ValueDistribution> dists) {
  for (const auto& d : dists) {
    if (!d.is_regular()) {
      throw RegularityError(
          "myerson_revenue: prior has a non-monotone virtual value");
    }
  }
  const int n = static_cast<int>(dists.size());
  if (n == 1) {
    const auto& d = dists[0];
    double lo = d.support_min(), hi = d.support_max();
    double price = lo;
    if (d.virtual_value(std::min(lo + 1e-12, hi)) < 0.0) {
      // Bisect the monotone virtual value for its root.
      double a = lo, b = hi;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        (d.virtual_value(m) < 0.0 ? a : b) = m;
      }
      price = 0.5 * (a + b);
    }
    return price * (1.0 - d.cdf(price));
  }
  if (n > 3) {
    throw BudgetError("myerson_revenue: quadrature supports n <= 3");
  }
  const int cells = n == 2 ? 10'000 : 1'000;
  std::vector<std::vector<double>> mass(n), phi(n);
  for (int i = 0; i < n; ++i) {
    const auto& d = dists[i];
    const double lo = d.support_min(), span = d.support_max() - lo;
    mass[i].resize(cells);
    phi[i].resize(cells);
    for (int c = 0; c < cells; ++c) {
      const double a = lo + span * c / cells;
      const double b = lo + span * (c + 1) / cells;
      mass[i][c] = d.cdf(b) - d.cdf(a);
      phi[i][c] = d.virtual_value(0.5 * (a + b));
    }
  }
  double total = 0.0;
  if (n == 2) {
    for (int a = 0; a < cells; ++a) {
      const double pa = phi[0][a], wa = mass[0][a];
      for (int b = 0; b < cells; ++b) {
        const double best = std::max({0.0, pa, phi[1][b]});
        total += wa * mass[1][b] * best;
      }
    }
  } else {
    for (int a = 0; a < cells; ++a) {
      for (int b = 0; b < cells; ++b) {
        const double pab = std::max(phi[0][a], phi[1][b]);
        const double wab = mass[0][a] * mass[1][b];
        for (int c = 0; c < cells; ++c) {
          total += wab * mass[2][c] * std::max({0.0, pab, phi[2][c]});
        }
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Hindsight regret
// ---------------------------------------------------------------------------

// Per-bid-level cumulative allocation and payment for one bidder over a
// round range, plus the realized utility: everything the best-in-hindsight
// computation needs.
struct HindsightAccumulator {
  std::vector<double> cum_allocation;  // X_b, indexed by bid level
  std::vector<double> cum_payment;     // P_b
  double realized_utility = 0.0;
  long long rounds = 0;

  explicit HindsightAccumulator(int K = 1)
      : cum_allocation(K + 1, 0.0), cum_payment(K + 1, 0.0) {}

  void add_round(std::span<const double> x, std::span<const double> p,
                 double utility) {
    for (std::size_t k = 0; k < cum_allocation.size(); ++k) {
      cum_allocation[k] += x[k];
      cum_payment[k] += p[k];
    }
    realized_utility += utility;
    ++rounds;
  }
};

struct RegretReport {
  double envelope_optimum = 0.0;  // upper envelope of the K+1 lines
  double monotone_optimum = 0.0;  // exact search over monotone strategies
  double simplex_optimum = 0.0;   // exact max of the summed quantile utility
  double pga_value = 0.0;         // projected-gradient-ascent certificate
  double realized_utility = 0.0;
  double regret = 0.0;  // envelope_optimum - realized_utility
  long long rounds = 0;
  std::uint64_t input_digest = 0;
};

namespace detail {

inline std::uint64_t fnv1a_doubles(std::span<const double> v,
                                   std::uint64_t h = 1469598103934665603ULL) {
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

// Route 1: the best fixed strategy value is E_v[max_b (X_b v - P_b)]; build
// the upper envelope of the K+1 lines and integrate each linear piece
// against the prior in closed form.
inline double envelope_optimum(const ValueDistribution& dist,
                               std::span<const double> X,
                               std::span<const double> P) {
  struct Line {
    double m, c;
  };
  std::vector<Line> lines;
  for (std::size_t b = 0; b < X.size(); ++b) {
    lines.push_back({X[b], -P[b]});
  }
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    return a.m != b.m ? a.m < b.m : a.c < b.c;
  });
  // Drop duplicate slopes (keep the highest intercept), then build the hull.
  std::vector<Line> hull;
  for (const Line& l : lines) {
    if (!hull.empty() && hull.back().m == l.m) hull.pop_back();
    const auto cross = [](const Line& a, const Line& b) {
      return (a.c - b.c) / (b.m - a.m);
    };
    while (hull.size() >= 2 &&
           cross(hull[hull.size() - 2], l) <=
               cross(hull[hull.size() - 2], hull.back())) {
      hull.pop_back();
    }
    hull.push_back(l);
  }
  double total = 0.0, v_lo = 0.0;
  for (std::size_t i = 0; i < hull.size() && v_lo < 1.0; ++i) {
    double v_hi = 1.0;
    if (i + 1 < hull.size()) {
      v_hi = std::min(
          v_hi, (hull[i].c - hull[i + 1].c) / (hull[i + 1].m - hull[i].m));
    }
    if (v_hi > v_lo) {
      const double qa = dist.cdf(v_lo), qb = dist.cdf(v_hi);
      total += hull[i].m * dist.partial_expectation(qa, qb) +
               hull[i].c * (qb - qa);
      v_lo = v_hi;
    }
  }
  return total;
}

// Route 2: exact maximization over monotone strategies. For each subset of
// used bid levels the objective is separable across the value thresholds
// between consecutive used levels; each per-boundary maximizer is available
// in closed form, and any subset whose maximizers violate the threshold
// ordering is dominated by one of its sub-subsets.
inline double monotone_optimum_subsets(const ValueDistribution& dist,
                                       std::span<const double> X,
                                       std::span<const double> P) {
  const int m = static_cast<int>(X.size());
  if (m > 21) {
    throw BudgetError("monotone optimum: subset search supports K <= 20");
  }
  const double lo = dist.support_min(), hi = dist.support_max();
  const auto pe_below = [&](double t) {
    return dist.partial_expectation(0.0, dist.cdf(t));
  };
  double best = -1e300;
  std::vector<int> levels;
  std::vector<double> t;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    levels.clear();
    for (int b = 0; b < m; ++b) {
      if (mask & (1u << b)) levels.push_back(b);
    }
    t.assign(levels.size() + 1, hi);
    t[0] = lo;
    bool feasible = true;
    for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
      const double dX = X[levels[l + 1]] - X[levels[l]];
      const double dP = P[levels[l + 1]] - P[levels[l]];
      double opt;
      if (dX > 0.0) {
        opt = std::clamp(dP / dX, lo, hi);
      } else {
        opt = dP >= 0.0 ? hi : lo;  // no allocation gain: keep the cheaper
      }
      t[l + 1] = opt;
      if (opt < t[l] - 1e-12) {
        feasible = false;
        break;
      }
      t[l + 1] = std::max(opt, t[l]);
    }
    if (!feasible) continue;
    t.back() = hi;
    if (t.size() >= 2 && t[t.size() - 2] > hi) continue;
    double value = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double ta = t[l], tb = std::max(t[l + 1], ta);
      value += X[levels[l]] * (pe_below(tb) - pe_below(ta)) -
               P[levels[l]] * (dist.cdf(tb) - dist.cdf(ta));
    }
    best = std::max(best, value);
  }
  return best;
}

// Route 3: exact maximization of the summed quantile utility over the
// simplex. In partial-sum coordinates the objective is separable and
// concave per coordinate, subject only to the ordering chain, which the
// pool-adjacent-violators sweep solves exactly.
inline double simplex_optimum_pav(const ValueDistribution& dist,
                                  std::span<const double> X,
                                  std::span<const double> P) {
  const int K = static_cast<int>(X.size()) - 1;
  const double lo = dist.support_min(), hi = dist.support_max();

  // Unconstrained maximizer of
  //   (X_{a} - X_{b}) pe(y) + (P_{b} - P_{a}) y
  // over y in [0,1], for the block spanning levels a..b.
  const auto block_opt = [&](int a, int b) {
    const double dX = X[b] - X[a];
    const double dP = P[b] - P[a];
    if (dX > 0.0) return dist.cdf(std::clamp(dP / dX, lo, hi));
    // No allocation gain from the higher level: push the boundary to keep
    // whichever level is cheaper.
    return dP >= 0.0 ? 1.0 : 0.0;
  };

  struct Block {
    int a, b;
    double y;
  };
  std::vector<Block> stack;
  for (int j = 1; j <= K; ++j) {
    Block blk{j - 1, j, block_opt(j - 1, j)};
    while (!stack.empty() && stack.back().y > blk.y) {
      blk.a = stack.back().a;
      stack.pop_back();
      blk.y = block_opt(blk.a, blk.b);
    }
    stack.push_back(blk);
  }
  std::vector<double> y(K + 2);
  y[0] = 0.0;
  y[K + 1] = 1.0;
  for (const Block& blk : stack) {
    for (int j = blk.a + 1; j <= blk.b; ++j) y[j] = blk.y;
  }
  for (int j = 1; j <= K; ++j) y[j] = std::clamp(y[j], y[j - 1], 1.0);

  double value = 0.0;
  for (int l = 0; l <= K; ++l) {
    value += X[l] * dist.partial_expectation(y[l], y[l + 1]) -
             P[l] * (y[l + 1] - y[l]);
  }
  return value;
}

// Projected gradient ascent on the round-averaged summed quantile utility,
// step 1/sqrt(iter). First-order and approximate; reported as a feasible
// lower-bound certificate next to the exact routes.
inline double pga_certificate(const ValueDistribution& dist,
                              std::span<const double> X,
                              std::span<const double> P, long long rounds,
                              int iterations = 10'000) {
  const int K = static_cast<int>(X.size()) - 1;
  const double scale = static_cast<double>(std::max<long long>(rounds, 1));
  std::vector<double> xa(K + 1), pa(K + 1);
  for (int k = 0; k <= K; ++k) {
    xa[k] = X[k] / scale;
    pa[k] = P[k] / scale;
  }
  QuantileStrategy pi = QuantileStrategy::uniform(K);
  double best = quantile_utility_levels(pi, dist, xa, pa);
  std::vector<double> y(K + 1);
  for (int it = 1; it <= iterations; ++it) {
    const auto g = quantile_gradient_levels(pi, dist, xa, pa);
    const double step = 1.0 / std::sqrt(static_cast<double>(it));
    for (int k = 0; k <= K; ++k) y[k] = pi[k] + step * g[k];
    pi = QuantileStrategy(project_to_simplex(y));
    best = std::max(best, quantile_utility_levels(pi, dist, xa, pa));
  }
  return best * scale;
}

}  // namespace detail

// Best-fixed-strategy value and regret for one bidder's history, computed
// three independent ways (they agree for valid inputs): the upper-envelope
// integral, the exact monotone-strategy search, and the exact simplex
// optimum of the summed quantile utility. A projected-gradient certificate
// rides along as a feasible lower bound.
inline RegretReport hindsight_regret(const HindsightAccumulator& acc,
                                     const ValueDistribution& dist) {
  if (acc.rounds == 0) {
    throw std::invalid_argument("hindsight_regret: empty history");
  }
  RegretReport rep;
  rep.rounds = acc.rounds;
  rep.realized_utility = acc.realized_utility;
  rep.envelope_optimum =
      detail::envelope_optimum(dist, acc.cum_allocation, acc.cum_payment);
  rep.monotone_optimum = detail::monotone_optimum_subsets(
      dist, acc.cum_allocation, acc.cum_payment);
  rep.simplex_optimum = detail::simplex_optimum_pav(dist, acc.cum_allocation,
                                                    acc.cum_payment);
  rep.pga_value = detail::pga_certificate(dist, acc.cum_allocation,
                                          acc.cum_payment, acc.rounds);
  rep.regret = rep.envelope_optimum - rep.realized_utility;
  rep.input_digest = detail::fnv1a_doubles(
      acc.cum_payment, detail::fnv1a_doubles(acc.cum_allocation));
  return rep;
}

// Spec-shaped wrapper: one entry per round with the format, the opponents'
// realized bids, and the realized quantile utility.
struct BidderRound {
  const AuctionFormat* format = nullptr;
  BidProfile opp_bids;
  double utility = 0.0;
};

inline RegretReport hindsight_regret(std::span<const BidderRound> history,
                                     int bidder,
                                     const ValueDistribution& dist) {
  if (history.empty()) {
    throw std::invalid_argument("hindsight_regret: empty history");
  }
  const int K = history.front().format->grid_k();
  HindsightAccumulator acc(K);
  std::vector<double> x(K + 1), p(K + 1);
  for (const auto& round : history) {
    detail::fill_levels(*round.format, bidder, round.opp_bids, x, p);
    acc.add_round(x, p, round.utility);
  }
  return hindsight_regret(acc, dist);
}

// ---------------------------------------------------------------------------
// Swap regret
// ---------------------------------------------------------------------------

struct SwapRegretReport {
  double swap_regret = 0.0;
  double external_regret = 0.0;
  std::vector<int> phi;  // optimal action reassignment
};

// Streaming accumulator: cross(k, j) = sum_t pi_k^{(t)} r_j^{(t)}.
class SwapRegretAccumulator {
 public:
  explicit SwapRegretAccumulator(int actions = 2)
      : m_(actions), cross_(static_cast<std::size_t>(actions) * actions, 0.0) {}

  void add(std::span<const double> pi, std::span<const double> reward) {
    if (static_cast<int>(pi.size()) != m_ ||
        static_cast<int>(reward.size()) != m_) {
      throw std::invalid_argument("swap regret: dimension mismatch");
    }
    for (int k = 0; k < m_; ++k) {
      if (pi[k] == 0.0) continue;
      for (int j = 0; j < m_; ++j) {
        cross_[static_cast<std::size_t>(k) * m_ + j] += pi[k] * reward[j];
      }
    }
  }

  // The maximum over mappings phi decomposes coordinatewise:
  //   sum_k max_j sum_t pi_k (r_j - r_k).
  SwapRegretReport report() const {
    SwapRegretReport rep;
    rep.phi.resize(m_);
    std::vector<double> column_sum(m_, 0.0);
    double played = 0.0;
    for (int k = 0; k < m_; ++k) {
      const double* row = &cross_[static_cast<std::size_t>(k) * m_];
      int best = 0;
      for (int j = 0; j < m_; ++j) {
        if (row[j] > row[best]) best = j;
        column_sum[j] += row[j];
      }
      rep.phi[k] = best;
      rep.swap_regret += row[best] - row[k];
      played += row[k];
    }
    rep.external_regret =
        *std::max_element(column_sum.begin(), column_sum.end()) - played;
    return rep;
  }

  int actions() const { return m_; }

 private:
  int m_;
  std::vector<double> cross_;
};

inline SwapRegretReport swap_regret(
    std::span<const std::pair<std::vector<double>, std::vector<double>>>
        trajectory) {
  if (trajectory.empty()) {
    throw std::invalid_argument("swap_regret: empty trajectory");
  }
  SwapRegretAccumulator acc(
      static_cast<int>(trajectory.front().first.size()));
  for (const auto& [pi, r] : trajectory) acc.add(pi, r);
  return acc.report();
}

// ---------------------------------------------------------------------------
// Randomized identity suite
// ---------------------------------------------------------------------------

// Random prior for property suites: uniform on a random subinterval or a
// random piecewise-linear CDF on [0,1].
inline ValueDistribution make_random_prior(Rng& rng,
                                           bool allow_piecewise = true) {
  if (!allow_piecewise || rng.next_below(2) == 0) {
    const double lo = 0.4 * rng.next_double();
    const double hi = 0.6 + 0.4 * rng.next_double();
    return ValueDistribution::uniform(lo, hi);
  }
  const int segments = 2 + static_cast<int>(rng.next_below(3));
  std::vector<double> vals{0.0, 1.0}, cums{0.0, 1.0};
  for (int s = 1; s < segments; ++s) {
    vals.push_back(0.05 + 0.9 * rng.next_double());
    cums.push_back(0.05 + 0.9 * rng.next_double());
  }
  std::sort(vals.begin(), vals.end());
  std::sort(cums.begin(), cums.end());
  std::vector<std::pair<double, double>> knots;
  for (int s = 0; s <= segments; ++s) {
    knots.emplace_back(vals[s], cums[s]);
  }
  // Enforce strictly increasing knots; collapse near-duplicates.
  std::vector<std::pair<double, double>> clean{knots.front()};
  for (std::size_t s = 1; s < knots.size(); ++s) {
    if (knots[s].first > clean.back().first + 1e-3 &&
        knots[s].second > clean.back().second + 1e-3) {
      clean.push_back(knots[s]);
    }
  }
  clean.back() = {1.0, 1.0};
  if (clean.size() < 2 || clean.front().first != 0.0) {
    return ValueDistribution::uniform(0.0, 1.0);
  }
  return ValueDistribution::piecewise_linear_cdf(std::move(clean));
}

inline QuantileStrategy make_random_simplex_point(Rng& rng, int K,
                                                  double floor = 0.0) {
  std::vector<double> w(K + 1);
  double sum = 0.0;
  for (double& v : w) {
    v = -std::log(1.0 - rng.next_double());  // Exp(1) draws -> Dirichlet(1)
    sum += v;
  }
  for (double& v : w) v = (v / sum) * (1.0 - floor * (K + 1)) + floor;
  return QuantileStrategy(std::move(w));
}

struct IdentityTrial {
  int trial = 0;
  int n = 0;
  int K = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double diff = 0.0;
};

struct IdentitySuiteResult {
  std::vector<IdentityTrial> trials;
  double max_diff = 0.0;
};

// Randomized verification of the main identity over validated random
// tabular formats, random priors and random simplex profiles. Trials carry
// their own derived seeds, so the result is independent of the thread count.
inline IdentitySuiteResult run_identity_suite(int trials, int max_n, int max_k,
                                              std::uint64_t seed,
                                              int threads = 1) {
  IdentitySuiteResult result;
  result.trials.resize(trials);
  const auto run_range = [&](int begin, int end) {
    for (int t = begin; t < end; ++t) {
      Rng rng(split_seed(seed, static_cast<std::uint64_t>(t)));
      const int n = 1 + static_cast<int>(rng.next_below(max_n));
      const int K = 1 + static_cast<int>(rng.next_below(max_k));
      const AuctionFormat format = make_random_monotone_format(rng, n, K);
      std::vector<ValueDistribution> dists;
      StrategyProfile profile;
      for (int i = 0; i < n; ++i) {
        dists.push_back(make_random_prior(rng));
        profile.push_back(make_random_simplex_point(rng, K));
      }
      const LemmaCheck check = check_identity(format, profile, dists);
      result.trials[t] = IdentityTrial{t, n, K, check.lhs, check.rhs,
                                       check.diff};
    }
  };
  threads = std::max(1, threads);
  if (threads == 1) {
    run_range(0, trials);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (trials + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int begin = w * chunk;
      const int end = std::min(trials, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& row : result.trials) {
    result.max_diff = std::max(result.max_diff, row.diff);
  }
  return result;
}

}  // namespace qbid
