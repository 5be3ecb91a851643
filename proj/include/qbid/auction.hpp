#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qbid/errors.hpp"
#include "qbid/rng.hpp"

namespace qbid {

// Bids live on the grid {0, 1/K, ..., 1} and are handled as integer indices.
struct BidGrid {
  int K = 1;
  double level(int j) const { return static_cast<double>(j) / K; }
};

using BidProfile = std::vector<int>;

// Hard cap on exact enumeration; larger instances are refused, never sampled.
inline constexpr std::int64_t kEnumerationBudget = 10'000'000;

inline std::int64_t profile_count(int n, int K) {
  std::int64_t c = 1;
  for (int i = 0; i < n; ++i) {
    c *= (K + 1);
    if (c > kEnumerationBudget) return kEnumerationBudget + 1;
  }
  return c;
}

// Visits all (K+1)^n profiles in lexicographic order, bidder 0 slowest.
template <class F>
void for_each_profile(int n, int K, F&& visit) {
  BidProfile b(n, 0);
  while (true) {
    visit(std::span<const int>(b));
    int i = n - 1;
    while (i >= 0 && b[i] == K) b[i--] = 0;
    if (i < 0) return;
    ++b[i];
  }
}

struct ValidationReport {
  bool monotone = true;
  bool voluntary = true;
  bool ranges = true;
  int witness_bidder = -1;
  BidProfile witness;
  std::string detail;

  bool passed() const { return monotone && voluntary && ranges; }
};

enum class FormatFamily {
  kFirstPrice,
  kSecondPrice,
  kAllPay,
  kPostedPrice,
  kTable,
};

inline const char* family_name(FormatFamily f) {
  switch (f) {
    case FormatFamily::kFirstPrice: return "first_price";
    case FormatFamily::kSecondPrice: return "second_price";
    case FormatFamily::kAllPay: return "all_pay";
    case FormatFamily::kPostedPrice: return "posted_price";
    case FormatFamily::kTable: return "table";
  }
  return "?";
}

// A single-round auction over discrete bid profiles: an allocation mapping
// (win probabilities, summing to at most 1) and a payment mapping (in [0,1],
// charged as stated regardless of the allocation lottery's outcome).
//
// Standard families, all with a reserve given as a bid index r in 0..K:
//   first_price    highest bid wins if its level >= r/K, ties split equally;
//                  p_i = x_i * b_i
//   second_price   winner as above; p_i = x_i * max(r/K, highest other bid)
//   all_pay        allocation as first_price; p_i = b_i whenever b_i > 0
//   posted_price   every bidder with bid index >= max(r, 1) gets an equal
//                  share and pays her share times r/K
// Explicit tables hold one row per profile in lexicographic order (bidder 0
// slowest), n entries per row.
class AuctionFormat {
 public:
  static AuctionFormat standard(FormatFamily family, int n, int K,
                                int reserve) {
    if (family == FormatFamily::kTable) {
      throw std::invalid_argument("standard: use AuctionFormat::table()");
    }
    if (n < 1 || K < 1) throw std::invalid_argument("standard: need n,K >= 1");
    if (reserve < 0 || reserve > K) {
      throw std::invalid_argument("standard: reserve index out of 0..K");
    }
    AuctionFormat f;
    f.family_ = family;
    f.n_ = n;
    f.K_ = K;
    f.reserve_ = reserve;
    return f;
  }

  static AuctionFormat table(int n, int K, std::vector<double> allocation,
                             std::vector<double> payment) {
    if (n < 1 || K < 1) throw std::invalid_argument("table: need n,K >= 1");
    const std::int64_t rows = profile_count(n, K);
    if (rows > kEnumerationBudget) {
      throw BudgetError("table: (K+1)^n exceeds the enumeration budget; use "
                        "a parametric family");
    }
    const auto want = static_cast<std::size_t>(rows) * n;
    if (allocation.size() != want || payment.size() != want) {
      throw std::invalid_argument("table: expected (K+1)^n * n entries");
    }
    AuctionFormat f;
    f.family_ = FormatFamily::kTable;
    f.n_ = n;
    f.K_ = K;
    f.alloc_ = std::move(allocation);
    f.pay_ = std::move(payment);
    return f;
  }

  int bidders() const { return n_; }
  int grid_k() const { return K_; }
  BidGrid grid() const { return BidGrid{K_}; }
  FormatFamily family() const { return family_; }
  int reserve_index() const { return reserve_; }
  double bid_level(int j) const { return static_cast<double>(j) / K_; }

  // x_i and p_i as functions of own bid index with the others' bids fixed.
  // `opp` lists the other bidders' indices in bidder order with slot i
  // removed.
  double allocation_of(int i, int own, std::span<const int> opp) const {
    check_slice(i, opp);
    switch (family_) {
      case FormatFamily::kTable:
        return alloc_[rank_of(i, own, opp) * n_ + i];
      case FormatFamily::kPostedPrice: {
        const int cutoff = std::max(reserve_, 1);
        if (own < cutoff) return 0.0;
        int q = 1;
        for (int b : opp) q += (b >= cutoff);
        return 1.0 / q;
      }
      default:
        return highest_bid_share(own, opp);
    }
  }

  double payment_of(int i, int own, std::span<const int> opp) const {
    check_slice(i, opp);
    switch (family_) {
      case FormatFamily::kTable:
        return pay_[rank_of(i, own, opp) * n_ + i];
      case FormatFamily::kFirstPrice:
        return highest_bid_share(own, opp) * bid_level(own);
      case FormatFamily::kSecondPrice: {
        const double share = highest_bid_share(own, opp);
        if (share == 0.0) return 0.0;
        int best_other = 0;
        for (int b : opp) best_other = std::max(best_other, b);
        return share * bid_level(std::max(reserve_, best_other));
      }
      case FormatFamily::kAllPay:
        return own > 0 ? bid_level(own) : 0.0;
      case FormatFamily::kPostedPrice:
        return allocation_of(i, own, opp) * bid_level(reserve_);
    }
    return 0.0;  // unreachable
  }

  void allocate(std::span<const int> profile, std::span<double> out) const {
    check_profile(profile, out);
    for (int i = 0; i < n_; ++i) {
      out[i] = allocation_of(i, profile[i], without(profile, i));
    }
  }

  void payment(std::span<const int> profile, std::span<double> out) const {
    check_profile(profile, out);
    for (int i = 0; i < n_; ++i) {
      out[i] = payment_of(i, profile[i], without(profile, i));
    }
  }

  std::vector<double> allocate(const BidProfile& profile) const {
    std::vector<double> out(n_);
    allocate(std::span<const int>(profile), std::span<double>(out));
    return out;
  }

  std::vector<double> payment(const BidProfile& profile) const {
    std::vector<double> out(n_);
    payment(std::span<const int>(profile), std::span<double>(out));
    return out;
  }

  // Exhaustively checks allocation monotonicity in the own bid, voluntary
  // participation (zero bid pays zero) and the [0,1] / sum <= 1 ranges.
  // Refuses instances above the enumeration budget.
  ValidationReport validate() const {
    if (profile_count(n_, K_) > kEnumerationBudget) {
      throw BudgetError("validate: (K+1)^n exceeds the enumeration budget");
    }
    ValidationReport rep;
    std::vector<double> x(n_), p(n_), x_prev(n_);
    BidProfile scratch;
    for_each_profile(n_, K_, [&](std::span<const int> b) {
      if (!rep.passed()) return;
      allocate(b, x);
      payment(b, p);
      double sum = 0.0;
      for (int i = 0; i < n_; ++i) {
        sum += x[i];
        if (x[i] < -1e-12 || x[i] > 1.0 + 1e-12 || p[i] < -1e-12 ||
            p[i] > 1.0 + 1e-12) {
          fail(rep, rep.ranges, i, b, "entry outside [0,1]");
          return;
        }
        if (b[i] == 0 && std::abs(p[i]) > 1e-12) {
          fail(rep, rep.voluntary, i, b, "p_i(0, b_-i) != 0");
          return;
        }
        if (b[i] > 0) {
          scratch.assign(b.begin(), b.end());
          --scratch[i];
          const double below =
              allocation_of(i, scratch[i], without(scratch, i));
          if (x[i] < below - 1e-12) {
            fail(rep, rep.monotone, i, b, "x_i decreases in own bid");
            return;
          }
        }
      }
      if (sum > 1.0 + 1e-9) {
        fail(rep, rep.ranges, 0, b, "allocation sum > 1");
      }
    });
    return rep;
  }

  // Materializes any format as an explicit table (used by fault-injection
  // tests and by table serialization).
  AuctionFormat to_table() const {
    const std::int64_t rows = profile_count(n_, K_);
    if (rows > kEnumerationBudget) {
      throw BudgetError("to_table: (K+1)^n exceeds the enumeration budget");
    }
    std::vector<double> a(static_cast<std::size_t>(rows) * n_);
    std::vector<double> p(static_cast<std::size_t>(rows) * n_);
    std::vector<double> xb(n_), pb(n_);
    std::int64_t r = 0;
    for_each_profile(n_, K_, [&](std::span<const int> b) {
      allocate(b, xb);
      payment(b, pb);
      for (int i = 0; i < n_; ++i) {
        a[r * n_ + i] = xb[i];
        p[r * n_ + i] = pb[i];
      }
      ++r;
    });
    return table(n_, K_, std::move(a), std::move(p));
  }

  // Mutable access to table entries (tables only), for fault injection.
  double& table_allocation_entry(std::int64_t rank, int i) {
    require_table();
    return alloc_[rank * n_ + i];
  }
  double& table_payment_entry(std::int64_t rank, int i) {
    require_table();
    return pay_[rank * n_ + i];
  }

  std::int64_t rank_of_profile(std::span<const int> profile) const {
    std::int64_t r = 0;
    for (int i = 0; i < n_; ++i) r = r * (K_ + 1) + profile[i];
    return r;
  }

  const std::vector<double>& allocation_table() const { return alloc_; }
  const std::vector<double>& payment_table() const { return pay_; }

  // Short identifier for logs: family plus reserve, or a content hash for
  // tables.
  std::string digest() const {
    if (family_ != FormatFamily::kTable) {
      return std::string(family_name(family_)) + ":r" +
             std::to_string(reserve_);
    }
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](const std::vector<double>& v) {
      for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, sizeof bits);
        for (int k = 0; k < 8; ++k) {
          h ^= (bits >> (8 * k)) & 0xFF;
          h *= 1099511628211ULL;
        }
      }
    };
    mix(alloc_);
    mix(pay_);
    char buf[32];
    std::snprintf(buf, sizeof buf, "table:%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  AuctionFormat() = default;

  void require_table() const {
    if (family_ != FormatFamily::kTable) {
      throw std::invalid_argument("not a tabular format");
    }
  }

  void check_slice(int i, std::span<const int> opp) const {
    if (i < 0 || i >= n_ || static_cast<int>(opp.size()) != n_ - 1) {
      throw std::invalid_argument("bid profile slice has wrong dimension");
    }
  }

  void check_profile(std::span<const int> profile,
                     std::span<double> out) const {
    if (static_cast<int>(profile.size()) != n_ ||
        static_cast<int>(out.size()) != n_) {
      throw std::invalid_argument("bid profile has wrong dimension");
    }
  }

  // First-price style allocation share: the highest bid wins when it meets
  // the reserve; ties split equally among the highest bidders.
  double highest_bid_share(int own, std::span<const int> opp) const {
    int top = own, ties = 1;
    for (int b : opp) {
      if (b > top) {
        top = b;
        ties = 1;
      } else if (b == top) {
        ++ties;
      }
    }
    if (top < reserve_ || own < top) return 0.0;
    return 1.0 / ties;
  }

  std::int64_t rank_of(int i, int own, std::span<const int> opp) const {
    std::int64_t r = 0;
    for (int m = 0; m < n_; ++m) {
      const int b = m == i ? own : opp[m < i ? m : m - 1];
      r = r * (K_ + 1) + b;
    }
    return r;
  }

  static std::vector<int> without(std::span<const int> profile, int i) {
    std::vector<int> out;
    out.reserve(profile.size() - 1);
    for (std::size_t m = 0; m < profile.size(); ++m) {
      if (static_cast<int>(m) != i) out.push_back(profile[m]);
    }
    return out;
  }

  void fail(ValidationReport& rep, bool& flag, int bidder,
            std::span<const int> b, const char* what) const {
    flag = false;
    rep.witness_bidder = bidder;
    rep.witness.assign(b.begin(), b.end());
    rep.detail = what;
  }

  FormatFamily family_ = FormatFamily::kFirstPrice;
  int n_ = 1;
  int K_ = 1;
  int reserve_ = 0;
  std::vector<double> alloc_;
  std::vector<double> pay_;
};

inline AuctionFormat make_standard_format(FormatFamily family, int n, int K,
                                          int reserve) {
  return AuctionFormat::standard(family, n, K, reserve);
}

// Random tabular format that satisfies both format assumptions by
// construction: the allocation is a sub-convex mixture of deterministic
// priority auctions with per-bidder reserves (each monotone in the own bid,
// at most one winner), and payments are uniform in [0,1] except that a zero
// bid always pays zero.
inline AuctionFormat make_random_monotone_format(Rng& rng, int n, int K) {
  const std::int64_t rows = profile_count(n, K);
  if (rows > kEnumerationBudget) {
    throw BudgetError("make_random_monotone_format: instance too large");
  }

  struct Rule {
    std::vector<int> reserve;
    std::vector<int> priority;
    double weight;
  };
  const int num_rules = 1 + static_cast<int>(rng.next_below(3));
  std::vector<Rule> rules(num_rules);
  double wsum = 0.0;
  for (auto& rule : rules) {
    rule.reserve.resize(n);
    rule.priority.resize(n);
    std::iota(rule.priority.begin(), rule.priority.end(), 0);
    for (int i = 0; i < n; ++i) {
      rule.reserve[i] = static_cast<int>(rng.next_below(K + 1));
      std::swap(rule.priority[i],
                rule.priority[i + rng.next_below(n - i)]);
    }
    rule.weight = 0.05 + rng.next_double();
    wsum += rule.weight;
  }
  // Scale below 1 so the item sometimes stays unsold.
  const double scale = (0.5 + 0.5 * rng.next_double()) / wsum;
  for (auto& rule : rules) rule.weight *= scale;

  std::vector<double> alloc(static_cast<std::size_t>(rows) * n, 0.0);
  std::vector<double> pay(static_cast<std::size_t>(rows) * n, 0.0);
  std::int64_t r = 0;
  for_each_profile(n, K, [&](std::span<const int> b) {
    for (const auto& rule : rules) {
      int winner = -1;
      for (int i = 0; i < n; ++i) {
        if (b[i] < rule.reserve[i]) continue;
        if (winner < 0 || b[i] > b[winner] ||
            (b[i] == b[winner] &&
             rule.priority[i] > rule.priority[winner])) {
          winner = i;
        }
      }
      if (winner >= 0) alloc[r * n + winner] += rule.weight;
    }
    for (int i = 0; i < n; ++i) {
      pay[r * n + i] = b[i] == 0 ? 0.0 : rng.next_double();
    }
    ++r;
  });
  return AuctionFormat::table(n, K, std::move(alloc), std::move(pay));
}

}  // namespace qbid
