#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qbid/adversaries.hpp"
#include "qbid/analysis.hpp"
#include "qbid/auction.hpp"
#include "qbid/distributions.hpp"
#include "qbid/learners.hpp"
#include "qbid/rng.hpp"

namespace qbid {

enum class FeedbackMode { kExpected, kRealized };

inline const char* mode_name(FeedbackMode m) {
  return m == FeedbackMode::kExpected ? "expected" : "realized";
}

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kMwu;
  double eta = 0.0;  // 0 means the textbook auto tuning for the horizon
};

struct BidderSpec {
  ValueDistribution dist = ValueDistribution::uniform(0.0, 1.0);
  LearnerSpec learner;
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::kStatic;
  // static
  FormatFamily family = FormatFamily::kFirstPrice;
  int reserve = 0;
  bool tabular = false;
  std::vector<double> allocation;  // row-major, bidder 0 slowest
  std::vector<double> payment;
  // lower bound
  std::uint64_t seed = 0;
};

struct GameConfig {
  std::uint64_t seed = 1;
  long long rounds = 1;  // T
  int K = 1;
  std::vector<BidderSpec> bidders;
  PolicySpec auctioneer;
  FeedbackMode mode = FeedbackMode::kExpected;
  long long identity_stride = 100;  // realized mode only
  std::string rounds_csv;   // optional output paths
  std::string summary_path;
};

struct RoundRecord {
  long long round = 0;
  std::string format;  // digest
  double revenue_cond = std::numeric_limits<double>::quiet_NaN();
  double revenue_aux = std::numeric_limits<double>::quiet_NaN();
  double identity_lhs = std::numeric_limits<double>::quiet_NaN();
  double identity_rhs = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> pi;  // per bidder, K+1 weights
  std::vector<double> graddot;          // per bidder, grad . (e - pi)
  // realized mode only
  std::vector<double> values;
  std::vector<int> bids;
  double revenue_realized = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  std::uint64_t seed = 0;
  FeedbackMode mode = FeedbackMode::kExpected;
  int K = 1;
  int bidders = 0;
  std::vector<RoundRecord> rounds;
  double total_revenue_cond = 0.0;
  double total_revenue_realized = 0.0;
  std::vector<HindsightAccumulator> hindsight;   // per bidder
  std::vector<SwapRegretAccumulator> swap;       // per bidder, over rewards

  double headline_revenue() const {
    return mode == FeedbackMode::kExpected ? total_revenue_cond
                                           : total_revenue_realized;
  }
};

namespace detail {

inline AuctioneerPolicy build_policy(const PolicySpec& spec, int n, int K) {
  switch (spec.kind) {
    case PolicyKind::kStatic:
      if (spec.tabular) {
        return AuctioneerPolicy::fixed(
            AuctionFormat::table(n, K, spec.allocation, spec.payment));
      }
      return AuctioneerPolicy::fixed(
          AuctionFormat::standard(spec.family, n, K, spec.reserve));
    case PolicyKind::kMyopicReserve:
      return AuctioneerPolicy::myopic_reserve(spec.family, n, K);
    case PolicyKind::kLowerBound:
      if (n != 1) {
        throw ConfigError("lower_bound auctioneer requires a single bidder");
      }
      return AuctioneerPolicy::lower_bound_reduction(K, spec.seed);
  }
  throw std::logic_error("unreachable");
}

}  // namespace detail

// Runs the repeated auction game: each round every bidder commits a quantile
// strategy, the auctioneer picks a format after observing the committed
// profile, and feedback flows back through the quantile-utility gradient.
//
// Two feedback modes:
//   expected  no values are sampled; each bidder receives the opponent-
//             weighted average gradient, so the whole run is deterministic
//             and the revenue identity is asserted exactly every round.
//   realized  values are sampled, bids and payments realized, and gradients
//             taken at the realized opponent bids; the identity and revenue
//             functionals are recorded every identity_stride rounds.
inline Trajectory run_game(const GameConfig& config) {
  const int n = static_cast<int>(config.bidders.size());
  const int K = config.K;
  if (n < 1 || K < 1 || config.rounds < 1) {
    throw ConfigError("run_game: need n >= 1, K >= 1, T >= 1");
  }

  std::vector<ValueDistribution> dists;
  std::vector<MetaBidder> bidders;
  dists.reserve(n);
  bidders.reserve(n);
  for (const auto& spec : config.bidders) {
    dists.push_back(spec.dist);
    const double eta =
        spec.learner.eta > 0.0
            ? spec.learner.eta
            : auto_eta(spec.learner.kind, K, config.rounds);
    bidders.emplace_back(Learner::make(spec.learner.kind, K, eta),
                         spec.dist);
  }
  AuctioneerPolicy policy = detail::build_policy(config.auctioneer, n, K);
  Rng value_rng(split_seed(config.seed, 0));

  Trajectory traj;
  traj.seed = config.seed;
  traj.mode = config.mode;
  traj.K = K;
  traj.bidders = n;
  traj.rounds.reserve(static_cast<std::size_t>(config.rounds));
  traj.hindsight.assign(n, HindsightAccumulator(K));
  traj.swap.assign(n, SwapRegretAccumulator(K + 1));

  // Every emitted format must satisfy the format assumptions; distinct
  // formats are validated once.
  std::unordered_map<std::string, bool> validated;
  const auto assert_valid = [&](const AuctionFormat& f) {
    auto [it, inserted] = validated.emplace(f.digest(), false);
    if (inserted) {
      if (!f.validate().passed()) {
        throw std::logic_error("auctioneer emitted an invalid format: " +
                               f.digest());
      }
      it->second = true;
    }
  };

  std::vector<double> xbar(K + 1), pbar(K + 1);
  std::vector<std::vector<double>> rewards(n);
  BidProfile bids(n);
  std::vector<double> alloc(n), pay(n);

  for (long long t = 1; t <= config.rounds; ++t) {
    // (1) bidders commit strategies.
    StrategyProfile profile;
    profile.reserve(n);
    for (auto& b : bidders) {
      b.step();
      profile.push_back(b.pi());
    }
    // (2) the auctioneer chooses a format knowing the committed profile.
    const AuctionFormat format = policy.choose_format(t, profile, dists);
    assert_valid(format);

    RoundRecord rec;
    rec.round = t;
    rec.format = format.digest();
    rec.pi.reserve(n);
    for (int i = 0; i < n; ++i) rec.pi.push_back(profile[i].weights());
    rec.graddot.resize(n);

    const bool log_identity =
        config.mode == FeedbackMode::kExpected ||
        t == 1 || (config.identity_stride > 0 &&
                   t % config.identity_stride == 0);

    const double cond = conditional_revenue(format, profile);
    traj.total_revenue_cond += cond;

    if (config.mode == FeedbackMode::kExpected) {
      rec.revenue_cond = cond;
      for (int i = 0; i < n; ++i) {
        expected_levels(format, profile, i, xbar, pbar);
        rewards[i] =
            quantile_gradient_levels(profile[i], dists[i], xbar, pbar);
        const double utility =
            quantile_utility_levels(profile[i], dists[i], xbar, pbar);
        traj.hindsight[i].add_round(xbar, pbar, utility);
      }
    } else {
      // (3) sample values and realize bids.
      rec.values.resize(n);
      rec.bids.resize(n);
      for (int i = 0; i < n; ++i) {
        rec.values[i] = dists[i].sample(value_rng);
        bids[i] = bidders[i].strategy().bid_of(rec.values[i]);
        rec.bids[i] = bids[i];
      }
      format.allocate(bids, alloc);
      format.payment(bids, pay);
      double realized = 0.0;
      for (double p : pay) realized += p;
      rec.revenue_realized = realized;
      traj.total_revenue_realized += realized;
      if (log_identity) rec.revenue_cond = cond;
      for (int i = 0; i < n; ++i) {
        std::vector<int> opp;
        opp.reserve(n - 1);
        for (int m = 0; m < n; ++m) {
          if (m != i) opp.push_back(bids[m]);
        }
        detail::fill_levels(format, i, opp, xbar, pbar);
        rewards[i] =
            quantile_gradient_levels(profile[i], dists[i], xbar, pbar);
        const double utility =
            quantile_utility_levels(profile[i], dists[i], xbar, pbar);
        traj.hindsight[i].add_round(xbar, pbar, utility);
      }
    }

    if (log_identity) {
      const LemmaCheck chk = check_identity(format, profile, dists);
      rec.revenue_aux = chk.revenue_auxiliary;
      rec.identity_lhs = chk.lhs;
      rec.identity_rhs = chk.rhs;
      if (chk.diff > 1e-9) {
        throw std::logic_error(
            "revenue identity violated at round " + std::to_string(t) +
            ": |lhs - rhs| = " + std::to_string(chk.diff));
      }
    }

    // (4) feed the gradients back.
    for (int i = 0; i < n; ++i) {
      double dot = rewards[i][0];
      for (int k = 0; k <= K; ++k) dot -= rewards[i][k] * profile[i][k];
      rec.graddot[i] = dot;
      traj.swap[i].add(profile[i].weights(), rewards[i]);
      bidders[i].feed_reward(rewards[i]);
    }
    traj.rounds.push_back(std::move(rec));
  }
  return traj;
}

struct SummaryReport {
  double total_revenue = 0.0;
  double mye_per_round = 0.0;
  double mye_total = 0.0;
  double slack = 0.0;  // total_revenue - mye_total
  std::vector<RegretReport> regret;           // per bidder
  std::vector<SwapRegretReport> swap_regret;  // per bidder
  std::uint64_t seed = 0;
  FeedbackMode mode = FeedbackMode::kExpected;
  long long rounds = 0;
};

inline SummaryReport summarize(const Trajectory& traj,
                               std::span<const ValueDistribution> dists) {
  if (traj.rounds.empty()) {
    throw std::invalid_argument("summarize: empty trajectory");
  }
  SummaryReport s;
  s.seed = traj.seed;
  s.mode = traj.mode;
  s.rounds = static_cast<long long>(traj.rounds.size());
  s.total_revenue = traj.headline_revenue();
  s.mye_per_round = myerson_revenue(dists);
  s.mye_total = s.mye_per_round * static_cast<double>(s.rounds);
  s.slack = s.total_revenue - s.mye_total;
  for (int i = 0; i < traj.bidders; ++i) {
    s.regret.push_back(hindsight_regret(traj.hindsight[i], dists[i]));
    s.swap_regret.push_back(traj.swap[i].report());
  }
  return s;
}

// Replays the policy against the logged strategy profiles and checks that it
// reproduces the logged formats: the format at round t must be a function of
// the policy state and the committed profile only.
inline bool replay_formats_match(const GameConfig& config,
                                 const Trajectory& traj) {
  const int n = traj.bidders;
  std::vector<ValueDistribution> dists;
  for (const auto& b : config.bidders) dists.push_back(b.dist);
  AuctioneerPolicy policy =
      detail::build_policy(config.auctioneer, n, traj.K);
  for (const auto& rec : traj.rounds) {
    StrategyProfile profile;
    for (const auto& w : rec.pi) profile.push_back(QuantileStrategy(w));
    const AuctionFormat f = policy.choose_format(rec.round, profile, dists);
    if (f.digest() != rec.format) return false;
  }
  return true;
}

// --------------------------------------------------------------------------
// Flat-file outputs
// --------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// CSV schema: header row, one row per round, columns
//   round, format, revenue_cond, revenue_aux, identity_lhs, identity_rhs,
// then per bidder pi_<i>_<k> for k = 1..K+1 and graddot_<i> (1-based ids).
// Quantities not logged at a round (realized mode off the identity stride)
// are left empty.
inline void write_rounds_csv(const Trajectory& traj, std::ostream& out) {
  out << "round,format,revenue_cond,revenue_aux,identity_lhs,identity_rhs";
  for (int i = 1; i <= traj.bidders; ++i) {
    for (int k = 1; k <= traj.K + 1; ++k) {
      out << ",pi_" << i << "_" << k;
    }
    out << ",graddot_" << i;
  }
  out << "\n";
  for (const auto& rec : traj.rounds) {
    out << rec.round << ',' << rec.format << ','
        << detail::fmt_double(rec.revenue_cond) << ','
        << detail::fmt_double(rec.revenue_aux) << ','
        << detail::fmt_double(rec.identity_lhs) << ','
        << detail::fmt_double(rec.identity_rhs);
    for (int i = 0; i < traj.bidders; ++i) {
      for (double w : rec.pi[i]) out << ',' << detail::fmt_double(w);
      out << ',' << detail::fmt_double(rec.graddot[i]);
    }
    out << "\n";
  }
}

inline void write_rounds_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open rounds CSV for writing: " + path);
  write_rounds_csv(traj, f);
}

// Summary: flat `key = value` lines.
inline void write_summary(const SummaryReport& s, std::ostream& out) {
  char buf[64];
  const auto put = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << key << " = " << buf << "\n";
  };
  put("total_revenue", s.total_revenue);
  put("mye_per_round", s.mye_per_round);
  put("mye_total", s.mye_total);
  put("slack", s.slack);
  for (std::size_t i = 0; i < s.regret.size(); ++i) {
    put("regret_bidder_" + std::to_string(i + 1), s.regret[i].regret);
  }
  for (std::size_t i = 0; i < s.swap_regret.size(); ++i) {
    put("swap_regret_bidder_" + std::to_string(i + 1),
        s.swap_regret[i].swap_regret);
  }
  out << "seed = " << s.seed << "\n";
  out << "mode = " << mode_name(s.mode) << "\n";
}

inline void write_summary(const SummaryReport& s, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open summary for writing: " + path);
  write_summary(s, f);
}

}  // namespace qbid
