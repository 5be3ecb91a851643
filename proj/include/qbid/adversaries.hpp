#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qbid/analysis.hpp"
#include "qbid/auction.hpp"
#include "qbid/learners.hpp"
#include "qbid/rng.hpp"

namespace qbid {

// Single-bidder format from a binary reward vector r in {0,1}^K: the item is
// allocated iff the bid is nonzero, a zero bid pays zero, and bid i/K pays
// 1 - r_i. Satisfies both format assumptions by construction.
inline AuctionFormat lower_bound_format(std::span<const int> r, int K) {
  if (static_cast<int>(r.size()) != K) {
    throw std::invalid_argument("lower_bound_format: need K binary rewards");
  }
  std::vector<double> alloc(K + 1, 1.0);
  std::vector<double> pay(K + 1, 0.0);
  alloc[0] = 0.0;
  for (int i = 1; i <= K; ++i) {
    if (r[i - 1] != 0 && r[i - 1] != 1) {
      throw std::invalid_argument("lower_bound_format: rewards must be 0/1");
    }
    pay[i] = 1.0 - r[i - 1];
  }
  return AuctionFormat::table(1, K, std::move(alloc), std::move(pay));
}

enum class PolicyKind { kStatic, kMyopicReserve, kLowerBound };

// The auctioneer side of the repeated game. Policies observe the round's
// committed strategy profile before choosing the format (the strongest
// information model the robustness guarantee covers) and only ever emit
// formats that pass validation.
class AuctioneerPolicy {
 public:
  static AuctioneerPolicy fixed(AuctionFormat format) {
    AuctioneerPolicy p;
    p.kind_ = PolicyKind::kStatic;
    p.static_format_ = std::move(format);
    return p;
  }

  // Greedy per-round reserve choice: the reserve index of the given family
  // maximizing this round's conditional revenue against the committed
  // profile, smallest index on ties.
  static AuctioneerPolicy myopic_reserve(FormatFamily family, int n, int K) {
    AuctioneerPolicy p;
    p.kind_ = PolicyKind::kMyopicReserve;
    p.family_ = family;
    p.n_ = n;
    p.K_ = K;
    return p;
  }

  // Single-bidder reduction instance: each round draws r uniformly from
  // {0,1}^K and emits lower_bound_format(r, K).
  static AuctioneerPolicy lower_bound_reduction(int K, std::uint64_t seed) {
    AuctioneerPolicy p;
    p.kind_ = PolicyKind::kLowerBound;
    p.n_ = 1;
    p.K_ = K;
    p.rng_.emplace(seed);
    return p;
  }

  PolicyKind kind() const { return kind_; }

  AuctionFormat choose_format(long long round, const StrategyProfile& observed,
                              std::span<const ValueDistribution> dists) {
    (void)round;
    (void)dists;
    switch (kind_) {
      case PolicyKind::kStatic:
        return *static_format_;
      case PolicyKind::kMyopicReserve: {
        int best_reserve = 0;
        double best_revenue = -1.0;
        for (int r = 0; r <= K_; ++r) {
          const AuctionFormat candidate =
              AuctionFormat::standard(family_, n_, K_, r);
          const double rev = conditional_revenue(candidate, observed);
          if (rev > best_revenue + 1e-15) {
            best_revenue = rev;
            best_reserve = r;
          }
        }
        return AuctionFormat::standard(family_, n_, K_, best_reserve);
      }
      case PolicyKind::kLowerBound: {
        last_rewards_.resize(K_);
        for (int i = 0; i < K_; ++i) {
          last_rewards_[i] = static_cast<int>(rng_->next_below(2));
        }
        return lower_bound_format(last_rewards_, K_);
      }
    }
    throw std::logic_error("unreachable");
  }

  // The binary reward vector behind the most recent lower-bound format.
  const std::vector<int>& last_rewards() const { return last_rewards_; }

 private:
  AuctioneerPolicy() = default;

  PolicyKind kind_ = PolicyKind::kStatic;
  std::optional<AuctionFormat> static_format_;
  FormatFamily family_ = FormatFamily::kFirstPrice;
  int n_ = 1;
  int K_ = 1;
  std::optional<Rng> rng_;
  std::vector<int> last_rewards_;
};

// ---------------------------------------------------------------------------
// Lower-bound reduction harness
// ---------------------------------------------------------------------------

struct ReductionCheck {
  double online_regret = 0.0;   // derived bandit-style algorithm over [K]
  double auction_regret = 0.0;  // bidder regret via the envelope method
  bool formats_valid = true;
  long long rounds = 0;

  bool inequality_holds(double slack = 3.0) const {
    return online_regret <= auction_regret + slack;
  }
};

// Runs a quantile-space learner against the lower-bound auctioneer with the
// prior uniform on [1 - 1/T, 1] and compares two regrets: the regret of the
// induced K-action online algorithm (which plays action 1 with the mass of
// the two lowest bids and action i with the mass of bid i otherwise, and
// earns the binary rewards behind the formats), and the bidder's regret in
// the auction game. The reduction guarantees the former exceeds the latter
// by at most a constant because all values sit within 1/T of 1.
inline ReductionCheck run_lower_bound_reduction(
    int K, long long T, std::uint64_t seed,
    LearnerKind kind = LearnerKind::kMwu) {
  if (K < 1 || T < 2) {
    throw std::invalid_argument("reduction: need K >= 1, T >= 2");
  }
  const auto dist =
      ValueDistribution::uniform(1.0 - 1.0 / static_cast<double>(T), 1.0);
  const std::vector<ValueDistribution> dists = {dist};
  MetaBidder bidder(Learner::make(kind, K, auto_eta(kind, K, T)), dist);
  AuctioneerPolicy policy = AuctioneerPolicy::lower_bound_reduction(K, seed);

  HindsightAccumulator acc(K);
  std::vector<double> x(K + 1), p(K + 1), cum(K, 0.0);
  double earned = 0.0;
  ReductionCheck out;
  out.rounds = T;
  for (long long t = 1; t <= T; ++t) {
    bidder.step();
    const auto& pi = bidder.pi();
    const StrategyProfile profile = {pi};
    const AuctionFormat format = policy.choose_format(t, profile, dists);
    if (!format.validate().passed()) out.formats_valid = false;
    const auto& r = policy.last_rewards();

    double mix = (pi[0] + pi[1]) * r[0];
    for (int i = 2; i <= K; ++i) mix += pi[i] * r[i - 1];
    earned += mix;
    for (int i = 0; i < K; ++i) cum[i] += r[i];

    detail::fill_levels(format, 0, {}, x, p);
    acc.add_round(x, p, quantile_utility_levels(pi, dist, x, p));
    bidder.feed_reward(quantile_gradient_levels(pi, dist, x, p));
  }
  out.online_regret =
      *std::max_element(cum.begin(), cum.end()) - earned;
  out.auction_regret = hindsight_regret(acc, dist).regret;
  return out;
}

// ---------------------------------------------------------------------------
// The high-swap-regret instance for agile OGD
// ---------------------------------------------------------------------------

// Reward sequence over three actions arriving in `beta` identical batches of
// three phases, each `alpha = 100/eta` rounds long:
//   phase 1: (1,1,0)   phase 2: (0,1,0)   phase 3: (0,0,1)
// Requires 1/(2 eta) to be an integer (which makes alpha integral too); the
// horizon is T = 3 * alpha * beta, so beta = eta T / 300 is integral by
// construction.
struct SwapInstance {
  double eta = 0.1;
  long long alpha = 0;
  long long beta = 0;
  long long rounds = 0;  // T = 3 * alpha * beta

  static SwapInstance make(double eta, long long beta) {
    if (!(eta > 0.0) || beta < 1) {
      throw std::invalid_argument("swap instance: need eta > 0, beta >= 1");
    }
    const double half_inv = 1.0 / (2.0 * eta);
    if (std::abs(half_inv - std::round(half_inv)) > 1e-9) {
      throw std::invalid_argument(
          "swap instance: 1/(2*eta) must be an integer (eta = " +
          std::to_string(eta) + " violates it)");
    }
    SwapInstance inst;
    inst.eta = eta;
    inst.alpha = static_cast<long long>(std::round(100.0 / eta));
    inst.beta = beta;
    inst.rounds = 3 * inst.alpha * inst.beta;
    return inst;
  }

  // Reward vector of round t (1-based).
  std::array<double, 3> reward_at(long long t) const {
    const long long in_batch = (t - 1) % (3 * alpha);
    if (in_batch < alpha) return {1.0, 1.0, 0.0};
    if (in_batch < 2 * alpha) return {0.0, 1.0, 0.0};
    return {0.0, 0.0, 1.0};
  }
};

inline std::vector<std::array<double, 3>> swap_instance_rewards(
    const SwapInstance& inst) {
  std::vector<std::array<double, 3>> out(inst.rounds);
  for (long long t = 1; t <= inst.rounds; ++t) {
    out[t - 1] = inst.reward_at(t);
  }
  return out;
}

struct SwapTrajectoryReport {
  bool checkpoints_ok = true;
  long long first_mismatch_round = -1;
  std::string mismatch_detail;
  double per_batch_phase2_contribution = 0.0;  // expected 1/(4 eta) + 1/4
  double proof_phi_value = 0.0;   // swap objective of the proof's mapping
  double measured_swap_regret = 0.0;  // exact maximum over mappings
  std::vector<int> optimal_phi;
  long long rounds = 0;
};

// Runs agile OGD with the instance's step size and checks the closed-form
// trajectory: (1/2,1/2,0) from update 3/(2 eta) of each phase 1 onward,
// (0,1,0) from update 1/eta of each phase 2 onward, (0,0,1) at each batch
// end, and a per-batch phase-2 contribution of 1/(4 eta) + 1/4 to the swap
// objective. `check_batches` limits how many batches are checkpointed; the
// swap regret is always measured over the full horizon.
inline SwapTrajectoryReport verify_swap_trajectory(double eta, long long beta,
                                                   long long check_batches = -1,
                                                   double tolerance = 1e-9) {
  const SwapInstance inst = SwapInstance::make(eta, beta);
  if (check_batches < 0) check_batches = inst.beta;

  Learner learner = Learner::agile_ogd(2, eta);
  SwapRegretAccumulator swap_acc(3);
  SwapTrajectoryReport rep;
  rep.rounds = inst.rounds;

  const long long settle1 = static_cast<long long>(std::round(1.5 / eta));
  const long long settle2 = static_cast<long long>(std::round(1.0 / eta));
  const auto expect = [&](long long t, const QuantileStrategy& pi, double a,
                          double b, double c, const char* where) {
    if (!rep.checkpoints_ok) return;
    if (std::abs(pi[0] - a) > tolerance || std::abs(pi[1] - b) > tolerance ||
        std::abs(pi[2] - c) > tolerance) {
      rep.checkpoints_ok = false;
      rep.first_mismatch_round = t;
      rep.mismatch_detail = where;
    }
  };

  double batch_phase2_sum = 0.0;
  double proof_phi = 0.0;
  for (long long t = 1; t <= inst.rounds; ++t) {
    const QuantileStrategy pi = learner.next();
    const auto r = inst.reward_at(t);
    swap_acc.add(pi.weights(), r);
    // The proof's mapping sends action 1 to action 2 and fixes the rest, so
    // only pi_1 (r_2 - r_1), i.e. phase 2, contributes.
    proof_phi += pi[0] * (r[1] - r[0]);

    const long long batch = (t - 1) / (3 * inst.alpha);
    const long long in_batch = (t - 1) % (3 * inst.alpha);
    if (batch < check_batches) {
      // The first batch starts from the uniform vector instead of (0,0,1)
      // but settles even earlier, so the same checkpoint applies.
      if (in_batch >= settle1 && in_batch < inst.alpha) {
        expect(t, pi, 0.5, 0.5, 0.0, "phase 1 steady state");
      }
      if (in_batch == inst.alpha) {
        expect(t, pi, 0.5, 0.5, 0.0, "phase 2 start");
        batch_phase2_sum = 0.0;
      }
      if (in_batch >= inst.alpha && in_batch < 2 * inst.alpha) {
        batch_phase2_sum += pi[0];
        if (in_batch >= inst.alpha + settle2) {
          expect(t, pi, 0.0, 1.0, 0.0, "phase 2 steady state");
        }
      }
      if (in_batch == 2 * inst.alpha - 1 && rep.checkpoints_ok) {
        const double want = 0.25 / eta + 0.25;
        rep.per_batch_phase2_contribution = batch_phase2_sum;
        if (std::abs(batch_phase2_sum - want) > tolerance) {
          rep.checkpoints_ok = false;
          rep.first_mismatch_round = t;
          rep.mismatch_detail = "per-batch phase 2 contribution";
        }
      }
      if (in_batch == 3 * inst.alpha - 1) {
        // After this update the batch ends; checked at the next round start.
      }
      if (in_batch == 0 && batch >= 1) {
        expect(t, pi, 0.0, 0.0, 1.0, "batch start");
      }
    }
    learner.update(r);
  }

  rep.proof_phi_value = proof_phi;
  const SwapRegretReport swap = swap_acc.report();
  rep.measured_swap_regret = swap.swap_regret;
  rep.optimal_phi = swap.phi;
  return rep;
}

}  // namespace qbid
