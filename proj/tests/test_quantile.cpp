#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "qbid/analysis.hpp"
#include "qbid/quantile.hpp"

using namespace qbid;

namespace {

const auto kUniform = ValueDistribution::uniform(0.0, 1.0);

AuctionFormat null_auction(int K) {
  return AuctionFormat::table(1, K, std::vector<double>(K + 1, 0.0),
                              std::vector<double>(K + 1, 0.0));
}

}  // namespace

TEST_CASE("quantile strategy renormalizes drift and rejects junk") {
  const QuantileStrategy pi({0.5 + 2e-10, 0.25, 0.25});
  CHECK(pi.weights()[0] + pi.weights()[1] + pi.weights()[2] == 1.0);
  CHECK_THROWS_AS(QuantileStrategy({0.5, 0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(QuantileStrategy({1.5, -0.5}), std::invalid_argument);
  CHECK(QuantileStrategy::basis_e(2).weights() ==
        std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("induce_strategy places thresholds at inverse-cdf partial sums") {
  const auto s =
      induce_strategy(QuantileStrategy({0.5, 0.25, 0.25}), kUniform);
  CHECK(s.thresholds == std::vector<double>{0.5, 0.75, 1.0});

  const auto e = induce_strategy(QuantileStrategy::basis_e(2), kUniform);
  CHECK(e.thresholds[0] == 1.0);
  for (double v : {0.0, 0.3, 0.99, 1.0}) CHECK(e.bid_of(v) == 0);

  const auto narrow = induce_strategy(
      QuantileStrategy({0.5, 0.5}), ValueDistribution::uniform(0.99, 1.0));
  CHECK(narrow.thresholds[0] == Catch::Approx(0.995));
  CHECK(narrow.thresholds[1] == 1.0);
}

TEST_CASE("bid_of follows the closed-left interval convention") {
  MonotoneBiddingStrategy s{2, {0.5, 0.75, 1.0}};
  CHECK(s.bid_of(0.5) == 0);
  CHECK(s.bid_of(0.7) == 1);
  CHECK(s.bid_of(0.75) == 1);
  CHECK(s.bid_of(0.76) == 2);
  CHECK(s.bid_of(0.0) == 0);
  CHECK(s.bid_of(1.0) == 2);
}

TEST_CASE("bid_of is non-decreasing in the value") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dist = make_random_prior(rng);
    const auto s =
        induce_strategy(make_random_simplex_point(rng, 4), dist);
    int prev = 0;
    for (int i = 0; i <= 500; ++i) {
      const int b = s.bid_of(i / 500.0);
      CHECK(b >= prev);
      prev = b;
    }
  }
}

TEST_CASE("quantile utility: single-bidder first price closed form") {
  const auto f = make_standard_format(FormatFamily::kFirstPrice, 1, 2, 0);
  const QuantileStrategy pi({0.5, 0.25, 0.25});
  // x == 1 everywhere, so utility = E[v] - sum_k pi_k * bid_k.
  CHECK(quantile_utility(pi, kUniform, f, 0, {}) ==
        Catch::Approx(0.125).margin(1e-15));
}

TEST_CASE("bidding zero under voluntary participation earns x(0) * E[v]") {
  const auto e = QuantileStrategy::basis_e(2);
  const auto reserved =
      make_standard_format(FormatFamily::kFirstPrice, 1, 2, 1);
  CHECK(quantile_utility(e, kUniform, reserved, 0, {}) == 0.0);
  // A format that allocates 1/4 to a zero bid and charges nothing.
  const auto f =
      AuctionFormat::table(1, 1, {0.25, 1.0}, {0.0, 0.1});
  CHECK(quantile_utility(QuantileStrategy::basis_e(1), kUniform, f, 0, {}) ==
        Catch::Approx(0.25 * 0.5).margin(1e-15));
}

TEST_CASE("quantile utility matches a Monte Carlo of the induced strategy") {
  Rng rng(1234);
  const auto f = make_standard_format(FormatFamily::kSecondPrice, 2, 3, 1);
  const QuantileStrategy pi({0.4, 0.3, 0.2, 0.1});
  const auto dist = ValueDistribution::truncated_exponential(1.5);
  const std::vector<int> opp = {2};
  const double closed = quantile_utility(pi, dist, f, 0, opp);

  const auto s = induce_strategy(pi, dist);
  const int n = 1'000'000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = dist.sample(rng);
    const int b = s.bid_of(v);
    const double u = f.allocation_of(0, b, opp) * v - f.payment_of(0, b, opp);
    sum += u;
    sum_sq += u * u;
  }
  const double mean = sum / n;
  const double se =
      std::sqrt((sum_sq / n - mean * mean) / static_cast<double>(n - 1));
  CHECK(std::abs(mean - closed) <= 3.0 * se + 1e-12);
}

TEST_CASE("gradient of the single-bidder first price auction") {
  const auto f = make_standard_format(FormatFamily::kFirstPrice, 1, 2, 0);
  // x == 1 at every bid, so allocation differences vanish and coordinate k
  // is 1 - (k-1)/K regardless of pi.
  for (const auto& pi :
       {QuantileStrategy({0.5, 0.25, 0.25}), QuantileStrategy::uniform(2)}) {
    const auto g = quantile_gradient(pi, kUniform, f, 0, {});
    CHECK(g == std::vector<double>{1.0, 0.5, 0.0});
  }
}

TEST_CASE("null auction has zero gradient") {
  const auto g = quantile_gradient(QuantileStrategy::uniform(3), kUniform,
                                   null_auction(3), 0, {});
  CHECK(g == std::vector<double>(4, 0.0));
}

TEST_CASE("gradient matches directional finite differences") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(3));
    const int K = 1 + static_cast<int>(rng.next_below(4));
    const auto f = make_random_monotone_format(rng, n, K);
    // Smooth priors keep the central difference at full accuracy.
    const auto dist = rng.next_below(2) == 0
                          ? ValueDistribution::uniform(
                                0.3 * rng.next_double(),
                                0.7 + 0.3 * rng.next_double())
                          : ValueDistribution::truncated_exponential(
                                0.5 + 2.0 * rng.next_double());
    const auto pi = make_random_simplex_point(rng, K, 1e-3);
    std::vector<int> opp(n - 1);
    for (int& b : opp) b = static_cast<int>(rng.next_below(K + 1));

    // Random tangent direction (coordinates sum to zero, |.|_inf = 1).
    std::vector<double> d(K + 1);
    double mean = 0.0;
    for (double& v : d) mean += (v = rng.next_double());
    mean /= (K + 1);
    double norm = 0.0;
    for (double& v : d) norm = std::max(norm, std::abs(v -= mean));
    for (double& v : d) v /= norm;

    const double h = 1e-5;
    std::vector<double> up(K + 1), down(K + 1);
    for (int k = 0; k <= K; ++k) {
      up[k] = pi[k] + h * d[k];
      down[k] = pi[k] - h * d[k];
    }
    const double fd = (quantile_utility(QuantileStrategy(up), dist, f, 0, opp) -
                       quantile_utility(QuantileStrategy(down), dist, f, 0,
                                        opp)) /
                      (2.0 * h);
    const auto g = quantile_gradient(pi, dist, f, 0, opp);
    const double analytic =
        std::inner_product(g.begin(), g.end(), d.begin(), 0.0);
    CHECK(fd == Catch::Approx(analytic).margin(1e-6));
  }
}

TEST_CASE("gradient coordinates stay in [-1,1] on validated formats") {
  Rng rng(5150);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(3));
    const int K = 1 + static_cast<int>(rng.next_below(5));
    const auto f = make_random_monotone_format(rng, n, K);
    const auto dist = make_random_prior(rng);
    const auto pi = make_random_simplex_point(rng, K);
    std::vector<int> opp(n - 1);
    for (int& b : opp) b = static_cast<int>(rng.next_below(K + 1));
    const auto g = quantile_gradient(pi, dist, f, 0, opp);
    for (double v : g) {
      CHECK(v >= -1.0 - 1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("top gradient coordinate telescopes to x(1) - p(1) exactly") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 1 + static_cast<int>(rng.next_below(5));
    const auto f = make_random_monotone_format(rng, 1, K);
    const auto pi = make_random_simplex_point(rng, K);
    const auto g = quantile_gradient(pi, kUniform, f, 0, {});
    CHECK(g[K] ==
          f.allocation_of(0, K, {}) - f.payment_of(0, K, {}));
  }
}

TEST_CASE("bid-zero coordinate carries no payment under voluntary "
          "participation") {
  Rng rng(100);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 1 + static_cast<int>(rng.next_below(5));
    const auto f = make_random_monotone_format(rng, 1, K);
    const auto pi = make_random_simplex_point(rng, K);
    const auto tau = pi.partial_sums();
    const auto g = quantile_gradient(pi, kUniform, f, 0, {});
    // Recompute coordinate 0 with the payment term dropped; they must agree
    // because p(0) = 0 for any format passing validation.
    double expected = f.allocation_of(0, K, {});
    for (int j = 0; j < K; ++j) {
      expected += (f.allocation_of(0, j, {}) - f.allocation_of(0, j + 1, {})) *
                  kUniform.quantile(tau[j]);
    }
    CHECK(g[0] == Catch::Approx(expected).margin(1e-15));
  }
}

TEST_CASE("quantile utility is concave on validated formats") {
  Rng rng(321);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(2));
    const int K = 1 + static_cast<int>(rng.next_below(4));
    const auto f = make_random_monotone_format(rng, n, K);
    const auto dist = make_random_prior(rng);
    std::vector<int> opp(n - 1);
    for (int& b : opp) b = static_cast<int>(rng.next_below(K + 1));
    const auto a = make_random_simplex_point(rng, K);
    const auto b = make_random_simplex_point(rng, K);
    std::vector<double> mid(K + 1);
    for (int k = 0; k <= K; ++k) mid[k] = 0.5 * (a[k] + b[k]);
    const double qa = quantile_utility(a, dist, f, 0, opp);
    const double qb = quantile_utility(b, dist, f, 0, opp);
    const double qm =
        quantile_utility(QuantileStrategy(mid), dist, f, 0, opp);
    CHECK(qm >= 0.5 * (qa + qb) - 1e-9);
  }
}

TEST_CASE("strategy_to_quantile inverts induce_strategy") {
  const auto pi = strategy_to_quantile(
      MonotoneBiddingStrategy{2, {0.5, 0.75, 1.0}}, kUniform);
  CHECK(pi.weights() == std::vector<double>{0.5, 0.25, 0.25});

  const auto e = strategy_to_quantile(
      MonotoneBiddingStrategy{2, {1.0, 1.0, 1.0}}, kUniform);
  CHECK(e.weights() == QuantileStrategy::basis_e(2).weights());
}

TEST_CASE("round-tripped strategies have identical utilities") {
  Rng rng(2025);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = 1 + static_cast<int>(rng.next_below(4));
    const auto f = make_random_monotone_format(rng, 1, K);
    const auto dist = make_random_prior(rng);
    const auto pi = make_random_simplex_point(rng, K);
    const auto round_tripped =
        strategy_to_quantile(induce_strategy(pi, dist), dist);
    const double direct = quantile_utility(pi, dist, f, 0, {});
    const double again = quantile_utility(round_tripped, dist, f, 0, {});
    CHECK(direct == Catch::Approx(again).margin(1e-9));
  }
}
