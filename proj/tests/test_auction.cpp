#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "qbid/auction.hpp"

using namespace qbid;

TEST_CASE("first price: strict winner pays own bid") {
  const auto f = make_standard_format(FormatFamily::kFirstPrice, 2, 2, 0);
  CHECK(f.allocate({1, 2}) == std::vector<double>{0.0, 1.0});
  CHECK(f.payment({1, 2}) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("first price: ties split allocation and expected payment") {
  const auto f = make_standard_format(FormatFamily::kFirstPrice, 2, 2, 0);
  CHECK(f.allocate({1, 1}) == std::vector<double>{0.5, 0.5});
  CHECK(f.payment({1, 1}) == std::vector<double>{0.25, 0.25});
}

TEST_CASE("second price: unmet reserve allocates and charges nothing") {
  const auto f = make_standard_format(FormatFamily::kSecondPrice, 1, 2, 1);
  CHECK(f.allocate({0}) == std::vector<double>{0.0});
  CHECK(f.payment({0}) == std::vector<double>{0.0});
  // Once met, the single bidder pays the reserve level.
  CHECK(f.allocate({2}) == std::vector<double>{1.0});
  CHECK(f.payment({2}) == std::vector<double>{0.5});
}

TEST_CASE("second price: winner pays the highest other bid") {
  const auto f = make_standard_format(FormatFamily::kSecondPrice, 2, 2, 0);
  CHECK(f.payment({1, 2}) == std::vector<double>{0.0, 0.5});
}

TEST_CASE("all pay: everyone pays a nonzero bid") {
  const auto f = make_standard_format(FormatFamily::kAllPay, 2, 2, 0);
  CHECK(f.payment({1, 2}) == std::vector<double>{0.5, 1.0});
  const auto g = make_standard_format(FormatFamily::kAllPay, 2, 2, 1);
  CHECK(g.allocate({0, 0}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("posted price") {
  const auto f = make_standard_format(FormatFamily::kPostedPrice, 1, 2, 1);
  CHECK(f.allocate({2}) == std::vector<double>{1.0});
  CHECK(f.payment({2}) == std::vector<double>{0.5});
  // Two takers split the item and the price.
  const auto g = make_standard_format(FormatFamily::kPostedPrice, 2, 4, 2);
  CHECK(g.allocate({3, 2}) == std::vector<double>{0.5, 0.5});
  CHECK(g.payment({3, 2}) == std::vector<double>{0.25, 0.25});
  // A zero reserve still requires a nonzero bid to take the item.
  const auto h = make_standard_format(FormatFamily::kPostedPrice, 1, 2, 0);
  CHECK(h.allocate({0}) == std::vector<double>{0.0});
}

TEST_CASE("tabular lookup returns the stored entries") {
  // n=1, K=1: rows for bid 0 and bid 1.
  const auto f = AuctionFormat::table(1, 1, {0.25, 0.75}, {0.0, 0.5});
  CHECK(f.allocate({0}) == std::vector<double>{0.25});
  CHECK(f.allocate({1}) == std::vector<double>{0.75});
  CHECK(f.payment({1}) == std::vector<double>{0.5});
  CHECK(f.validate().passed());
}

TEST_CASE("profile dimension mismatches are rejected") {
  const auto f = make_standard_format(FormatFamily::kFirstPrice, 2, 2, 0);
  CHECK_THROWS_AS(f.allocate({1}), std::invalid_argument);
  CHECK_THROWS_AS(f.payment({1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(make_standard_format(FormatFamily::kFirstPrice, 2, 2, 3),
                  std::invalid_argument);
}

TEST_CASE("every standard family passes validation by construction") {
  for (const auto family :
       {FormatFamily::kFirstPrice, FormatFamily::kSecondPrice,
        FormatFamily::kAllPay, FormatFamily::kPostedPrice}) {
    for (int n = 1; n <= 3; ++n) {
      for (int K = 1; K <= 10; K += 3) {
        for (int r = 0; r <= K; r += std::max(1, K / 2)) {
          const auto f = make_standard_format(family, n, K, r);
          const auto rep = f.validate();
          INFO(family_name(family) << " n=" << n << " K=" << K << " r=" << r
                                   << ": " << rep.detail);
          CHECK(rep.passed());
        }
      }
    }
  }
}

TEST_CASE("validation catches planted violations with a witness") {
  const auto base =
      make_standard_format(FormatFamily::kSecondPrice, 2, 2, 1).to_table();

  SECTION("voluntary participation") {
    auto broken = base;
    // p_1(0, b_2 = 2) = 0.1
    broken.table_payment_entry(broken.rank_of_profile({{0, 2}}), 0) = 0.1;
    const auto rep = broken.validate();
    CHECK_FALSE(rep.passed());
    CHECK_FALSE(rep.voluntary);
    CHECK(rep.witness_bidder == 0);
    CHECK(rep.witness == BidProfile{0, 2});
  }

  SECTION("allocation monotonicity") {
    auto broken = base;
    broken.table_allocation_entry(broken.rank_of_profile({{2, 0}}), 0) = 0.1;
    const auto rep = broken.validate();
    CHECK_FALSE(rep.passed());
    CHECK_FALSE(rep.monotone);
  }
}

TEST_CASE("first-price payment identity p_i = x_i * b_i on every profile") {
  for (int n = 1; n <= 3; ++n) {
    const int K = 4;
    const auto f = make_standard_format(FormatFamily::kFirstPrice, n, K, 1);
    std::vector<double> x(n), p(n);
    for_each_profile(n, K, [&](std::span<const int> b) {
      f.allocate(b, x);
      f.payment(b, p);
      for (int i = 0; i < n; ++i) {
        CHECK(p[i] == x[i] * f.bid_level(b[i]));
      }
    });
  }
}

TEST_CASE("symmetric families are permutation equivariant") {
  const int n = 3, K = 3;
  for (const auto family :
       {FormatFamily::kFirstPrice, FormatFamily::kSecondPrice,
        FormatFamily::kAllPay, FormatFamily::kPostedPrice}) {
    const auto f = make_standard_format(family, n, K, 1);
    std::vector<int> perm{2, 0, 1};
    std::vector<double> x(n), p(n), xp(n), pp(n);
    for_each_profile(n, K, [&](std::span<const int> b) {
      BidProfile permuted(n);
      for (int i = 0; i < n; ++i) permuted[i] = b[perm[i]];
      f.allocate(b, x);
      f.payment(b, p);
      f.allocate(permuted, xp);
      f.payment(permuted, pp);
      for (int i = 0; i < n; ++i) {
        CHECK(xp[i] == x[perm[i]]);
        CHECK(pp[i] == p[perm[i]]);
      }
    });
  }
}

TEST_CASE("random monotone formats validate and stay in range") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(3));
    const int K = 1 + static_cast<int>(rng.next_below(5));
    const auto f = make_random_monotone_format(rng, n, K);
    CHECK(f.validate().passed());
  }
}

TEST_CASE("oversized instances are refused, not sampled") {
  CHECK_THROWS_AS(
      make_standard_format(FormatFamily::kFirstPrice, 9, 9, 0).validate(),
      BudgetError);
  CHECK(profile_count(9, 9) > kEnumerationBudget);
}

TEST_CASE("digest distinguishes formats") {
  const auto a = make_standard_format(FormatFamily::kFirstPrice, 2, 2, 0);
  const auto b = make_standard_format(FormatFamily::kFirstPrice, 2, 2, 1);
  CHECK(a.digest() == "first_price:r0");
  CHECK(a.digest() != b.digest());
  const auto ta = a.to_table();
  auto tb = ta;
  tb.table_payment_entry(3, 0) += 0.25;
  CHECK(ta.digest() != tb.digest());
}
