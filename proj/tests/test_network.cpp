#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cpl/network.hpp"

namespace {

using cpl::CommLedger;
using cpl::Rng;

TEST(CountWidth, SmallValues) {
  EXPECT_EQ(cpl::ceil_log2(1), 0u);
  EXPECT_EQ(cpl::ceil_log2(2), 1u);
  EXPECT_EQ(cpl::ceil_log2(3), 2u);
  EXPECT_EQ(cpl::ceil_log2(1024), 10u);
  EXPECT_EQ(cpl::ceil_log2(1025), 11u);
  EXPECT_EQ(cpl::count_width(0), 1u);
  EXPECT_EQ(cpl::count_width(2), 2u);
}

TEST(CountWidth, MatchesFloatingLog) {
  for (std::uint64_t x = 1; x < 5000; ++x)
    EXPECT_EQ(cpl::ceil_log2(x), static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(x))))) << x;
}

TEST(Ledger, AllocationOfEightPlayersAt255) {
  CommLedger ledger;
  cpl::charge_allocation_message(ledger, 8, 255, 1);
  // 257 counts need nine bits each.
  EXPECT_EQ(ledger.bits_sent(), 72u);
  EXPECT_EQ(ledger.samples_sent(), 0u);
}

TEST(Ledger, VotesAndSync) {
  CommLedger ledger;
  cpl::charge_test_votes(ledger, 5, 1);
  cpl::charge_boost_sync(ledger, 4, 64, 2);
  EXPECT_EQ(ledger.bits_sent(), 5u + 256u);
  EXPECT_THROW(cpl::charge_boost_sync(ledger, 0, 64, 2), cpl::InvalidArgument);
  EXPECT_THROW(cpl::charge_allocation_message(ledger, 0, 10, 2), cpl::InvalidArgument);
}

TEST(Ledger, CountersAreMonotoneAndPerRoundSumsMatch) {
  Rng rng(1);
  CommLedger ledger;
  std::uint64_t prev_samples = 0, prev_bits = 0;
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t round = ledger.begin_round() % 7;
    switch (rng.below(3)) {
      case 0: cpl::charge_samples(ledger, rng.below(100), round, "s"); break;
      case 1: cpl::charge_test_votes(ledger, rng.below(10), round); break;
      default: cpl::charge_allocation_message(ledger, 1 + rng.below(9), rng.below(1000), round); break;
    }
    EXPECT_GE(ledger.samples_sent(), prev_samples);
    EXPECT_GE(ledger.bits_sent(), prev_bits);
    prev_samples = ledger.samples_sent();
    prev_bits = ledger.bits_sent();
  }
  EXPECT_EQ(ledger.rounds(), 200u);
  std::uint64_t s = 0, b = 0;
  for (const auto& r : ledger.per_round()) {
    s += r.samples;
    b += r.bits;
  }
  EXPECT_EQ(s, ledger.samples_sent());
  EXPECT_EQ(b, ledger.bits_sent());
  EXPECT_EQ(ledger.per_round().size(), 7u);
}

TEST(Multinomial, CountsSumToDrawAndSingleCellTakesAll) {
  Rng rng(2);
  const std::vector<double> one{1.0};
  EXPECT_EQ(cpl::multinomial_allocation(37, one, rng), std::vector<std::uint64_t>{37});
  const auto w = cpl::uniform_weights(5);
  for (std::uint64_t m : {0, 1, 10, 999}) {
    const auto c = cpl::multinomial_allocation(m, w, rng);
    EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::uint64_t{0}), m);
  }
}

TEST(Multinomial, ZeroWeightCellsStayEmpty) {
  Rng rng(3);
  const std::vector<double> w{0.0, 0.5, 0.0, 0.5, 0.0};
  const auto c = cpl::multinomial_allocation(10000, w, rng);
  EXPECT_EQ(c[0] + c[2] + c[4], 0u);
}

TEST(Multinomial, CellMeansMatchWeights) {
  Rng rng(4);
  const std::vector<double> w{0.1, 0.2, 0.3, 0.4};
  const std::uint64_t m = 200000;
  const auto c = cpl::multinomial_allocation(m, w, rng);
  double chi2 = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double expect = w[i] * m;
    chi2 += (c[i] - expect) * (c[i] - expect) / expect;
  }
  EXPECT_LT(chi2, 16.27);  // chi-square(3) upper 0.001 quantile
}

TEST(Multinomial, RejectsBadWeights) {
  Rng rng(5);
  EXPECT_THROW(cpl::multinomial_allocation(1, std::vector<double>{}, rng), cpl::InvalidArgument);
  EXPECT_THROW(cpl::multinomial_allocation(1, std::vector<double>{0.5, 0.4}, rng), cpl::InvalidArgument);
  EXPECT_THROW(cpl::multinomial_allocation(1, std::vector<double>{1.5, -0.5}, rng), cpl::InvalidArgument);
}

}  // namespace
