#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "cpl/rng.hpp"

namespace {

using cpl::Purpose;
using cpl::Rng;
using cpl::Streams;

TEST(Rng, SeedDerivationIsDeterministicAndTagSensitive) {
  EXPECT_EQ(cpl::derive_seed(1, {2, 3}), cpl::derive_seed(1, {2, 3}));
  EXPECT_NE(cpl::derive_seed(1, {2, 3}), cpl::derive_seed(1, {3, 2}));
  EXPECT_NE(cpl::derive_seed(1, {2, 3}), cpl::derive_seed(2, {2, 3}));
  EXPECT_NE(cpl::derive_seed(1, {2}), cpl::derive_seed(1, {2, 0}));
}

TEST(Rng, Uniform01StaysInUnitIntervalWithMeanHalf) {
  Rng rng(42);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // sd of the mean is sqrt(1/12 / n)
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Rng, BelowIsUnbiasedOverSmallRange) {
  Rng rng(7);
  const int n = 70000, cells = 7;
  std::vector<int> count(cells, 0);
  for (int i = 0; i < n; ++i) {
    const auto v = rng.below(cells);
    ASSERT_LT(v, static_cast<std::uint64_t>(cells));
    ++count[v];
  }
  double chi2 = 0.0;
  for (int c : count) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  EXPECT_LT(chi2, 22.46);  // chi-square(6) upper 0.001 quantile
}

TEST(Rng, PickCumulativeFollowsWeights) {
  Rng rng(11);
  const std::vector<double> cum{0.1, 0.1, 0.6, 1.0};  // second cell has zero weight
  std::vector<int> count(4, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++count[rng.pick_cumulative(cum)];
  EXPECT_EQ(count[1], 0);
  EXPECT_NEAR(count[0] / double(n), 0.1, 0.006);
  EXPECT_NEAR(count[2] / double(n), 0.5, 0.006);
  EXPECT_NEAR(count[3] / double(n), 0.4, 0.006);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(3);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  rng.shuffle(std::span<int>(w));
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(Streams, SameCoordinatesGiveSameStream) {
  const Streams s(99);
  Rng a = s.player(3, 2, Purpose::Test), b = s.player(3, 2, Purpose::Test);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Streams, DistinctCoordinatesGiveDistinctStreams) {
  const Streams s(99);
  std::set<std::uint64_t> firsts;
  for (std::uint64_t p = 0; p < 4; ++p)
    for (std::uint64_t r = 0; r < 4; ++r)
      for (auto purpose : {Purpose::MixtureDraw, Purpose::Test, Purpose::Reservoir}) firsts.insert(s.player(p, r, purpose).next_u64());
  firsts.insert(s.center(0, Purpose::Allocation).next_u64());
  firsts.insert(s.child(0).player(0, 0, Purpose::Test).next_u64());
  EXPECT_EQ(firsts.size(), 4u * 4u * 3u + 2u);
}

TEST(Streams, TrialSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t t = 0; t < 10000; ++t) seeds.insert(cpl::trial_seed(5, t));
  EXPECT_EQ(seeds.size(), 10000u);
}

}  // namespace
