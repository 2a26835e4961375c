#include "wcmfb/subsampling.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

namespace wcmfb {
namespace {

// Largest S for which no multiple of 1/(2S) falls strictly inside (fL, fU),
// found by exhaustive search.
int brute_force_ratio(double f_lower, double f_upper) {
  int best = 1;
  const int limit = static_cast<int>(std::floor(0.5 / (f_upper - f_lower))) + 1;
  for (int s = 1; s <= limit; ++s) {
    bool clean = true;
    for (int j = 1; j < 2 * s; ++j) {
      const double edge = j / (2.0 * s);
      if (edge > f_lower && edge < f_upper) {
        clean = false;
        break;
      }
    }
    if (clean) best = s;
  }
  return best;
}

TEST(SelectAll, FlagshipRatios) {
  const std::vector<int> expected{40, 27, 20, 15, 12, 21, 18, 15, 13, 12, 10,
                                  9,  7,  6,  5,  5,  4,  3,  1,  1,  2,  3};
  EXPECT_EQ(select_all(22, WarpCoefficient(0.5783)), expected);
}

TEST(SelectAll, UnwarpedFourChannels) {
  EXPECT_EQ(select_all(4, WarpCoefficient(0.0)), (std::vector<int>{2, 1, 1, 2}));
}

TEST(SelectBand, FlagshipChannelThree) {
  const ChannelBand b = select_band(3, 22, WarpCoefficient(0.5783));
  EXPECT_NEAR(b.f_lower, 0.0122, 5e-4);
  EXPECT_NEAR(b.f_upper, 0.0316, 5e-4);
  EXPECT_EQ(b.n_k, 1);
  EXPECT_EQ(b.s_k, 15);
}

TEST(WarpedBand, OuterChannelsUseBandEdges) {
  const WarpCoefficient a(0.5783);
  EXPECT_EQ(warped_band(0, 22, a).f_lower, 0.0);
  EXPECT_EQ(warped_band(20, 22, a).f_upper, 0.5);
  EXPECT_EQ(warped_band(21, 22, a).f_upper, 0.5);
  EXPECT_LT(warped_band(19, 22, a).f_upper, 0.5);
  EXPECT_THROW(warped_band(22, 22, a), std::out_of_range);
  EXPECT_THROW(warped_band(-1, 22, a), std::out_of_range);
}

TEST(EdgeSets, WarpedEdgesAreMonotone) {
  const auto sets = edge_sets(22, WarpCoefficient(0.5783));
  ASSERT_EQ(sets.uniform_edges.size(), 23u);
  EXPECT_EQ(sets.warped_edges.front(), 0.0);
  EXPECT_NEAR(sets.warped_edges.back(), kPi, 1e-12);
  for (std::size_t i = 1; i < sets.warped_edges.size(); ++i) {
    EXPECT_GT(sets.warped_edges[i], sets.warped_edges[i - 1]);
    EXPECT_LT(sets.warped_edges[i], sets.uniform_edges[i] + 1e-12);
  }
}

TEST(SelectRatio, BandpassExamples) {
  EXPECT_EQ(select_ratio(0.0, 0.25), (RatioChoice{2, 1}));
  EXPECT_EQ(select_ratio(0.25, 0.5), (RatioChoice{2, 2}));
  EXPECT_EQ(select_ratio(0.0, 0.5), (RatioChoice{1, 1}));
  EXPECT_THROW(select_ratio(0.3, 0.3), std::invalid_argument);
  EXPECT_THROW(select_ratio(-0.1, 0.3), std::invalid_argument);
  EXPECT_THROW(select_ratio(0.1, 0.6), std::invalid_argument);
}

TEST(SelectRatio, MatchesExhaustiveSearch) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int trial = 0; trial < 2000; ++trial) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-3) continue;
    if (trial % 10 == 0) a = 0.0;
    const RatioChoice c = select_ratio(a, b);
    ASSERT_EQ(c.s_k, brute_force_ratio(a, b)) << a << " " << b;
    // The chosen n must certify the choice.
    EXPECT_LE(c.s_k, c.n_k / (2.0 * b) + 1e-12);
    if (c.n_k > 1) {
      EXPECT_GE(c.s_k, (c.n_k - 1) / (2.0 * a) - 1e-12);
    }
  }
}

TEST(SelectAll, InvariantsOverCoefficients) {
  for (int m : {2, 4, 8, 22}) {
    for (double a : {-0.5, 0.0, 0.3, 0.5783, 0.8}) {
      const auto bands = select_bands(m, WarpCoefficient(a));
      ASSERT_EQ(static_cast<int>(bands.size()), m);
      for (const auto& b : bands) {
        EXPECT_GE(b.s_k, 1);
        EXPECT_GE(b.n_k, 1);
        EXPECT_EQ(b.s_k, brute_force_ratio(b.f_lower, b.f_upper));
      }
    }
  }
}

TEST(SelectAll, FlagshipIsFast) {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 100; ++i) (void)select_all(22, WarpCoefficient(0.5783));
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_LT(std::chrono::duration<double>(elapsed).count(), 1.0);
}

}  // namespace
}  // namespace wcmfb
