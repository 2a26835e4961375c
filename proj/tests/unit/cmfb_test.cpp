#include "wcmfb/cmfb.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "wcmfb/optimizer.hpp"

namespace wcmfb {
namespace {

PrototypeHalf random_prototype(std::mt19937_64& rng, int n, int m) {
  const auto v = oracle::random_vector(rng, n / 2);
  return PrototypeHalf(Eigen::Map<const Vector>(v.data(), n / 2), n, m);
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

TEST(PrototypeHalf, RejectsBadOrder) {
  EXPECT_THROW(PrototypeHalf(Vector::Zero(5), 10, 2), std::invalid_argument);   // 10 % 4 != 0
  EXPECT_THROW(PrototypeHalf(Vector::Zero(3), 8, 2), std::invalid_argument);    // wrong half length
  EXPECT_THROW(PrototypeHalf(Vector::Zero(4), 8, 0), std::invalid_argument);
  EXPECT_NO_THROW(PrototypeHalf(Vector::Zero(88), 176, 22));
}

TEST(PrototypeHalf, FullIsSymmetricExtension) {
  std::mt19937_64 rng(1);
  const auto p = random_prototype(rng, 24, 3);
  const Vector h = p.full();
  for (int n = 0; n < 24; ++n) EXPECT_EQ(h[n], h[23 - n]);
  EXPECT_EQ(h.tail(12), p.coeffs());
  EXPECT_EQ(PrototypeHalf::from_full(h, 3).coeffs(), p.coeffs());
}

TEST(Modulate, TwoChannelRectangle) {
  const PrototypeHalf p(Vector::Constant(2, 0.25), 4, 2);
  const auto f = modulate(p);
  EXPECT_NEAR(f.analysis(0, 0), 0.5 * std::cos(-kPi / 8.0), 1e-15);
}

TEST(Modulate, SingleChannelFormula) {
  Vector half = Vector::Zero(2);
  half[0] = 0.7;
  const PrototypeHalf p(half, 4, 1);
  const Vector h = p.full();
  const auto f = modulate(p);
  for (int n = 0; n < 4; ++n) {
    EXPECT_NEAR(f.analysis(0, n), 2.0 * h[n] * std::cos(kPi * (n - 1.5) / 2.0 + kPi / 4.0), 1e-15);
  }
}

TEST(Modulate, MatchesCosineFormulaAndTimeReversal) {
  std::mt19937_64 rng(2);
  for (int m : {1, 2, 5, 8}) {
    const int n = 4 * m;
    const auto p = random_prototype(rng, n, m);
    const auto f = modulate(p);
    const auto h = to_std(p.full());
    for (int k = 0; k < m; ++k) {
      const auto hk = oracle::modulated(h, k, m, false);
      const auto fk = oracle::modulated(h, k, m, true);
      for (int i = 0; i < n; ++i) {
        EXPECT_NEAR(f.analysis(k, i), hk[i], 1e-14);
        EXPECT_NEAR(f.synthesis(k, i), fk[i], 1e-14);
        EXPECT_NEAR(f.synthesis(k, i) - f.analysis(k, n - 1 - i), 0.0, 1e-14);
      }
    }
  }
}

TEST(ModulationConstants, UnitModulus) {
  for (int k = 0; k < 22; ++k) {
    const auto mc = ModulationConstants::of(k, 176, 22);
    EXPECT_NEAR(std::abs(mc.a), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(mc.b), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(mc.w2m), 1.0, 1e-15);
  }
}

TEST(CosineBasis, Examples) {
  EXPECT_EQ(cosine_basis(0.0, 4), Vector::Constant(2, 2.0));
  const Vector at_pi = cosine_basis(kPi, 4);
  EXPECT_NEAR(at_pi[0], 0.0, 1e-15);
  EXPECT_NEAR(at_pi[1], 0.0, 1e-15);
  const Vector c = cosine_basis(1.0, 8);
  const double expected[] = {2 * std::cos(0.5), 2 * std::cos(1.5), 2 * std::cos(2.5), 2 * std::cos(3.5)};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(c[i], expected[i], 1e-15);
  EXPECT_THROW(cosine_basis(1.0, 7), std::invalid_argument);
}

TEST(PrototypeResponse, DcGainAndRectangleNull) {
  std::mt19937_64 rng(3);
  const auto p = random_prototype(rng, 16, 2);
  const complex dc = prototype_response(p, 0.0);
  EXPECT_NEAR(dc.real(), p.full().sum(), 1e-13);
  EXPECT_NEAR(dc.imag(), 0.0, 1e-15);
  const PrototypeHalf rect(Vector::Constant(2, 0.25), 4, 2);
  EXPECT_NEAR(std::abs(prototype_response(rect, kPi)), 0.0, 1e-15);
}

TEST(PrototypeResponse, MatchesDirectSummation) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> freq(-4.0, 4.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_prototype(rng, 32, 4);
    const auto h = to_std(p.full());
    for (double w : {1.1, freq(rng), freq(rng)}) {
      const complex got = prototype_response(p, w);
      EXPECT_LT(std::abs(got - oracle::dtft(h, w)), 1e-12);
      EXPECT_NEAR(std::abs(got), std::abs(prototype_response(p, -w)), 1e-12);
    }
  }
}

TEST(ChannelResponse, UnwarpedEqualsDirectDft) {
  std::mt19937_64 rng(5);
  for (int m : {2, 4, 8}) {
    const auto p = random_prototype(rng, 2 * m * 2, m);
    const auto h = to_std(p.full());
    for (int k = 0; k < m; ++k) {
      const auto hk = oracle::modulated(h, k, m, false);
      for (double w : {0.0, 0.4, 1.3, 2.9, kPi}) {
        EXPECT_LT(std::abs(channel_response_warped(p, k, w, WarpCoefficient(0.0)) - oracle::dtft(hk, w)),
                  1e-10);
      }
    }
  }
}

TEST(ChannelResponse, WarpedEqualsPowersOfAllpass) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> freq(0.0, kPi);
  std::uniform_real_distribution<double> coef(-0.9, 0.9);
  const int sizes[] = {2, 4, 8};
  for (int trial = 0; trial < 20; ++trial) {
    const int m = sizes[trial % 3];
    const int n = 2 * m * (1 + trial % 3);
    const auto p = random_prototype(rng, n, m);
    const double a = trial < 3 ? 0.5 : coef(rng);
    const auto h = to_std(p.full());
    for (int i = 0; i < 64; ++i) {
      const double w = freq(rng);
      const int k = i % m;
      const auto hk = oracle::modulated(h, k, m, false);
      const auto fk = oracle::modulated(h, k, m, true);
      const complex ref_h = oracle::warped_fir(hk, w, a);
      const complex ref_f = oracle::warped_fir(fk, w, a);
      ASSERT_LT(std::abs(channel_response_warped(p, k, w, WarpCoefficient(a)) - ref_h), 1e-9);
      ASSERT_LT(std::abs(channel_response_warped(p, k, w, WarpCoefficient(a), FilterSide::synthesis) - ref_f),
                1e-9);
    }
  }
}

TEST(ChannelResponse, ConjugateSymmetry) {
  std::mt19937_64 rng(7);
  const auto p = random_prototype(rng, 32, 4);
  for (int k = 0; k < 4; ++k) {
    for (double w : {0.2, 1.0, 2.5}) {
      const complex pos = channel_response_warped(p, k, w, WarpCoefficient(0.4));
      const complex neg = channel_response_warped(p, k, -w, WarpCoefficient(0.4));
      EXPECT_LT(std::abs(neg - std::conj(pos)), 1e-12);
    }
  }
}

TEST(ChannelResponse, PeaksNearWarpedCenter) {
  const int m = 4;
  const WarpCoefficient a(0.5783);
  const auto p = initial_prototype(64, m);
  for (int k = 0; k < m; ++k) {
    double peak = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      peak = std::max(peak, std::abs(channel_response_warped(p, k, kPi * i / 4000.0, a)));
    }
    const double center = warp_inverse((k + 0.5) * kPi / m, a);
    const double at_center = std::abs(channel_response_warped(p, k, center, a));
    EXPECT_GT(20.0 * std::log10(at_center / peak), -1.0) << "channel " << k;
  }
}

TEST(ChannelResponse, ChannelIndexChecked) {
  const PrototypeHalf p(Vector::Constant(4, 0.1), 8, 2);
  EXPECT_THROW(channel_response_warped(p, 2, 0.1, WarpCoefficient(0.2)), std::out_of_range);
  EXPECT_THROW(channel_response_warped(p, -1, 0.1, WarpCoefficient(0.2)), std::out_of_range);
}

}  // namespace
}  // namespace wcmfb
