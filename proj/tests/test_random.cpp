#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "levypide/random.hpp"
#include "levypide/stats.hpp"

using namespace levypide;

// Known-answer vectors published with Random123.
TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NoiseStream, SameAddressSameDraws) {
  const NoiseStream a(42, 7), b(42, 7);
  for (std::uint64_t step : {0ull, 1ull, 1000ull}) {
    auto sa = a.step(step);
    auto sb = b.step(step);
    for (int i = 0; i < 20; ++i) {
      EXPECT_EQ(sa.uniform(), sb.uniform());
      EXPECT_EQ(sa.normal(), sb.normal());
    }
  }
}

TEST(NoiseStream, AddressesDiffer) {
  std::set<double> seen;
  for (std::uint64_t seed : {1ull, 2ull}) {
    for (std::uint64_t stream : {0ull, 1ull}) {
      for (std::uint64_t step : {0ull, 1ull}) {
        auto s = NoiseStream(seed, stream).step(step);
        seen.insert(s.uniform());
      }
    }
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(NoiseStream, UniformOpenInterval) {
  auto s = NoiseStream(3, 0).step(0);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(NoiseStream, MomentsOfDistributions) {
  const int n = 200000;
  std::vector<double> u(n), z(n), e(n), p(n);
  for (int i = 0; i < n; ++i) {
    auto s = NoiseStream(9, i).step(0);
    u[i] = s.uniform();
    z[i] = s.normal();
    e[i] = s.exponential();
    p[i] = static_cast<double>(s.poisson(3.5));
  }
  const auto su = summarize(u), sz = summarize(z), se = summarize(e), sp = summarize(p);
  EXPECT_NEAR(su.mean, 0.5, 4 * su.std_error);
  EXPECT_NEAR(sz.mean, 0.0, 4 * sz.std_error);
  EXPECT_NEAR(se.mean, 1.0, 4 * se.std_error);
  EXPECT_NEAR(sp.mean, 3.5, 4 * sp.std_error);
  double z2 = 0.0;
  for (double v : z) z2 += v * v;
  EXPECT_NEAR(z2 / n, 1.0, 0.02);
}

TEST(NoiseStream, PoissonLargeMean) {
  const int n = 50000;
  std::vector<double> p(n);
  for (int i = 0; i < n; ++i) p[i] = static_cast<double>(NoiseStream(4, i).step(2).poisson(250.0));
  const auto s = summarize(p);
  EXPECT_NEAR(s.mean, 250.0, 4 * s.std_error);
  EXPECT_NEAR(s.std_error * std::sqrt(static_cast<double>(n)), std::sqrt(250.0), 0.5);
}

TEST(Stats, KolmogorovSmirnov) {
  const std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 4}, c{10, 11, 12, 13};
  EXPECT_DOUBLE_EQ(ks_statistic(a, b), 0.0);
  EXPECT_DOUBLE_EQ(ks_statistic(a, c), 1.0);
  // c(0.01) = 1.6276
  EXPECT_NEAR(ks_critical_value(10000, 10000, 0.01), 1.6276 * std::sqrt(2.0 / 10000.0), 1e-4);
}

TEST(Stats, LineFitRecoversSlope) {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
  const auto fit = fit_line(x, y);
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
  EXPECT_NEAR(fit.slope_std_error, 0.0, 1e-12);
}
