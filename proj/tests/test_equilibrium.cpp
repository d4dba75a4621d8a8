#include <gtest/gtest.h>

#include <cmath>

#include "iclust/equilibrium.hpp"

using namespace iclust;

namespace {

ChainParams case1_poisson() {
  ChainParams p;
  p.count = CountDistribution::poisson(0.3);
  p.f = DisplacementDensity::gaussian_sd(0.1);
  p.noise = NoiseSpec::poisson(70.0);
  return p;
}

}  // namespace

TEST(Horizon, Examples) {
  EXPECT_EQ(horizon(100, 0.0, 1e-3), 0);
  EXPECT_EQ(horizon(100, 0.5, 60.0), 0);
  EXPECT_EQ(horizon(100, 0.8, 2.22e-16), 182);
  EXPECT_THROW(horizon(100, 1.0, 1e-3), DomainError);
}

TEST(Horizon, DefiningInequalityAndMonotonicity) {
  for (double s : {0.1, 0.3, 0.5, 0.8, 0.95, 0.99}) {
    int prev = 0;
    for (double eps : {10.0, 1.0, 1e-1, 1e-3, 1e-6, 1e-12}) {
      const int m = horizon(100, s, eps);
      EXPECT_LE(100 * std::pow(s, m + 1), eps);
      if (m > 0) {
        EXPECT_GT(100 * std::pow(s, m), eps);
      }
      EXPECT_GE(m, prev);
      prev = m;
    }
  }
}

TEST(FamilyLoad, Bound) {
  EXPECT_EQ(family_load_bound(1.0, 100.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(family_load_bound(1.0, 100.0, 0.8), 400.0);
  EXPECT_THROW(family_load_bound(1.0, 100.0, 1.0), DomainError);
}

TEST(Family, TrivialCases) {
  ChainParams p = case1_poisson();
  p.count = CountDistribution::poisson(0.0);
  const std::vector<double> x{0.5, 0.5};
  const auto fam = simulate_family(x, p, RandomStream(1), 10);
  ASSERT_EQ(fam.generations.size(), 1u);
  EXPECT_TRUE(fam.generations[0].empty());
  p.count = CountDistribution::fixed(1);
  EXPECT_THROW(simulate_family(x, p, RandomStream(1), 10), DomainError);
}

TEST(Family, TruncationIsReported) {
  ChainParams p = case1_poisson();
  p.count = CountDistribution::bernoulli(0.999);
  const std::vector<double> x{0.0, 0.0};
  const auto fam = simulate_family(x, p, RandomStream(2), 3);
  EXPECT_TRUE(fam.truncated);
}

TEST(Equilibrium, NoReproductionIsOneNoiseDraw) {
  ChainParams p = case1_poisson();
  p.count = CountDistribution::poisson(0.0);
  const EquilibriumConfig cfg{p, Window::unit(), 1e-3, 4.0};
  EXPECT_EQ(cfg.horizon(), 0);
  const auto x = simulate_equilibrium(cfg, RandomStream(3));
  const auto z = clip(sample_noise(p.noise, Window::unit(), RandomStream(3).split(StreamTag::kNoise, 0)), Window::unit());
  EXPECT_EQ(x, z);
}

TEST(Equilibrium, Case1Intensity) {
  const EquilibriumConfig cfg{case1_poisson(), Window::unit(), 1e-3, 4.0};
  EXPECT_NEAR(cfg.rho_g(), 100.0, 1e-12);
  const int reps = 500;
  double s = 0, s2 = 0;
  for (int i = 0; i < reps; ++i) {
    const double n = static_cast<double>(simulate_equilibrium(cfg, RandomStream(4).split(i)).size());
    s += n;
    s2 += n * n;
  }
  const double mean = s / reps;
  EXPECT_NEAR(mean, 100.0, 3 * std::sqrt((s2 / reps - mean * mean) / reps));
}

TEST(Equilibrium, ThreadsDoNotChangeOutput) {
  EquilibriumConfig cfg{case1_poisson(), Window::unit(), 1e-3, 4.0};
  cfg.params.q = 0.2;
  EXPECT_EQ(simulate_equilibrium(cfg, RandomStream(5), Exec{1}), simulate_equilibrium(cfg, RandomStream(5), Exec{3}));
}

TEST(Equilibrium, RejectsSupercritical) {
  EquilibriumConfig cfg{case1_poisson(), Window::unit(), 1e-3, 4.0};
  cfg.params.count = CountDistribution::poisson(1.2);
  EXPECT_THROW(simulate_equilibrium(cfg, RandomStream(1)), DomainError);
  cfg.params.count = CountDistribution::poisson(0.3);
  cfg.params.noise = NoiseSpec::none();
  EXPECT_THROW(simulate_equilibrium(cfg, RandomStream(1)), DomainError);
}
